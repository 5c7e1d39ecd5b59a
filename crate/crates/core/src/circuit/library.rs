use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;

use super::{CircuitError, GateApp, GateKind, NoiseApp, NoiseKind};
use crate::matrix::{ColumnSupport, Matrix};

pub(crate) const UNITARY_TOL: f64 = 1e-9;
pub(crate) const COMPLETENESS_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Standard unitary for a gate. Two-qubit matrices are indexed by
/// `2 * bit(qubits[0]) + bit(qubits[1])`.
pub fn gate_unitary(app: &GateApp) -> Matrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let theta = app.params.first().copied().unwrap_or(0.0);
    match app.kind {
        GateKind::X => Matrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]),
        GateKind::Y => Matrix::from_row_major(vec![z, c(0.0, -1.0), c(0.0, 1.0), z]),
        GateKind::Z => Matrix::from_real_rows([[1.0, 0.0], [0.0, -1.0]]),
        GateKind::H => Matrix::from_real_rows([
            [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        ]),
        GateKind::S => Matrix::diagonal(&[one, c(0.0, 1.0)]),
        GateKind::T => Matrix::diagonal(&[one, Complex64::from_polar(1.0, FRAC_PI_4)]),
        GateKind::Rx => {
            let (s, co) = (theta / 2.0).sin_cos();
            Matrix::from_row_major(vec![c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
        }
        GateKind::Ry => {
            let (s, co) = (theta / 2.0).sin_cos();
            Matrix::from_real_rows([[co, -s], [s, co]])
        }
        GateKind::Rz => Matrix::diagonal(&[
            Complex64::from_polar(1.0, -theta / 2.0),
            Complex64::from_polar(1.0, theta / 2.0),
        ]),
        GateKind::Cnot => Matrix::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]),
        GateKind::Cz => Matrix::diagonal(&[one, one, one, c(-1.0, 0.0)]),
        GateKind::Cphase => {
            Matrix::diagonal(&[one, one, one, Complex64::from_polar(1.0, theta)])
        }
        GateKind::Swap => Matrix::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]),
        GateKind::Unitary2 => Matrix::from_row_major(
            app.params
                .chunks_exact(2)
                .map(|p| c(p[0], p[1]))
                .collect(),
        ),
    }
}

/// For a 4×4 monomial unitary that leaves one qubit's basis value unchanged,
/// reports which one: `Some(true)` when the first qubit is preserved (it acts
/// as control), `Some(false)` when only the second is. `None` when the matrix
/// is not monomial or changes both qubits.
pub fn controlled_form(u: &Matrix) -> Option<bool> {
    if u.dim() != 4 || !u.is_monomial() {
        return None;
    }
    let image = |col: usize| match u.column_support(col) {
        ColumnSupport::Single(r) => r,
        _ => unreachable!("monomial matrix"),
    };
    if (0..4).all(|col| image(col) >> 1 == col >> 1) {
        Some(true)
    } else if (0..4).all(|col| image(col) & 1 == col & 1) {
        Some(false)
    } else {
        None
    }
}

/// Kraus operators of one noise channel.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<Matrix>,
}

impl KrausSet {
    /// Largest entrywise deviation of `Σ Eₖ†Eₖ` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(Matrix::zeros(2), |acc, e| acc.add(&(&e.dagger() * e)));
        sum.max_abs_diff(&Matrix::identity(2))
    }

    pub fn is_column_monomial(&self) -> bool {
        self.operators.iter().all(Matrix::is_column_monomial)
    }

    pub fn is_diagonal(&self) -> bool {
        self.operators.iter().all(Matrix::is_diagonal)
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

fn pauli(index: usize) -> Matrix {
    let app = |kind| GateApp {
        kind,
        qubits: vec![0],
        params: vec![],
    };
    match index {
        0 => Matrix::identity(2),
        1 => gate_unitary(&app(GateKind::X)),
        2 => gate_unitary(&app(GateKind::Y)),
        _ => gate_unitary(&app(GateKind::Z)),
    }
}

/// Mixture `Σ pₖ Uₖ ρ Uₖ†` of Pauli operators as Kraus operators `√pₖ·Uₖ`.
fn pauli_mixture(probs: [f64; 4]) -> Vec<Matrix> {
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| pauli(i).scale(c(p.max(0.0).sqrt(), 0.0)))
        .collect()
}

/// Kraus operators for a noise application. Mixtures are returned as
/// `√pₖ·Uₖ`; operators that vanish for the given strength are dropped, so
/// e.g. a zero-probability bit flip yields the identity alone.
pub fn kraus_set(app: &NoiseApp) -> Result<KrausSet, CircuitError> {
    let p = &app.params;
    let ops = match app.kind {
        NoiseKind::BitFlip => pauli_mixture([1.0 - p[0], p[0], 0.0, 0.0]),
        NoiseKind::PhaseFlip => pauli_mixture([1.0 - p[0], 0.0, 0.0, p[0]]),
        NoiseKind::DepolarizingSym => {
            let q = p[0] / 3.0;
            pauli_mixture([1.0 - p[0], q, q, q])
        }
        NoiseKind::DepolarizingAsym => {
            pauli_mixture([1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]])
        }
        NoiseKind::AmplitudeDamping => {
            let g = p[0];
            vec![
                Matrix::from_real_rows([[1.0, 0.0], [0.0, (1.0 - g).sqrt()]]),
                Matrix::from_real_rows([[0.0, g.sqrt()], [0.0, 0.0]]),
            ]
        }
        NoiseKind::GeneralizedAmplitudeDamping => {
            let (g, q) = (p[0], p[1]);
            let (sq, sr) = (q.sqrt(), (1.0 - q).sqrt());
            vec![
                Matrix::from_real_rows([[sq, 0.0], [0.0, sq * (1.0 - g).sqrt()]]),
                Matrix::from_real_rows([[0.0, sq * g.sqrt()], [0.0, 0.0]]),
                Matrix::from_real_rows([[sr * (1.0 - g).sqrt(), 0.0], [0.0, sr]]),
                Matrix::from_real_rows([[0.0, 0.0], [sr * g.sqrt(), 0.0]]),
            ]
        }
        NoiseKind::PhaseDamping => {
            let g = p[0];
            vec![
                Matrix::from_real_rows([[1.0, 0.0], [0.0, (1.0 - g).sqrt()]]),
                Matrix::from_real_rows([[0.0, 0.0], [0.0, g.sqrt()]]),
            ]
        }
    };
    let set = KrausSet {
        operators: ops.into_iter().filter(|m| !m.is_zero()).collect(),
    };
    let deviation = set.completeness_deviation();
    if deviation > COMPLETENESS_TOL {
        return Err(CircuitError::Completeness {
            kind: app.kind.mnemonic(),
            deviation,
        });
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gate(kind: GateKind, params: &[f64]) -> GateApp {
        GateApp {
            kind,
            qubits: (0..kind.arity()).collect(),
            params: params.to_vec(),
        }
    }

    fn noise(kind: NoiseKind, params: &[f64]) -> NoiseApp {
        NoiseApp {
            kind,
            qubit: 0,
            params: params.to_vec(),
        }
    }

    #[test]
    fn hadamard_matrix() {
        let h = gate_unitary(&gate(GateKind::H, &[]));
        let s = 1.0 / 2f64.sqrt();
        let expected = Matrix::from_real_rows([[s, s], [s, -s]]);
        assert!(h.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn cnot_is_permutation() {
        let u = gate_unitary(&gate(GateKind::Cnot, &[]));
        let rows = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]];
        for (r, row) in rows.iter().enumerate() {
            for (col, &v) in row.iter().enumerate() {
                assert_eq!(u.get(r, col), c(v as f64, 0.0));
            }
        }
        assert_eq!(controlled_form(&u), Some(true));
    }

    #[test]
    fn zero_angle_rz_is_identity() {
        let u = gate_unitary(&gate(GateKind::Rz, &[0.0]));
        assert_eq!(u.max_abs_diff(&Matrix::identity(2)), 0.0);
    }

    #[test]
    fn controlled_forms() {
        let cz = gate_unitary(&gate(GateKind::Cz, &[]));
        assert_eq!(controlled_form(&cz), Some(true));
        let swap = gate_unitary(&gate(GateKind::Swap, &[]));
        assert_eq!(controlled_form(&swap), None);
        // CNOT with control on the second qubit.
        let rev = Matrix::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(controlled_form(&rev), Some(false));
    }

    #[test]
    fn phase_damping_operators() {
        let k = kraus_set(&noise(NoiseKind::PhaseDamping, &[0.36])).unwrap();
        assert_eq!(k.len(), 2);
        let e0 = &k.operators[0];
        assert!((e0.get(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((e0.get(1, 1) - c(0.8, 0.0)).norm() < 1e-15);
        let e1 = &k.operators[1];
        assert!((e1.get(1, 1) - c(0.6, 0.0)).norm() < 1e-15);
        assert_eq!(e1.get(0, 0), c(0.0, 0.0));
        assert!(k.is_diagonal());
    }

    #[test]
    fn zero_bit_flip_is_identity() {
        let k = kraus_set(&noise(NoiseKind::BitFlip, &[0.0])).unwrap();
        assert_eq!(k.operators, vec![Matrix::identity(2)]);
    }

    #[test]
    fn symmetric_depolarizing_operators() {
        let p = 0.005;
        let k = kraus_set(&noise(NoiseKind::DepolarizingSym, &[p])).unwrap();
        assert_eq!(k.len(), 4);
        let w = (p / 3.0).sqrt();
        let expected = [
            Matrix::identity(2).scale(c((1.0 - p).sqrt(), 0.0)),
            pauli(1).scale(c(w, 0.0)),
            pauli(2).scale(c(w, 0.0)),
            pauli(3).scale(c(w, 0.0)),
        ];
        for (got, want) in k.operators.iter().zip(&expected) {
            assert!(got.max_abs_diff(want) < 1e-15);
        }
        // Σ E†E computed entry by entry.
        let mut sum = [[c(0.0, 0.0); 2]; 2];
        for e in &k.operators {
            for (i, row) in sum.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    for m in 0..2 {
                        *cell += e.get(m, i).conj() * e.get(m, j);
                    }
                }
            }
        }
        assert!((sum[0][0] - 1.0).norm() < 1e-12 && (sum[1][1] - 1.0).norm() < 1e-12);
        assert!(sum[0][1].norm() < 1e-12 && sum[1][0].norm() < 1e-12);
    }

    fn any_gate() -> impl Strategy<Value = GateApp> {
        let kinds: Vec<GateKind> = GateKind::ALL
            .into_iter()
            .filter(|k| *k != GateKind::Unitary2)
            .collect();
        (proptest::sample::select(kinds), -10.0f64..10.0).prop_map(|(kind, theta)| {
            let params = vec![theta; kind.param_count()];
            gate(kind, &params)
        })
    }

    fn any_noise() -> impl Strategy<Value = NoiseApp> {
        (
            proptest::sample::select(NoiseKind::ALL.to_vec()),
            proptest::collection::vec(0.0f64..=1.0, 3),
        )
            .prop_map(|(kind, mut ps)| {
                if kind == NoiseKind::DepolarizingAsym {
                    let total: f64 = ps.iter().sum();
                    if total > 1.0 {
                        ps.iter_mut().for_each(|p| *p /= total);
                    }
                }
                ps.truncate(kind.param_count());
                noise(kind, &ps)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn every_gate_is_unitary(app in any_gate()) {
            prop_assert!(gate_unitary(&app).is_unitary(1e-9));
        }

        #[test]
        fn every_channel_is_complete_and_column_monomial(app in any_noise()) {
            let k = kraus_set(&app).unwrap();
            prop_assert!(k.completeness_deviation() <= 1e-9);
            prop_assert!(k.is_column_monomial());
        }
    }
}
