//! Brute-force reference simulators.
//!
//! Dense state-vector and density-matrix simulation plus exhaustive weighted
//! model counting. Nothing here touches the compilation pipeline; the only
//! shared pieces are the gate and Kraus libraries.

use num_complex::Complex64;
use thiserror::Error;

use crate::bayesnet::Evidence;
use crate::circuit::{gate_unitary, kraus_set, Circuit, Op};
use crate::cnf::{VarMeaning, WeightedCnf};
use crate::matrix::Matrix;

pub const MAX_STATEVECTOR_QUBITS: usize = 20;
pub const MAX_DENSITY_QUBITS: usize = 10;
pub const MAX_WMC_VARS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("circuit contains noise; the state-vector oracle only handles ideal circuits")]
    NoisePresent,
    #[error("{what} is {size}, above the oracle limit of {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("expected {expected} noise-event values, got {found}")]
    EventCount { expected: usize, found: usize },
    #[error("noise event value {value} out of range for operation {op_index}")]
    EventValue { op_index: usize, value: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn num_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub entries: Matrix,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries.get(row, col)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }
}

/// Applies `m` (2×2 or 4×4) to `qubits` of a vector over `n` qubits,
/// qubit 0 being the most significant bit of the index.
fn apply(state: &mut [Complex64], n: usize, qubits: &[usize], m: &Matrix) {
    let zero = Complex64::new(0.0, 0.0);
    match qubits {
        [q] => {
            let bit = 1usize << (n - 1 - q);
            for i in 0..state.len() {
                if i & bit != 0 {
                    continue;
                }
                let (a0, a1) = (state[i], state[i | bit]);
                state[i] = m.get(0, 0) * a0 + m.get(0, 1) * a1;
                state[i | bit] = m.get(1, 0) * a0 + m.get(1, 1) * a1;
            }
        }
        [q0, q1] => {
            let b0 = 1usize << (n - 1 - q0);
            let b1 = 1usize << (n - 1 - q1);
            for i in 0..state.len() {
                if i & (b0 | b1) != 0 {
                    continue;
                }
                let idx = [i, i | b1, i | b0, i | b0 | b1];
                let old = idx.map(|k| state[k]);
                for (r, &k) in idx.iter().enumerate() {
                    let mut acc = zero;
                    for (col, &a) in old.iter().enumerate() {
                        acc += m.get(r, col) * a;
                    }
                    state[k] = acc;
                }
            }
        }
        _ => unreachable!("gates act on one or two qubits"),
    }
}

fn conj(m: &Matrix) -> Matrix {
    Matrix::from_row_major(m.as_slice().iter().map(|z| z.conj()).collect())
}

fn basis_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn basis_state(n: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Dense simulation of an ideal circuit from its initial basis state.
pub fn statevector_simulate(c: &Circuit) -> Result<StateVector, OracleError> {
    if c.noise_count() > 0 {
        return Err(OracleError::NoisePresent);
    }
    trajectory(c, &[])
}

/// Unnormalized state after applying gates and, for the k-th noise
/// operation, the Kraus operator with index `events[k]`.
pub fn trajectory(c: &Circuit, events: &[usize]) -> Result<StateVector, OracleError> {
    let n = c.num_qubits();
    if n > MAX_STATEVECTOR_QUBITS {
        return Err(OracleError::TooLarge {
            what: "qubit count",
            size: n,
            limit: MAX_STATEVECTOR_QUBITS,
        });
    }
    if events.len() != c.noise_count() {
        return Err(OracleError::EventCount {
            expected: c.noise_count(),
            found: events.len(),
        });
    }
    let mut state = basis_state(n, basis_index(c.initial_state()));
    let mut next_event = events.iter();
    for (op_index, op) in c.ops().iter().enumerate() {
        match op {
            Op::Gate(g) => apply(&mut state, n, &g.qubits, &gate_unitary(g)),
            Op::Noise(noise) => {
                let k = kraus_set(noise).expect("validated circuit");
                let value = *next_event.next().unwrap();
                let e = k
                    .operators
                    .get(value)
                    .ok_or(OracleError::EventValue { op_index, value })?;
                apply(&mut state, n, &[noise.qubit], e);
            }
        }
    }
    Ok(StateVector { amplitudes: state })
}

/// Noise-event domain sizes, one per noise operation in order.
pub fn event_domains(c: &Circuit) -> Vec<usize> {
    c.ops()
        .iter()
        .filter_map(|op| match op {
            Op::Noise(n) => Some(kraus_set(n).expect("validated circuit").len()),
            Op::Gate(_) => None,
        })
        .collect()
}

/// Dense density-matrix simulation: `UρU†` for gates and `Σ EₖρEₖ†` for
/// noise.
pub fn density_matrix_simulate(c: &Circuit) -> Result<DensityMatrix, OracleError> {
    let n = c.num_qubits();
    if n > MAX_DENSITY_QUBITS {
        return Err(OracleError::TooLarge {
            what: "qubit count",
            size: n,
            limit: MAX_DENSITY_QUBITS,
        });
    }
    // ρ is held as a vector over 2n qubits: ket qubit q is qubit q, bra
    // qubit q is qubit n + q, so U ρ U† is (U ⊗ U*) applied to it.
    let dim = 1usize << n;
    let start = basis_index(c.initial_state());
    let mut rho = basis_state(2 * n, start * dim + start);
    for op in c.ops() {
        match op {
            Op::Gate(g) => {
                let u = gate_unitary(g);
                let bra: Vec<usize> = g.qubits.iter().map(|q| q + n).collect();
                apply(&mut rho, 2 * n, &g.qubits, &u);
                apply(&mut rho, 2 * n, &bra, &conj(&u));
            }
            Op::Noise(noise) => {
                let k = kraus_set(noise).expect("validated circuit");
                let mut acc = vec![Complex64::new(0.0, 0.0); rho.len()];
                for e in &k.operators {
                    let mut term = rho.clone();
                    apply(&mut term, 2 * n, &[noise.qubit], e);
                    apply(&mut term, 2 * n, &[noise.qubit + n], &conj(e));
                    for (a, t) in acc.iter_mut().zip(term) {
                        *a += t;
                    }
                }
                rho = acc;
            }
        }
    }
    Ok(DensityMatrix {
        entries: Matrix::from_row_major(rho),
    })
}

/// Exhaustive weighted model count. Indicator literals weigh 1 unless the
/// evidence rules their value out; parameter literals weigh their value when
/// true and 1 when false. Variables fixed by unit resolution contribute
/// their literal's weight.
pub fn brute_force_wmc(cnf: &WeightedCnf, evidence: &Evidence) -> Result<Complex64, OracleError> {
    let n = cnf.num_vars();
    if n > MAX_WMC_VARS {
        return Err(OracleError::TooLarge {
            what: "variable count",
            size: n,
            limit: MAX_WMC_VARS,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    // (weight if true, weight if false)
    let literal_weights = |meaning: &VarMeaning, w: Complex64| -> (Complex64, Complex64) {
        match meaning {
            VarMeaning::Indicator { node, value } => {
                (if evidence.allows(node, *value) { one } else { zero }, one)
            }
            VarMeaning::Parameter { .. } => (w, one),
        }
    };
    let weights: Vec<(Complex64, Complex64)> = cnf
        .vars
        .iter()
        .map(|v| literal_weights(&v.meaning, v.weight))
        .collect();
    let fixed: Complex64 = cnf
        .fixed
        .iter()
        .map(|f| {
            let (t, e) = literal_weights(&f.var.meaning, f.var.weight);
            if f.value {
                t
            } else {
                e
            }
        })
        .product();

    let masks: Vec<(u32, u32)> = cnf
        .clauses
        .iter()
        .map(|c| {
            c.iter().fold((0, 0), |(pos, neg), l| {
                let bit = 1u32 << (l.var() - 1);
                if l.is_positive() {
                    (pos | bit, neg)
                } else {
                    (pos, neg | bit)
                }
            })
        })
        .collect();

    let mut total = zero;
    for m in 0u32..(1u32 << n) {
        if !masks.iter().all(|&(pos, neg)| (m & pos) | (!m & neg) != 0) {
            continue;
        }
        let mut w = one;
        for (i, &(t, e)) in weights.iter().enumerate() {
            w *= if m >> i & 1 == 1 { t } else { e };
        }
        total += w;
    }
    Ok(total * fixed)
}
