//! Quantum circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered list of gate and noise applications on a fixed
//! number of qubits, starting from a computational basis state. Gate
//! semantics live in [`gate_unitary`], noise semantics in [`kraus_set`], and
//! the line-based text format in [`parse_circuit`] / [`serialize_circuit`].

mod library;
mod text;

use std::fmt;

use thiserror::Error;

pub use library::{controlled_form, gate_unitary, kraus_set, KrausSet};
pub use text::{parse_circuit, serialize_circuit, ParseError};

/// Gate identifiers.
///
/// `Unitary2` is the extension hook for user supplied two-qubit gates: its
/// 32 parameters are the row-major (re, im) pairs of a 4×4 matrix. Only
/// monomial matrices with one preserved qubit can be encoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    T,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
    Cphase,
    Swap,
    Unitary2,
}

impl GateKind {
    pub const ALL: [GateKind; 14] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::T,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Cphase,
        GateKind::Swap,
        GateKind::Unitary2,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Cphase | GateKind::Swap | GateKind::Unitary2 => 2,
            _ => 1,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Cphase => 1,
            GateKind::Unitary2 => 32,
            _ => 0,
        }
    }

    /// Mnemonic used by the text format.
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
            GateKind::Cphase => "cphase",
            GateKind::Swap => "swap",
            GateKind::Unitary2 => "u2",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.mnemonic() == name)
    }
}

/// Noise channel identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    BitFlip,
    PhaseFlip,
    DepolarizingSym,
    DepolarizingAsym,
    AmplitudeDamping,
    GeneralizedAmplitudeDamping,
    PhaseDamping,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 7] = [
        NoiseKind::BitFlip,
        NoiseKind::PhaseFlip,
        NoiseKind::DepolarizingSym,
        NoiseKind::DepolarizingAsym,
        NoiseKind::AmplitudeDamping,
        NoiseKind::GeneralizedAmplitudeDamping,
        NoiseKind::PhaseDamping,
    ];

    pub fn param_count(self) -> usize {
        match self {
            NoiseKind::DepolarizingAsym => 3,
            NoiseKind::GeneralizedAmplitudeDamping => 2,
            _ => 1,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            NoiseKind::BitFlip => "bf",
            NoiseKind::PhaseFlip => "pf",
            NoiseKind::DepolarizingSym => "dep",
            NoiseKind::DepolarizingAsym => "adep",
            NoiseKind::AmplitudeDamping => "ad",
            NoiseKind::GeneralizedAmplitudeDamping => "gad",
            NoiseKind::PhaseDamping => "pd",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<NoiseKind> {
        NoiseKind::ALL.into_iter().find(|k| k.mnemonic() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateApp {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseApp {
    pub kind: NoiseKind,
    pub qubit: usize,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Gate(GateApp),
    Noise(NoiseApp),
}

impl Op {
    pub fn qubits(&self) -> &[usize] {
        match self {
            Op::Gate(g) => &g.qubits,
            Op::Noise(n) => std::slice::from_ref(&n.qubit),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("circuit must have at least one qubit")]
    NoQubits,
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("gate `{kind}` applied twice to qubit {qubit}")]
    DuplicateQubit { kind: &'static str, qubit: usize },
    #[error("`{kind}` expects {expected} qubit(s), got {found}")]
    Arity {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("`{kind}` expects {expected} parameter(s), got {found}")]
    ParamCount {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("`{kind}` parameter {value} is not finite")]
    NonFinite { kind: &'static str, value: f64 },
    #[error("`{kind}` parameter {value} outside [0, 1]")]
    ParamRange { kind: &'static str, value: f64 },
    #[error("`{kind}` probabilities sum to {sum} > 1")]
    ProbabilitySum { kind: &'static str, sum: f64 },
    #[error("initial state has {found} bits, circuit has {expected} qubits")]
    InitialStateLength { expected: usize, found: usize },
    #[error("Kraus operators of `{kind}` violate completeness (max deviation {deviation:e})")]
    Completeness { kind: &'static str, deviation: f64 },
}

/// A noisy quantum circuit over `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<Op>,
    initial_state: Vec<bool>,
}

impl Circuit {
    /// Empty circuit starting in |0…0⟩. Panics if `num_qubits == 0`.
    pub fn new(num_qubits: usize) -> Self {
        assert!(num_qubits > 0, "circuit must have at least one qubit");
        Circuit {
            num_qubits,
            ops: Vec::new(),
            initial_state: vec![false; num_qubits],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn initial_state(&self) -> &[bool] {
        &self.initial_state
    }

    pub fn set_initial_state(&mut self, bits: &[bool]) -> Result<(), CircuitError> {
        if bits.len() != self.num_qubits {
            return Err(CircuitError::InitialStateLength {
                expected: self.num_qubits,
                found: bits.len(),
            });
        }
        self.initial_state = bits.to_vec();
        Ok(())
    }

    pub fn gate_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Op::Gate(_))).count()
    }

    pub fn noise_count(&self) -> usize {
        self.ops.len() - self.gate_count()
    }

    /// Appends a validated operation.
    pub fn push(&mut self, op: Op) -> Result<&mut Self, CircuitError> {
        self.check_op(&op)?;
        self.ops.push(op);
        Ok(self)
    }

    pub fn push_gate(
        &mut self,
        kind: GateKind,
        qubits: &[usize],
        params: &[f64],
    ) -> Result<&mut Self, CircuitError> {
        self.push(Op::Gate(GateApp {
            kind,
            qubits: qubits.to_vec(),
            params: params.to_vec(),
        }))
    }

    pub fn push_noise(
        &mut self,
        kind: NoiseKind,
        qubit: usize,
        params: &[f64],
    ) -> Result<&mut Self, CircuitError> {
        self.push(Op::Noise(NoiseApp {
            kind,
            qubit,
            params: params.to_vec(),
        }))
    }

    fn gate(&mut self, kind: GateKind, qubits: &[usize], params: &[f64]) -> &mut Self {
        if let Err(e) = self.push_gate(kind, qubits, params) {
            panic!("invalid gate: {e}");
        }
        self
    }

    // Chainable builders; these panic on invalid operands.

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::X, &[q], &[])
    }
    pub fn y(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::Y, &[q], &[])
    }
    pub fn z(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::Z, &[q], &[])
    }
    pub fn h(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::H, &[q], &[])
    }
    pub fn s(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::S, &[q], &[])
    }
    pub fn t(&mut self, q: usize) -> &mut Self {
        self.gate(GateKind::T, &[q], &[])
    }
    pub fn rx(&mut self, q: usize, theta: f64) -> &mut Self {
        self.gate(GateKind::Rx, &[q], &[theta])
    }
    pub fn ry(&mut self, q: usize, theta: f64) -> &mut Self {
        self.gate(GateKind::Ry, &[q], &[theta])
    }
    pub fn rz(&mut self, q: usize, theta: f64) -> &mut Self {
        self.gate(GateKind::Rz, &[q], &[theta])
    }
    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.gate(GateKind::Cnot, &[control, target], &[])
    }
    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.gate(GateKind::Cz, &[a, b], &[])
    }
    pub fn cphase(&mut self, a: usize, b: usize, theta: f64) -> &mut Self {
        self.gate(GateKind::Cphase, &[a, b], &[theta])
    }
    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.gate(GateKind::Swap, &[a, b], &[])
    }

    pub fn noise(&mut self, kind: NoiseKind, q: usize, params: &[f64]) -> &mut Self {
        if let Err(e) = self.push_noise(kind, q, params) {
            panic!("invalid noise: {e}");
        }
        self
    }

    fn check_qubit(&self, q: usize) -> Result<(), CircuitError> {
        if q >= self.num_qubits {
            return Err(CircuitError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_op(&self, op: &Op) -> Result<(), CircuitError> {
        match op {
            Op::Gate(g) => {
                let kind = g.kind.mnemonic();
                if g.qubits.len() != g.kind.arity() {
                    return Err(CircuitError::Arity {
                        kind,
                        expected: g.kind.arity(),
                        found: g.qubits.len(),
                    });
                }
                if g.params.len() != g.kind.param_count() {
                    return Err(CircuitError::ParamCount {
                        kind,
                        expected: g.kind.param_count(),
                        found: g.params.len(),
                    });
                }
                for &q in &g.qubits {
                    self.check_qubit(q)?;
                }
                if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
                    return Err(CircuitError::DuplicateQubit {
                        kind,
                        qubit: g.qubits[0],
                    });
                }
                if let Some(&value) = g.params.iter().find(|p| !p.is_finite()) {
                    return Err(CircuitError::NonFinite { kind, value });
                }
            }
            Op::Noise(n) => {
                let kind = n.kind.mnemonic();
                if n.params.len() != n.kind.param_count() {
                    return Err(CircuitError::ParamCount {
                        kind,
                        expected: n.kind.param_count(),
                        found: n.params.len(),
                    });
                }
                self.check_qubit(n.qubit)?;
                for &value in &n.params {
                    if !value.is_finite() {
                        return Err(CircuitError::NonFinite { kind, value });
                    }
                    if !(0.0..=1.0).contains(&value) {
                        return Err(CircuitError::ParamRange { kind, value });
                    }
                }
                if n.kind == NoiseKind::DepolarizingAsym {
                    let sum: f64 = n.params.iter().sum();
                    if sum > 1.0 {
                        return Err(CircuitError::ProbabilitySum { kind, sum });
                    }
                }
            }
        }
        Ok(())
    }
}

/// One problem found by [`validate_circuit`].
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub op_index: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "op {}: {}", self.op_index, self.message)
    }
}

/// Checks that every operation has a Bayesian-network encoding. An empty list
/// means the circuit can be compiled.
pub fn validate_circuit(circuit: &Circuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (op_index, op) in circuit.ops().iter().enumerate() {
        match op {
            Op::Gate(g) if g.kind.arity() == 2 && g.kind != GateKind::Swap => {
                let u = gate_unitary(g);
                if !u.is_unitary(library::UNITARY_TOL) {
                    out.push(Diagnostic {
                        op_index,
                        message: format!("gate `{}` is not unitary", g.kind.mnemonic()),
                    });
                } else if controlled_form(&u).is_none() {
                    out.push(Diagnostic {
                        op_index,
                        message: format!(
                            "gate `{}` not encodable; decompose into single-qubit and controlled monomial gates",
                            g.kind.mnemonic()
                        ),
                    });
                }
            }
            Op::Gate(_) => {}
            Op::Noise(n) => match kraus_set(n) {
                Ok(k) => {
                    if !k.is_column_monomial() {
                        out.push(Diagnostic {
                            op_index,
                            message: format!(
                                "noise `{}` has a Kraus operator with two nonzero entries in one column",
                                n.kind.mnemonic()
                            ),
                        });
                    }
                }
                Err(e) => out.push(Diagnostic {
                    op_index,
                    message: e.to_string(),
                }),
            },
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy_bell() -> Circuit {
        let mut c = Circuit::new(2);
        c.h(0).noise(NoiseKind::PhaseDamping, 0, &[0.36]).cnot(0, 1);
        c
    }

    #[test]
    fn noisy_bell_validates() {
        assert!(validate_circuit(&noisy_bell()).is_empty());
    }

    #[test]
    fn swap_needs_no_table() {
        let mut c = Circuit::new(3);
        c.h(0).swap(0, 2).cnot(2, 1);
        assert!(validate_circuit(&c).is_empty());
    }

    #[test]
    fn dense_two_qubit_gate_is_rejected() {
        // H ⊗ I is unitary but not monomial.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rows = [
            [s, 0.0, s, 0.0],
            [0.0, s, 0.0, s],
            [s, 0.0, -s, 0.0],
            [0.0, s, 0.0, -s],
        ];
        let params: Vec<f64> = rows.iter().flatten().flat_map(|&x| [x, 0.0]).collect();
        let mut c = Circuit::new(2);
        c.push_gate(GateKind::Unitary2, &[0, 1], &params).unwrap();
        let diags = validate_circuit(&c);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("not encodable; decompose"));
    }

    #[test]
    fn builder_rejects_bad_operands() {
        let mut c = Circuit::new(2);
        assert!(matches!(
            c.push_gate(GateKind::H, &[2], &[]),
            Err(CircuitError::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            c.push_gate(GateKind::Cnot, &[1, 1], &[]),
            Err(CircuitError::DuplicateQubit { .. })
        ));
        assert!(matches!(
            c.push_noise(NoiseKind::BitFlip, 0, &[1.5]),
            Err(CircuitError::ParamRange { .. })
        ));
        assert!(matches!(
            c.push_noise(NoiseKind::DepolarizingAsym, 0, &[0.5, 0.4, 0.3]),
            Err(CircuitError::ProbabilitySum { .. })
        ));
        assert!(matches!(
            c.push_gate(GateKind::Rz, &[0], &[f64::NAN]),
            Err(CircuitError::NonFinite { .. })
        ));
        assert_eq!(c.ops().len(), 0);
    }
}
