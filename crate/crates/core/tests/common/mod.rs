#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

use qkc::bayesnet::{Evidence, NodeId, ParamId};
use qkc::circuit::{Circuit, GateKind, NoiseKind};
use qkc::cnf::{CnfVar, Lit, VarMeaning, VarRole, WeightedCnf};
use qkc::ddnnf::ArithmeticCircuit;

/// Gates drawn from every built-in kind except the user-matrix hook.
pub fn random_circuit(rng: &mut impl Rng, qubits: usize, gates: usize) -> Circuit {
    let kinds: Vec<GateKind> = GateKind::ALL
        .into_iter()
        .filter(|k| *k != GateKind::Unitary2 && (qubits > 1 || k.arity() == 1))
        .collect();
    let mut c = Circuit::new(qubits);
    for _ in 0..gates {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let a = rng.gen_range(0..qubits);
        let mut q = vec![a];
        if kind.arity() == 2 {
            let b = (a + rng.gen_range(1..qubits)) % qubits;
            q.push(b);
        }
        let params: Vec<f64> = (0..kind.param_count()).map(|_| rng.gen_range(-3.2..3.2)).collect();
        c.push_gate(kind, &q, &params).unwrap();
    }
    c
}

pub fn random_noise(rng: &mut impl Rng) -> (NoiseKind, Vec<f64>) {
    let kind = NoiseKind::ALL[rng.gen_range(0..NoiseKind::ALL.len())];
    let params = match kind {
        NoiseKind::DepolarizingAsym => {
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..0.3)).collect();
            p
        }
        NoiseKind::GeneralizedAmplitudeDamping => vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5)],
        _ => vec![rng.gen_range(0.0..0.5)],
    };
    (kind, params)
}

/// A random circuit with a random channel after some gates.
pub fn random_noisy_circuit(rng: &mut impl Rng, qubits: usize, gates: usize, noise_rate: f64) -> Circuit {
    let ideal = random_circuit(rng, qubits, gates);
    let mut c = Circuit::new(qubits);
    for op in ideal.ops() {
        c.push(op.clone()).unwrap();
        if rng.gen_bool(noise_rate) {
            let (kind, params) = random_noise(rng);
            c.push_noise(kind, op.qubits()[0], &params).unwrap();
        }
    }
    c
}

/// Positive literals weigh their parameter value, or 0/1 by evidence for
/// indicators; negative literals weigh 1.
pub fn literal_weight(var: &CnfVar, evidence: &Evidence) -> Complex64 {
    match &var.meaning {
        VarMeaning::Indicator { node, value } => {
            if evidence.allows(node, *value) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        VarMeaning::Parameter { .. } => var.weight,
    }
}

pub fn ac_wmc(ac: &ArithmeticCircuit, evidence: &Evidence) -> Complex64 {
    ac.weighted_count(|l: Lit| {
        if l.is_positive() {
            literal_weight(ac.var(l.var()), evidence)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Random clauses over `n` variables whose roles mix query indicators,
/// summed indicators and complex-weighted parameters.
pub fn random_weighted_cnf(rng: &mut impl Rng, n: u32) -> WeightedCnf {
    let vars = (1..=n)
        .map(|v| match rng.gen_range(0..3) {
            0 => CnfVar {
                meaning: VarMeaning::Indicator {
                    node: NodeId(format!("n{v}")),
                    value: 0,
                },
                role: VarRole::Query,
                weight: Complex64::new(1.0, 0.0),
            },
            1 => CnfVar {
                meaning: VarMeaning::Indicator {
                    node: NodeId(format!("n{v}")),
                    value: 0,
                },
                role: VarRole::Summed,
                weight: Complex64::new(1.0, 0.0),
            },
            _ => CnfVar {
                meaning: VarMeaning::Parameter { id: ParamId(v) },
                role: VarRole::Parameter,
                weight: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            },
        })
        .collect();
    let clause_count = rng.gen_range(0..=(3 * n as usize));
    let clauses = (0..clause_count)
        .map(|_| {
            let width = rng.gen_range(1..=3.min(n as usize));
            let mut c: Vec<Lit> = Vec::new();
            while c.len() < width {
                let v = rng.gen_range(1..=n) as i32;
                if c.iter().all(|l| l.var() as i32 != v) {
                    c.push(Lit::from_dimacs(if rng.gen_bool(0.5) { v } else { -v }));
                }
            }
            c
        })
        .collect();
    WeightedCnf {
        vars,
        clauses,
        fixed: vec![],
    }
}

/// Random evidence over the query indicators of `cnf`.
pub fn random_query_evidence(rng: &mut impl Rng, cnf: &WeightedCnf) -> Evidence {
    let mut e = Evidence::new();
    for v in &cnf.vars {
        if let (VarMeaning::Indicator { node, .. }, VarRole::Query) = (&v.meaning, v.role) {
            if rng.gen_bool(0.7) {
                e.set(node.clone(), rng.gen_range(0..2));
            }
        }
    }
    e
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
