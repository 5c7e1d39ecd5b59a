//! Benchmark workloads: QAOA Max-Cut, VQE Ising, random circuits, a suite
//! of textbook algorithms, noise injection and compile-once parameter
//! sweeps.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, NoiseApp, NoiseKind, Op};
use crate::ddnnf::{compilations_on_this_thread, CompileOptions};
use crate::pipeline::{compile_circuit, PipelineError};

pub const ALGORITHMS: [&str; 8] = [
    "bell",
    "teleport-core",
    "deutsch-jozsa",
    "bernstein-vazirani",
    "simon",
    "hidden-shift",
    "qft",
    "grover",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("no 3-regular graph on {0} vertices (need an even count of at least 4)")]
    NoRegularGraph(usize),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("invalid workload: {0}")]
    Invalid(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Query(#[from] crate::query::QueryError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkloadSpec {
    Qaoa {
        n: usize,
        p: usize,
        seed: u64,
        gammas: Vec<f64>,
        betas: Vec<f64>,
    },
    VqeIsing {
        rows: usize,
        cols: usize,
        steps: usize,
        angles: Vec<f64>,
    },
    Rcs {
        n: usize,
        depth: usize,
        seed: u64,
    },
    Algorithm {
        name: String,
    },
}

impl WorkloadSpec {
    pub fn build(&self) -> Result<Circuit, BenchError> {
        match self {
            WorkloadSpec::Qaoa {
                n,
                p,
                seed,
                gammas,
                betas,
            } => build_qaoa_maxcut(*n, *p, *seed, gammas, betas),
            WorkloadSpec::VqeIsing {
                rows,
                cols,
                steps,
                angles,
            } => build_vqe_ising(*rows, *cols, *steps, angles),
            WorkloadSpec::Rcs { n, depth, seed } => build_rcs(*n, *depth, *seed),
            WorkloadSpec::Algorithm { name } => build_algorithm(name),
        }
    }
}

/// Random 3-regular graph by the pairing model, retried until simple.
pub fn random_3_regular(n: usize, seed: u64) -> Result<Vec<(usize, usize)>, BenchError> {
    if n < 4 || n % 2 == 1 {
        return Err(BenchError::NoRegularGraph(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut points: Vec<usize> = (0..3 * n).map(|i| i / 3).collect();
        points.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = points
            .chunks_exact(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        edges.sort_unstable();
        let simple = edges.iter().all(|&(a, b)| a != b) && edges.windows(2).all(|w| w[0] != w[1]);
        if simple {
            return Ok(edges);
        }
    }
}

fn angle(list: &[f64], i: usize, what: &str) -> Result<f64, BenchError> {
    let v = match list.len() {
        0 => return Err(BenchError::Invalid(format!("no {what} angles given"))),
        1 => list[0],
        _ => *list
            .get(i)
            .ok_or_else(|| BenchError::Invalid(format!("missing {what} angle for layer {i}")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(BenchError::Invalid(format!("{what} angle is not finite")))
    }
}

/// QAOA for Max-Cut on a random 3-regular graph: an H layer, then per
/// iteration a `CNOT·RZ(2γ)·CNOT` term per edge and an `RX(2β)` mixer. A
/// single γ or β is reused for every iteration.
pub fn build_qaoa_maxcut(
    n: usize,
    p: usize,
    seed: u64,
    gammas: &[f64],
    betas: &[f64],
) -> Result<Circuit, BenchError> {
    let edges = random_3_regular(n, seed)?;
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.h(q);
    }
    for layer in 0..p {
        let gamma = angle(gammas, layer, "gamma")?;
        let beta = angle(betas, layer, "beta")?;
        for &(a, b) in &edges {
            c.cnot(a, b).rz(b, 2.0 * gamma).cnot(a, b);
        }
        for q in 0..n {
            c.rx(q, 2.0 * beta);
        }
    }
    Ok(c)
}

/// Nearest-neighbour pairs of a row-major grid.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for col in 0..cols {
            let q = r * cols + col;
            if col + 1 < cols {
                edges.push((q, q + 1));
            }
            if r + 1 < rows {
                edges.push((q, q + cols));
            }
        }
    }
    edges
}

/// Trotterized Ising ansatz on a grid. Each step applies `CNOT·RZ(J)·CNOT`
/// on every lattice edge, then `RX(a)` and `RZ(b)` on every qubit. Angles
/// are `[J, a, b]` shared by all steps or three per step.
pub fn build_vqe_ising(
    rows: usize,
    cols: usize,
    steps: usize,
    angles: &[f64],
) -> Result<Circuit, BenchError> {
    let n = rows * cols;
    if n < 2 {
        return Err(BenchError::Invalid("grid needs at least two sites".into()));
    }
    if steps > 0 && angles.len() != 3 && angles.len() != 3 * steps {
        return Err(BenchError::Invalid(format!(
            "expected 3 or {} angles, got {}",
            3 * steps,
            angles.len()
        )));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(BenchError::Invalid("angles must be finite".into()));
    }
    let edges = grid_edges(rows, cols);
    let mut c = Circuit::new(n);
    for step in 0..steps {
        let base = if angles.len() == 3 { 0 } else { 3 * step };
        let (j, a, b) = (angles[base], angles[base + 1], angles[base + 2]);
        for &(x, y) in &edges {
            c.cnot(x, y).rz(y, j).cnot(x, y);
        }
        for q in 0..n {
            c.rx(q, a).rz(q, b);
        }
    }
    Ok(c)
}

/// Random circuit: an H layer, then per layer CZ on alternating neighbour
/// pairs of a line and a random gate from {RX(π/2), RY(π/2), T} on every
/// qubit, never repeating a qubit's previous choice.
pub fn build_rcs(n: usize, depth: usize, seed: u64) -> Result<Circuit, BenchError> {
    if n == 0 {
        return Err(BenchError::Invalid("need at least one qubit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.h(q);
    }
    let mut last = vec![usize::MAX; n];
    for layer in 0..depth {
        let mut q = layer % 2;
        while q + 1 < n {
            c.cz(q, q + 1);
            q += 2;
        }
        for (q, prev) in last.iter_mut().enumerate() {
            let mut g = rng.gen_range(0..3);
            while g == *prev {
                g = rng.gen_range(0..3);
            }
            *prev = g;
            match g {
                0 => c.rx(q, FRAC_PI_2),
                1 => c.ry(q, FRAC_PI_2),
                _ => c.t(q),
            };
        }
    }
    Ok(c)
}

/// `CCZ` from controlled phases and CNOTs.
fn ccz(c: &mut Circuit, a: usize, b: usize, t: usize) {
    c.cphase(b, t, FRAC_PI_2)
        .cnot(a, b)
        .cphase(b, t, -FRAC_PI_2)
        .cnot(a, b)
        .cphase(a, t, FRAC_PI_2);
}

pub fn build_algorithm(name: &str) -> Result<Circuit, BenchError> {
    let c = match name {
        "bell" => {
            let mut c = Circuit::new(2);
            c.h(0).cnot(0, 1);
            c
        }
        // Teleport RY(1.1)|0⟩ from qubit 0 to qubit 2 with the measurements
        // deferred into controlled corrections.
        "teleport-core" => {
            let mut c = Circuit::new(3);
            c.ry(0, 1.1)
                .h(1)
                .cnot(1, 2)
                .cnot(0, 1)
                .h(0)
                .cnot(1, 2)
                .cz(0, 2);
            c
        }
        // Balanced oracle f(x) = x0 ⊕ x1 ⊕ x2; every input qubit reads 1.
        "deutsch-jozsa" => {
            let mut c = Circuit::new(4);
            c.x(3);
            for q in 0..4 {
                c.h(q);
            }
            for q in 0..3 {
                c.cnot(q, 3);
            }
            for q in 0..4 {
                c.h(q);
            }
            c
        }
        // Phase oracle for secret 1011.
        "bernstein-vazirani" => {
            let mut c = Circuit::new(4);
            for q in 0..4 {
                c.h(q);
            }
            for (q, bit) in [1, 0, 1, 1].into_iter().enumerate() {
                if bit == 1 {
                    c.z(q);
                }
            }
            for q in 0..4 {
                c.h(q);
            }
            c
        }
        // Two-to-one function with period s = 11.
        "simon" => {
            let mut c = Circuit::new(4);
            c.h(0).h(1);
            c.cnot(0, 2).cnot(1, 3).cnot(0, 2).cnot(0, 3);
            c.h(0).h(1);
            c
        }
        // Bent function x0x1 ⊕ x2x3 (its own dual), shift 1101.
        "hidden-shift" => {
            let shift = [1, 1, 0, 1];
            let mut c = Circuit::new(4);
            let layer_h = |c: &mut Circuit| {
                for q in 0..4 {
                    c.h(q);
                }
            };
            let flip = |c: &mut Circuit| {
                for (q, &s) in shift.iter().enumerate() {
                    if s == 1 {
                        c.x(q);
                    }
                }
            };
            layer_h(&mut c);
            flip(&mut c);
            c.cz(0, 1).cz(2, 3);
            flip(&mut c);
            layer_h(&mut c);
            c.cz(0, 1).cz(2, 3);
            layer_h(&mut c);
            c
        }
        "qft" => {
            let n = 4;
            let mut c = Circuit::new(n);
            for j in 0..n {
                c.h(j);
                for k in j + 1..n {
                    c.cphase(k, j, PI / f64::from(1u32 << (k - j)));
                }
            }
            for j in 0..n / 2 {
                c.swap(j, n - 1 - j);
            }
            c
        }
        // Marked item 101, two iterations.
        "grover" => {
            let mut c = Circuit::new(3);
            for q in 0..3 {
                c.h(q);
            }
            for _ in 0..2 {
                c.x(1);
                ccz(&mut c, 0, 1, 2);
                c.x(1);
                for q in 0..3 {
                    c.h(q).x(q);
                }
                ccz(&mut c, 0, 1, 2);
                for q in 0..3 {
                    c.x(q).h(q);
                }
            }
            c
        }
        other => return Err(BenchError::UnknownAlgorithm(other.to_string())),
    };
    Ok(c)
}

/// Inserts a `kind` channel after every gate on each qubit it touches.
pub fn add_noise(c: &Circuit, kind: NoiseKind, params: &[f64]) -> Result<Circuit, BenchError> {
    let mut out = Circuit::new(c.num_qubits());
    out.set_initial_state(c.initial_state())?;
    for op in c.ops() {
        out.push(op.clone())?;
        if let Op::Gate(g) = op {
            for &q in &g.qubits {
                out.push(Op::Noise(NoiseApp {
                    kind,
                    qubit: q,
                    params: params.to_vec(),
                }))?;
            }
        }
    }
    Ok(out)
}

/// One query of a rebinding sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRecord {
    pub index: usize,
    pub gamma: f64,
    pub beta: f64,
    pub rebind_ms: f64,
    pub query_ms: f64,
    /// Amplitude of the all-zero outcome.
    pub probe: [f64; 2],
    /// Probability of the all-zero outcome.
    pub probe_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub compile_count: usize,
    pub compile_ms: f64,
    pub node_count: usize,
    pub records: Vec<QueryRecord>,
}

/// Angles used by query `k` of a sweep of length `count`.
pub fn sweep_angles(k: usize, count: usize) -> (f64, f64) {
    let t = (k as f64 + 0.5) / count.max(1) as f64;
    (0.1 + 1.2 * t, 0.9 - 0.7 * t)
}

/// Compiles a QAOA instance once, then rebinds `count` (γ, β) pairs and
/// queries the all-zero amplitude after each.
pub fn rebind_sweep(
    n: usize,
    p: usize,
    seed: u64,
    count: usize,
    opts: &CompileOptions,
) -> Result<SweepReport, BenchError> {
    let (g0, b0) = sweep_angles(0, count);
    let start = Instant::now();
    let template = build_qaoa_maxcut(n, p, seed, &[g0], &[b0])?;
    let compiles_before = compilations_on_this_thread();
    let compiled = compile_circuit(&template, opts)?;
    let compile_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut session = compiled.session();
    let zeros = vec![0usize; n];
    let mut records = Vec::with_capacity(count);
    for k in 0..count {
        let (gamma, beta) = sweep_angles(k, count);
        let t0 = Instant::now();
        let circuit = build_qaoa_maxcut(n, p, seed, &[gamma], &[beta])?;
        let binding = compiled.binding_for(&circuit).map_err(PipelineError::from)?;
        session.rebind_params(&binding)?;
        let t1 = Instant::now();
        let a: Complex64 = session.basis_amplitude(&zeros, &[])?;
        let t2 = Instant::now();
        records.push(QueryRecord {
            index: k,
            gamma,
            beta,
            rebind_ms: (t1 - t0).as_secs_f64() * 1e3,
            query_ms: (t2 - t1).as_secs_f64() * 1e3,
            probe: [a.re, a.im],
            probe_probability: a.norm_sqr(),
        });
    }
    Ok(SweepReport {
        compile_count: compilations_on_this_thread() - compiles_before,
        compile_ms,
        node_count: compiled.ac.node_count(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{serialize_circuit, validate_circuit, GateKind};

    fn count(c: &Circuit, kind: GateKind) -> usize {
        c.ops()
            .iter()
            .filter(|op| matches!(op, Op::Gate(g) if g.kind == kind))
            .count()
    }

    #[test]
    fn qaoa_structure() {
        let c = build_qaoa_maxcut(4, 1, 3, &[0.4], &[0.3]).unwrap();
        assert_eq!(count(&c, GateKind::H), 4);
        assert_eq!(count(&c, GateKind::Cnot), 12);
        assert_eq!(count(&c, GateKind::Rz), 6);
        assert_eq!(count(&c, GateKind::Rx), 4);
        let c = build_qaoa_maxcut(4, 0, 3, &[], &[]).unwrap();
        assert_eq!(c.ops().len(), 4);
        assert!(matches!(
            build_qaoa_maxcut(5, 1, 0, &[0.1], &[0.1]),
            Err(BenchError::NoRegularGraph(5))
        ));
    }

    #[test]
    fn regular_graphs_are_regular_and_seeded() {
        for seed in 0..20 {
            let edges = random_3_regular(8, seed).unwrap();
            assert_eq!(edges.len(), 12);
            let mut degree = [0; 8];
            for (a, b) in &edges {
                degree[*a] += 1;
                degree[*b] += 1;
            }
            assert!(degree.iter().all(|&d| d == 3));
            assert_eq!(edges, random_3_regular(8, seed).unwrap());
        }
        let a = build_qaoa_maxcut(8, 1, 42, &[0.2], &[0.7]).unwrap();
        let b = build_qaoa_maxcut(8, 1, 42, &[0.2], &[0.7]).unwrap();
        assert_eq!(serialize_circuit(&a), serialize_circuit(&b));
    }

    #[test]
    fn vqe_structure() {
        let c = build_vqe_ising(1, 2, 1, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(count(&c, GateKind::Cnot), 2);
        assert_eq!(count(&c, GateKind::Rx), 2);
        assert_eq!(count(&c, GateKind::Rz), 1 + 2);
        assert_eq!(grid_edges(3, 3).len(), 12);
        assert!(build_vqe_ising(2, 2, 0, &[]).unwrap().ops().is_empty());
        assert!(build_vqe_ising(1, 1, 1, &[0.1, 0.2, 0.3]).is_err());
        assert!(build_vqe_ising(2, 2, 2, &[0.1; 4]).is_err());
    }

    #[test]
    fn rcs_structure() {
        assert_eq!(build_rcs(5, 0, 1).unwrap().ops().len(), 5);
        let a = build_rcs(5, 10, 9).unwrap();
        assert_eq!(serialize_circuit(&a), serialize_circuit(&build_rcs(5, 10, 9).unwrap()));
        assert_eq!(count(&a, GateKind::Cz), 5 * 2 + 5 * 2);
        // No qubit receives the same random gate twice in a row.
        let mut last: Vec<Option<(GateKind, Vec<u64>)>> = vec![None; 5];
        for op in &a.ops()[5..] {
            if let Op::Gate(g) = op {
                if g.qubits.len() == 1 {
                    let key = (g.kind, g.params.iter().map(|p| p.to_bits()).collect());
                    assert_ne!(last[g.qubits[0]].as_ref(), Some(&key));
                    last[g.qubits[0]] = Some(key);
                }
            }
        }
    }

    #[test]
    fn noise_insertion() {
        let bell = build_algorithm("bell").unwrap();
        let noisy = add_noise(&bell, NoiseKind::DepolarizingSym, &[0.005]).unwrap();
        assert_eq!(noisy.noise_count(), 3);
        assert_eq!(noisy.gate_count(), 2);
        assert!(add_noise(&bell, NoiseKind::DepolarizingSym, &[1.5]).is_err());
    }

    #[test]
    fn workloads_validate() {
        let mut all: Vec<Circuit> = ALGORITHMS.iter().map(|n| build_algorithm(n).unwrap()).collect();
        all.push(build_qaoa_maxcut(6, 2, 1, &[0.3, 0.5], &[0.2, 0.1]).unwrap());
        all.push(build_vqe_ising(2, 3, 2, &[0.1, 0.2, 0.3]).unwrap());
        all.push(build_rcs(6, 8, 2).unwrap());
        for c in &all {
            assert!(validate_circuit(c).is_empty());
        }
        assert!(matches!(build_algorithm("shor"), Err(BenchError::UnknownAlgorithm(_))));
    }
}
