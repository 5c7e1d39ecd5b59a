//! Acceptance checks. Each test prints one PASS/FAIL line (written straight
//! to stderr so it shows up in the log even when the test passes) and then
//! asserts.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use common::*;
use qkc::bayesnet::{circuit_to_bn, Evidence};
use qkc::bench::{add_noise, build_algorithm, build_qaoa_maxcut, build_rcs, ALGORITHMS};
use qkc::circuit::{parse_circuit, Circuit, NoiseKind};
use qkc::cnf::{bn_to_cnf, simplify_units};
use qkc::ddnnf::{check_ddnnf, compile, CompileOptions, VarOrder};
use qkc::oracle::{brute_force_wmc, density_matrix_simulate, event_domains, statevector_simulate, trajectory};
use qkc::pipeline::{compile_circuit, compile_density};
use qkc::query::{index_bits, Session};
use qkc::sampler::{conditional, direct_samples, empirical_distribution, kl_divergence, sample, SamplerConfig};

const NOISY_BELL: &str = "qubits 2\nh 0\npd 0 0.36\ncnot 0 1\n";

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id:>2} {verdict}  {title}: {detail}");
}

fn both_orders() -> [CompileOptions; 2] {
    [VarOrder::MinFill, VarOrder::Lexicographic].map(|var_order| CompileOptions {
        var_order,
        ..Default::default()
    })
}

fn qkc(args: &[&str]) -> (i32, String, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_qkc")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        start.elapsed(),
    )
}

fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qkc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn json_complex(v: &Value) -> Complex64 {
    Complex64::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn criterion_01_noisy_bell_density() {
    let path = temp_file("bell.qc", NOISY_BELL);
    let want = |i: usize, j: usize| match (i, j) {
        (0, 0) | (3, 3) => 0.5,
        (0, 3) | (3, 0) => 0.4,
        _ => 0.0,
    };
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut exit_ok = true;
    for extra in [None, Some("--doubled")] {
        let mut args = vec!["density", path.to_str().unwrap()];
        args.extend(extra);
        let (code, stdout, elapsed) = qkc(&args);
        exit_ok &= code == 0;
        slowest = slowest.max(elapsed);
        let v: Value = serde_json::from_str(&stdout).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let got = json_complex(&v["matrix"][i][j]);
                worst = worst.max((got - want(i, j)).norm());
            }
        }
    }
    let pass = exit_ok && worst <= 1e-9 && slowest < Duration::from_secs(1);
    report(
        1,
        "noisy Bell density via CLI",
        pass,
        &format!("max entry error {worst:.1e} (tol 1e-9), slowest run {slowest:.2?} (limit 1 s), both routes"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_trajectory_table() {
    let c = parse_circuit(NOISY_BELL).unwrap();
    let mut s = compile_circuit(&c, &Default::default()).unwrap().session();
    let r = FRAC_1_SQRT_2;
    // Magnitudes indexed by (damping event, q0, q1).
    let table = [r, 0.0, 0.0, 0.8 * r, 0.0, 0.0, 0.0, 0.6 * r];
    let mut worst: f64 = 0.0;
    for (k, want) in table.iter().enumerate() {
        let (event, out) = (k >> 2, [(k >> 1) & 1, k & 1]);
        let a = s.basis_amplitude(&out, &[event]).unwrap();
        worst = worst.max((a.norm() - want).abs());
    }
    let components = [
        [(0, 0, 0.5), (0, 3, 0.4), (3, 0, 0.4), (3, 3, 0.32)].as_slice(),
        [(3, 3, 0.18)].as_slice(),
    ];
    for (event, nonzero) in components.iter().enumerate() {
        let psi = s.trajectory_amplitudes(&[event]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = nonzero.iter().find(|e| e.0 == i && e.1 == j).map_or(0.0, |e| e.2);
                worst = worst.max((psi[i] * psi[j].conj() - want).norm());
            }
        }
    }
    let pass = worst <= 1e-9;
    report(
        2,
        "per-trajectory amplitudes and density components",
        pass,
        &format!("8 amplitudes + 2 components, max error {worst:.1e} (tol 1e-9)"),
    );
    assert!(pass);
}

fn close(got: Complex64, want: Complex64) -> f64 {
    // Absolute 1e-12, scaled up for counts whose magnitude exceeds one.
    (got - want).norm() / want.norm().max(1.0)
}

#[test]
fn criterion_03_compiler_soundness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut structural = Vec::new();
    let mut cnfs = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=18);
        let cnf = random_weighted_cnf(&mut rng, n);
        let evidences: Vec<Evidence> = (0..3).map(|_| random_query_evidence(&mut rng, &cnf)).collect();
        let exact: Vec<Complex64> = evidences.iter().map(|e| brute_force_wmc(&cnf, e).unwrap()).collect();
        for opts in both_orders() {
            let ac = compile(&cnf, &opts);
            structural.extend(check_ddnnf(&ac));
            for (e, want) in evidences.iter().zip(&exact) {
                worst = worst.max(close(ac_wmc(&ac, e), *want));
            }
        }
        cnfs += 1;
    }
    let mut circuit_cnfs = 0;
    while circuit_cnfs < 100 {
        let qubits = rng.gen_range(1..=3);
        let gates = rng.gen_range(1..=6);
        let c = random_noisy_circuit(&mut rng, qubits, gates, 0.4);
        let (bn, params) = circuit_to_bn(&c).unwrap();
        let cnf = simplify_units(&bn_to_cnf(&bn, &params)).unwrap();
        if cnf.num_vars() > 20 {
            continue;
        }
        let nodes: Vec<_> = bn
            .outputs
            .iter()
            .chain(&bn.noise_events)
            .map(|&i| (bn.nodes[i].id.clone(), bn.nodes[i].domain))
            .collect();
        let evidences: Vec<Evidence> = (0..3)
            .map(|_| {
                let mut e = Evidence::new();
                for (id, domain) in &nodes {
                    e.set(id.clone(), rng.gen_range(0..*domain));
                }
                e
            })
            .collect();
        let exact: Vec<Complex64> = evidences.iter().map(|e| brute_force_wmc(&cnf, e).unwrap()).collect();
        for opts in both_orders() {
            let ac = compile(&cnf, &opts);
            structural.extend(check_ddnnf(&ac));
            for (e, want) in evidences.iter().zip(&exact) {
                worst = worst.max(close(ac_wmc(&ac, e), *want));
            }
        }
        circuit_cnfs += 1;
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && structural.is_empty() && elapsed < Duration::from_secs(300);
    report(
        3,
        "compiled circuits equal brute-force WMC",
        pass,
        &format!(
            "{cnfs} random + {circuit_cnfs} circuit CNFs, both orders, max error {worst:.1e} (tol 1e-12), \
             {} d-DNNF violations, {elapsed:.1?} (limit 5 min)",
            structural.len()
        ),
    );
    if !structural.is_empty() {
        eprintln!("{:?}", &structural[..structural.len().min(5)]);
    }
    assert!(pass);
}

#[test]
fn criterion_04_algorithms_match_statevector() {
    let mut worst: f64 = 0.0;
    for name in ALGORITHMS {
        let c = build_algorithm(name).unwrap();
        assert!(c.num_qubits() <= 12);
        let mut s = compile_circuit(&c, &Default::default()).unwrap().session();
        let sv = statevector_simulate(&c).unwrap();
        for (x, want) in sv.amplitudes.iter().enumerate() {
            let got = s.basis_amplitude(&index_bits(x, c.num_qubits()), &[]).unwrap();
            worst = worst.max((got - want).norm());
        }
    }
    let pass = worst <= 1e-9;
    report(
        4,
        "algorithm suite amplitudes equal state-vector simulation",
        pass,
        &format!("{} circuits, every basis amplitude, max error {worst:.1e} (tol 1e-9)", ALGORITHMS.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_05_noisy_density_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    let mut sizes = Vec::new();
    let count = 20;
    for i in 0..count {
        let qubits = 2 + i % 5;
        let gates = rng.gen_range(10..=30);
        let ideal = random_circuit(&mut rng, qubits, gates);
        let noisy = add_noise(&ideal, NoiseKind::DepolarizingSym, &[0.005]).unwrap();
        let rho = compile_density(&noisy, &Default::default())
            .unwrap()
            .session()
            .density_matrix()
            .unwrap();
        let reference = density_matrix_simulate(&noisy).unwrap();
        worst = worst.max(max_abs_diff(rho.as_slice(), reference.entries.as_slice()));
        sizes.push((qubits, gates));
    }
    let pass = worst <= 1e-8;
    report(
        5,
        "noisy density matrices equal density-matrix simulation",
        pass,
        &format!(
            "{count} random circuits (2-6 qubits, up to {} gates, depolarizing 0.005 after each gate), \
             max entry error {worst:.1e} (tol 1e-8)",
            sizes.iter().map(|s| s.1).max().unwrap()
        ),
    );
    assert!(pass);
}

fn derivative_error(s: &mut Session, rng: &mut impl Rng, states: usize) -> f64 {
    let layout = s.layout().clone();
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let base: Vec<Option<usize>> = (0..layout.slot_count())
            .map(|slot| Some(rng.gen_range(0..layout.slot_domain(slot))))
            .collect();
        s.evaluate_slots(&base);
        let d = s.differentiate().unwrap();
        for slot in 0..layout.slot_count() {
            for b in 0..layout.slot_domain(slot) {
                let mut flipped = base.clone();
                flipped[slot] = Some(b);
                let direct = s.evaluate_slots(&flipped);
                worst = worst.max((d.values[slot][b] - direct).norm());
            }
        }
    }
    worst
}

#[test]
fn criterion_06_derivatives_equal_flip_and_reevaluate() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut corpus: Vec<(String, Circuit)> = ALGORITHMS
        .iter()
        .map(|n| (n.to_string(), build_algorithm(n).unwrap()))
        .collect();
    corpus.push(("noisy-bell".into(), parse_circuit(NOISY_BELL).unwrap()));
    corpus.push(("qaoa-6".into(), build_qaoa_maxcut(6, 1, 3, &[0.4], &[0.9]).unwrap()));
    corpus.push(("rcs-4x4".into(), build_rcs(4, 4, 2).unwrap()));
    for i in 0..10 {
        corpus.push((format!("random-noisy-{i}"), random_noisy_circuit(&mut rng, 3, 10, 0.5)));
    }
    let mut worst: f64 = 0.0;
    let mut acs = 0;
    for (_, c) in &corpus {
        let mut s = compile_circuit(c, &Default::default()).unwrap().session();
        worst = worst.max(derivative_error(&mut s, &mut rng, 8));
        acs += 1;
        if c.num_qubits() <= 4 {
            let mut d = compile_density(c, &Default::default()).unwrap().session();
            worst = worst.max(derivative_error(&mut d, &mut rng, 8));
            acs += 1;
        }
    }
    let pass = worst <= 1e-12;
    report(
        6,
        "downward-pass derivatives equal flip-and-reevaluate",
        pass,
        &format!("{acs} compiled circuits, 8 states each, every query variable, max error {worst:.1e} (tol 1e-12)"),
    );
    assert!(pass);
}

/// Mixed-radix enumeration of chain states in slot order.
fn decode(mut k: usize, domains: &[usize]) -> Vec<usize> {
    let mut out = vec![0; domains.len()];
    for (slot, &d) in domains.iter().enumerate().rev() {
        out[slot] = k % d;
        k /= d;
    }
    out
}

fn encode(values: &[usize], domains: &[usize]) -> usize {
    values.iter().zip(domains).fold(0, |acc, (&v, &d)| acc * d + v)
}

/// Returns (max conditional error, max row-sum error, stationarity error).
fn gibbs_exactness(c: &Circuit) -> (f64, f64, f64) {
    let mut s = compile_circuit(c, &Default::default()).unwrap().session();
    let layout = s.layout().clone();
    let n = layout.outputs.len();
    assert_eq!(event_domains(c), layout.events.iter().map(|e| e.1).collect::<Vec<_>>());
    let domains: Vec<usize> = (0..layout.slot_count()).map(|slot| layout.slot_domain(slot)).collect();
    let states: usize = domains.iter().product();

    // |a_v(x)|² from independent trajectory simulation.
    let mut trajectories: BTreeMap<Vec<usize>, Vec<Complex64>> = BTreeMap::new();
    let mut weight = vec![0.0; states];
    for (k, w) in weight.iter_mut().enumerate() {
        let st = decode(k, &domains);
        let events = st[n..].to_vec();
        let amps = trajectories
            .entry(events.clone())
            .or_insert_with(|| trajectory(c, &events).unwrap().amplitudes);
        *w = amps[encode(&st[..n], &[2].repeat(n))].norm_sqr();
    }
    let total: f64 = weight.iter().sum();
    let pi: Vec<f64> = weight.iter().map(|w| w / total).collect();

    let support = |w: f64| w > 1e-20;
    let mut cond_err: f64 = 0.0;
    let mut row_err: f64 = 0.0;
    let mut kernels: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; states]; layout.slot_count()];
    for k in 0..states {
        if !support(weight[k]) {
            continue;
        }
        let st = decode(k, &domains);
        s.evaluate_slots(&st.iter().map(|&v| Some(v)).collect::<Vec<_>>());
        let d = s.differentiate().unwrap();
        for slot in 0..layout.slot_count() {
            let got = conditional(&d, slot).unwrap();
            let brute: Vec<f64> = (0..domains[slot])
                .map(|b| {
                    let mut t = st.clone();
                    t[slot] = b;
                    weight[encode(&t, &domains)]
                })
                .collect();
            let z: f64 = brute.iter().sum();
            for (g, w) in got.iter().zip(&brute) {
                cond_err = cond_err.max((g - w / z).abs());
            }
            row_err = row_err.max((got.iter().sum::<f64>() - 1.0).abs());
            kernels[slot][k] = Some(got);
        }
    }

    // Systematic scan in the sampler's order, applied to π one site at a
    // time; mass never leaves the support so only supported rows are used.
    let order = qkc::sampler::scan_order(&layout);
    let mut v = pi.clone();
    for &slot in &order {
        let mut next = vec![0.0; states];
        for k in 0..states {
            if v[k] == 0.0 {
                continue;
            }
            let row = kernels[slot][k].as_ref().expect("mass stays on the support");
            let mut st = decode(k, &domains);
            for (b, p) in row.iter().enumerate() {
                st[slot] = b;
                next[encode(&st, &domains)] += v[k] * p;
            }
        }
        v = next;
    }
    let stationarity = v.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (cond_err, row_err, stationarity)
}

#[test]
fn criterion_07_gibbs_conditionals_and_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut circuits = vec![
        parse_circuit(NOISY_BELL).unwrap(),
        build_algorithm("teleport-core").unwrap(),
        build_qaoa_maxcut(4, 1, 1, &[0.3], &[0.8]).unwrap(),
    ];
    while circuits.len() < 15 {
        let (qubits, gates) = (rng.gen_range(2..=4), rng.gen_range(3..=10));
        let c = random_noisy_circuit(&mut rng, qubits, gates, 0.4);
        if c.num_qubits() + c.noise_count() <= 10 {
            circuits.push(c);
        }
    }
    let (mut cond, mut rows, mut stat) = (0.0f64, 0.0f64, 0.0f64);
    for c in &circuits {
        let (a, b, d) = gibbs_exactness(c);
        cond = cond.max(a);
        rows = rows.max(b);
        stat = stat.max(d);
    }
    let pass = cond <= 1e-12 && rows <= 1e-12 && stat <= 1e-10;
    report(
        7,
        "Gibbs conditionals exact and scan kernel stationary",
        pass,
        &format!(
            "{} circuits with at most 10 chain variables: conditional error {cond:.1e} (tol 1e-12), \
             row sums {rows:.1e}, stationarity {stat:.1e} (tol 1e-10)",
            circuits.len()
        ),
    );
    assert!(pass);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

#[test]
fn criterion_08_sampling_convergence() {
    let c = build_qaoa_maxcut(8, 1, 5, &[0.6], &[0.4]).unwrap();
    let mut s = compile_circuit(&c, &Default::default()).unwrap().session();
    let exact = s.output_distribution().unwrap();
    let probs = s.probabilities().unwrap();
    let (mut gibbs_1k, mut gibbs_10k, mut direct_1k, mut direct_10k) = (vec![], vec![], vec![], vec![]);
    let mut outside = 0;
    for seed in 0..20 {
        let cfg = SamplerConfig {
            samples: 10_000,
            seed,
            ..Default::default()
        };
        let r = sample(&mut s, &cfg).unwrap();
        outside += r.counts.keys().filter(|k| !exact.contains_key(*k)).count();
        gibbs_1k.push(kl_divergence(&r.empirical(1_000, 8), &exact));
        gibbs_10k.push(kl_divergence(&r.empirical(10_000, 8), &exact));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = direct_samples(&probs, 10_000, &mut rng);
        direct_1k.push(kl_divergence(&empirical_distribution(&draws[..1_000], 8), &exact));
        direct_10k.push(kl_divergence(&empirical_distribution(&draws, 8), &exact));
    }
    let (g1, g10, d1, d10) = (median(gibbs_1k), median(gibbs_10k), median(direct_1k), median(direct_10k));
    let pass = g10 < g1 && d10 < d1 && outside == 0;
    report(
        8,
        "sampling error falls with sample count",
        pass,
        &format!(
            "8-qubit QAOA, 20 seeds, median KL gibbs {g1:.4} -> {g10:.4}, direct {d1:.4} -> {d10:.4} \
             (1k -> 10k samples), {outside} samples outside the support"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_compile_once_query_many() {
    let (code, stdout, _) = qkc(&["bench", "qaoa", "--n", "8", "--seed", "1", "--rebind-sweep", "100"]);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let records = v["records"].as_array().unwrap();
    let compile_count = v["compile_count"].as_u64().unwrap();
    let mut worst: f64 = 0.0;
    for r in records.iter().step_by(10) {
        let (g, b) = (r["gamma"].as_f64().unwrap(), r["beta"].as_f64().unwrap());
        let fresh = compile_circuit(&build_qaoa_maxcut(8, 1, 1, &[g], &[b]).unwrap(), &Default::default()).unwrap();
        let a = fresh.session().basis_amplitude(&[0; 8], &[]).unwrap();
        worst = worst.max((a - json_complex(&r["probe"])).norm());
    }
    let pass = code == 0 && compile_count == 1 && records.len() == 100 && worst <= 1e-12;
    report(
        9,
        "compile once, rebind and query many",
        pass,
        &format!(
            "compile_count {compile_count}, {} query records, 10 spot checks vs fresh compiles max error {worst:.1e} (tol 1e-12)",
            records.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_scale_claims_and_growth_trend() {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "criterion 10 NOT REPRODUCED  headline speedups at 32 qubits, the density-matrix break-even point, \
         the random-circuit speedup factors and absolute circuit sizes need hardware and external \
         simulators beyond this environment; substituted by criteria 3-9 and the trend check below"
    );
    drop(err);
    let opts = CompileOptions::default();
    let rcs: Vec<usize> = (1..=5)
        .map(|k| {
            compile_circuit(&build_rcs(5, 2 * k, 1).unwrap(), &opts)
                .unwrap()
                .ac
                .node_count()
        })
        .collect();
    let qaoa: Vec<usize> = [4, 6, 8, 10]
        .iter()
        .map(|&n| {
            compile_circuit(&build_qaoa_maxcut(n, 1, 1, &[0.3], &[0.2]).unwrap(), &opts)
                .unwrap()
                .ac
                .node_count()
        })
        .collect();
    let increasing = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
    let growth = |v: &[usize]| *v.last().unwrap() as f64 / v[0] as f64;
    let pass = increasing(&rcs) && increasing(&qaoa) && growth(&rcs) > growth(&qaoa);
    report(
        10,
        "node-count growth trend",
        pass,
        &format!(
            "random circuits, 5 qubits, depth 2..10: {rcs:?} (x{:.1}); QAOA 4..10 qubits: {qaoa:?} (x{:.1})",
            growth(&rcs),
            growth(&qaoa)
        ),
    );
    assert!(pass);
}
