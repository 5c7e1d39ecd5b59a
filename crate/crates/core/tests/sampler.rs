use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qkc::circuit::parse_circuit;
use qkc::pipeline::compile_circuit;
use qkc::query::Session;
use qkc::sampler::{init_chain, sample, SamplerConfig, Scan};

fn session(text: &str) -> Session {
    compile_circuit(&parse_circuit(text).unwrap(), &Default::default())
        .unwrap()
        .session()
}

#[test]
fn noisy_bell_starts_on_a_supported_row() {
    let mut s = session("qubits 2\nh 0\npd 0 0.36\ncnot 0 1");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut seen = BTreeMap::new();
    for _ in 0..200 {
        let (st, _) = init_chain(&mut s, &mut rng, 50).unwrap();
        *seen.entry(st.values.clone()).or_insert(0) += 1;
    }
    // Slots are (q0, q1, damping event).
    let rows: Vec<Vec<usize>> = seen.into_keys().collect();
    assert_eq!(rows, vec![vec![0, 0, 0], vec![1, 1, 0], vec![1, 1, 1]]);
}

#[test]
fn single_site_chain_cannot_leave_isolated_state() {
    // (00, no damping) has no supported neighbour one variable away, so a
    // chain started there never moves, and chains started elsewhere never
    // reach it.
    let mut s = session("qubits 2\nh 0\npd 0 0.36\ncnot 0 1");
    for seed in 0..20 {
        let r = sample(
            &mut s,
            &SamplerConfig {
                samples: 200,
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.counts.len(), 1, "{:?}", r.counts);
    }
}

#[test]
fn restarts_visit_every_component() {
    let mut s = session("qubits 2\nh 0\npd 0 0.36\ncnot 0 1");
    let r = sample(
        &mut s,
        &SamplerConfig {
            samples: 3000,
            seed: 1,
            restart_every: Some(1),
            burn_in: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.counts.keys().collect::<Vec<_>>(), vec!["00", "11"]);
    // Restarts pick uniformly among the three supported rows, so the
    // isolated one is over-weighted relative to its true probability 1/2.
    let f = r.counts["00"] as f64 / 3000.0;
    assert!((f - 1.0 / 3.0).abs() < 0.04, "{f}");
}

#[test]
fn ideal_bell_matches_exact_frequencies() {
    let mut s = session("qubits 2\nh 0\ncnot 0 1");
    for scan in [Scan::Fixed, Scan::Random] {
        let r = sample(
            &mut s,
            &SamplerConfig {
                samples: 10_000,
                seed: 4,
                scan,
                restart_every: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        for k in ["00", "11"] {
            let f = r.counts[k] as f64 / 10_000.0;
            assert!((f - 0.5).abs() < 0.03, "{k}: {f}");
        }
    }
}

#[test]
fn samples_stay_in_support() {
    let text = "qubits 3\nh 0\nry 1 1.1\ncnot 0 2\nad 2 0.3\ncz 1 2\nbf 1 0.1";
    let mut s = session(text);
    let exact = s.output_distribution().unwrap();
    let r = sample(
        &mut s,
        &SamplerConfig {
            samples: 2000,
            seed: 3,
            scan: Scan::Random,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(r.counts.keys().all(|k| exact.contains_key(k)));
    assert_eq!(r.counts.values().sum::<usize>(), 2000);
    assert_eq!(r.sequence.len(), 2000);
}

#[test]
fn chains_use_independent_streams() {
    let mut s = session("qubits 3\nh 0\nh 1\nh 2");
    let run = |s: &mut Session, chain_index| {
        sample(
            s,
            &SamplerConfig {
                samples: 100,
                chain_index,
                ..Default::default()
            },
        )
        .unwrap()
        .sequence
    };
    let a = run(&mut s, 0);
    assert_eq!(a, run(&mut s, 0));
    assert_ne!(a, run(&mut s, 1));
}

#[test]
fn doubled_network_is_rejected() {
    let c = parse_circuit("qubits 1\nh 0").unwrap();
    let mut s = qkc::pipeline::compile_density(&c, &Default::default()).unwrap().session();
    assert!(sample(&mut s, &SamplerConfig::default()).is_err());
}
