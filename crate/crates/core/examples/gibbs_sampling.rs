//! Gibbs sampling of a 6-qubit QAOA circuit, with the KL divergence to the
//! exact output distribution as the sample count grows.

use qkc::bench::build_qaoa_maxcut;
use qkc::pipeline::compile_circuit;
use qkc::sampler::{kl_divergence, sample, SamplerConfig};

fn main() {
    let circuit = build_qaoa_maxcut(6, 1, 7, &[0.6], &[0.4]).unwrap();
    let mut s = compile_circuit(&circuit, &Default::default()).unwrap().session();
    let exact = s.output_distribution().unwrap();

    let cfg = SamplerConfig {
        samples: 20_000,
        seed: 42,
        ..Default::default()
    };
    let report = sample(&mut s, &cfg).unwrap();
    println!(
        "{} steps, {} value changes, {} derivative passes",
        report.steps, report.value_changes, report.evaluations
    );
    for prefix in [100, 1_000, 5_000, 20_000] {
        let kl = kl_divergence(&report.empirical(prefix, 6), &exact);
        println!("  {prefix:>6} samples: KL = {kl:.5}");
    }

    let mut top: Vec<_> = exact.iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(a.1));
    for (bits, p) in top.into_iter().take(5) {
        let seen = report.counts.get(bits).copied().unwrap_or(0) as f64 / cfg.samples as f64;
        println!("  {bits}: exact {p:.4}, sampled {seen:.4}");
    }
}
