//! The small algorithm suite, compiled and compared with a state-vector
//! simulation.

use qkc::bench::{build_algorithm, ALGORITHMS};
use qkc::oracle::statevector_simulate;
use qkc::pipeline::compile_circuit;
use qkc::query::index_bits;

fn main() {
    for name in ALGORITHMS {
        let c = build_algorithm(name).unwrap();
        let compiled = compile_circuit(&c, &Default::default()).unwrap();
        let mut s = compiled.session();
        let reference = statevector_simulate(&c).unwrap();
        let mut worst: f64 = 0.0;
        for (x, want) in reference.amplitudes.iter().enumerate() {
            let got = s.basis_amplitude(&index_bits(x, c.num_qubits()), &[]).unwrap();
            worst = worst.max((got - want).norm());
        }
        let mut dist: Vec<_> = s.output_distribution().unwrap().into_iter().collect();
        dist.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<String> = dist.iter().take(3).map(|(k, p)| format!("{k}:{p:.3}")).collect();
        println!(
            "{name:<20} {:>2} qubits {:>5} nodes  max error {worst:.1e}  {}",
            c.num_qubits(),
            compiled.ac.node_count(),
            top.join(" ")
        );
    }
}
