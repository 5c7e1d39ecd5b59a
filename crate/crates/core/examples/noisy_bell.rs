//! A Bell pair with phase damping on the control qubit, simulated both ways:
//! one amplitude circuit queried per noise trajectory, and the doubled
//! ket/bra circuit that sums the noise internally.

use qkc::circuit::parse_circuit;
use qkc::pipeline::{compile_circuit, compile_density};

fn main() {
    let circuit = parse_circuit(
        "qubits 2
         h 0
         pd 0 0.36
         cnot 0 1",
    )
    .unwrap();

    let amplitudes = compile_circuit(&circuit, &Default::default()).unwrap();
    let mut s = amplitudes.session();
    println!("amplitude circuit: {} nodes", amplitudes.ac.node_count());
    for event in 0..2 {
        for out in [[0, 0], [1, 1]] {
            let a = s.basis_amplitude(&out, &[event]).unwrap();
            println!("  event {event}, outputs {}{}: {:.6}", out[0], out[1], a);
        }
    }

    let doubled = compile_density(&circuit, &Default::default()).unwrap();
    println!("doubled circuit: {} nodes", doubled.ac.node_count());
    let from_trajectories = s.density_matrix().unwrap();
    let rho = doubled.session().density_matrix().unwrap();
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:5.2}", rho.get(i, j).re)).collect();
        println!("  {}", row.join(" "));
    }
    let gap = (0..16)
        .map(|k| (rho.get(k / 4, k % 4) - from_trajectories.get(k / 4, k % 4)).norm())
        .fold(0.0, f64::max);
    println!("routes agree to {gap:.1e}");
}
