//! Depolarizing noise after every gate of a QAOA circuit; the doubled
//! network's density matrix against direct density-matrix simulation.
//!
//! Run with `--release`.

use std::time::Instant;

use qkc::bench::{add_noise, build_qaoa_maxcut};
use qkc::circuit::NoiseKind;
use qkc::oracle::density_matrix_simulate;
use qkc::pipeline::compile_density;

fn main() {
    let ideal = build_qaoa_maxcut(4, 1, 2, &[0.5], &[0.3]).unwrap();
    let noisy = add_noise(&ideal, NoiseKind::DepolarizingSym, &[0.005]).unwrap();
    println!("{} gates, {} noise channels", noisy.gate_count(), noisy.noise_count());

    let t = Instant::now();
    let compiled = compile_density(&noisy, &Default::default()).unwrap();
    println!("compiled to {} nodes in {:.2?}", compiled.ac.node_count(), t.elapsed());
    let t = Instant::now();
    let rho = compiled.session().density_matrix().unwrap();
    println!("density matrix in {:.2?}", t.elapsed());

    let reference = density_matrix_simulate(&noisy).unwrap();
    let worst = rho
        .as_slice()
        .iter()
        .zip(reference.entries.as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("trace {:.12}, max deviation from reference {worst:.1e}", rho_trace(&rho));
}

fn rho_trace(m: &qkc::matrix::Matrix) -> f64 {
    (0..m.dim()).map(|i| m.get(i, i).re).sum()
}
