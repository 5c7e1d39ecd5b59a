//! Arithmetic-circuit size as workloads grow: random circuits against
//! depth, structured QAOA against qubit count, and the two variable orders.
//!
//! Run with `--release`.

use std::time::Instant;

use qkc::bench::{add_noise, build_qaoa_maxcut, build_rcs};
use qkc::circuit::{Circuit, NoiseKind};
use qkc::ddnnf::{CompileOptions, VarOrder};
use qkc::pipeline::{compile_circuit, compile_density};

fn report(label: &str, c: &Circuit, opts: &CompileOptions, doubled: bool) {
    let t = Instant::now();
    let r = if doubled {
        compile_density(c, opts)
    } else {
        compile_circuit(c, opts)
    }
    .unwrap();
    println!(
        "{label:<28} {:>5} vars {:>7} nodes {:>8} edges {:>9.2?}",
        r.cnf.num_vars(),
        r.ac.node_count(),
        r.ac.edge_count(),
        t.elapsed()
    );
}

fn main() {
    let minfill = CompileOptions::default();
    println!("random circuits, 5 qubits:");
    for depth in [2, 4, 6, 8, 10] {
        report(&format!("  depth {depth}"), &build_rcs(5, depth, 1).unwrap(), &minfill, false);
    }
    println!("QAOA p=1:");
    for n in [4, 6, 8, 10] {
        let c = build_qaoa_maxcut(n, 1, 1, &[0.3], &[0.2]).unwrap();
        report(&format!("  {n} qubits"), &c, &minfill, false);
    }
    println!("noisy QAOA, doubled network, by variable order:");
    let noisy = add_noise(
        &build_qaoa_maxcut(4, 1, 1, &[0.3], &[0.2]).unwrap(),
        NoiseKind::DepolarizingSym,
        &[0.005],
    )
    .unwrap();
    for order in [VarOrder::MinFill, VarOrder::Lexicographic] {
        let opts = CompileOptions {
            var_order: order,
            ..Default::default()
        };
        report(&format!("  {order:?}"), &noisy, &opts, true);
    }
}
