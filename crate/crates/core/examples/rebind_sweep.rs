//! Compile a QAOA circuit once and sweep its angles by rebinding parameter
//! values, checking a few points against fresh compilations.

use qkc::bench::{build_qaoa_maxcut, rebind_sweep, sweep_angles};
use qkc::pipeline::compile_circuit;

fn main() {
    let (n, count) = (8, 50);
    let report = rebind_sweep(n, 1, 3, count, &Default::default()).unwrap();
    println!(
        "compiled {} time(s) in {:.2} ms, {} nodes",
        report.compile_count, report.compile_ms, report.node_count
    );
    let mean = report.records.iter().map(|r| r.query_ms + r.rebind_ms).sum::<f64>() / count as f64;
    println!("mean rebind + query: {mean:.4} ms");

    for k in [0, count / 2, count - 1] {
        let (g, b) = sweep_angles(k, count);
        let fresh = compile_circuit(&build_qaoa_maxcut(n, 1, 3, &[g], &[b]).unwrap(), &Default::default()).unwrap();
        let a = fresh.session().basis_amplitude(&vec![0; n], &[]).unwrap();
        let r = &report.records[k];
        println!(
            "  γ={g:.3} β={b:.3}: P(0…0) rebound {:.8}, fresh {:.8}",
            r.probe_probability,
            a.norm_sqr()
        );
    }
}
