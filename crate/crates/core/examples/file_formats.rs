//! The intermediate artifacts on disk: the weighted CNF in extended DIMACS
//! and the arithmetic circuit in its text form. Both parse back to
//! equivalent objects.

use std::sync::Arc;

use qkc::bayesnet::Evidence;
use qkc::circuit::parse_circuit;
use qkc::cnf::{emit_dimacs, parse_dimacs};
use qkc::ddnnf::{parse_ac, serialize_ac};
use qkc::oracle::brute_force_wmc;
use qkc::pipeline::compile_circuit;
use qkc::query::{QueryLayout, Session};

fn main() {
    let circuit = parse_circuit("qubits 2\nh 0\npd 0 0.36\ncnot 0 1").unwrap();
    let compiled = compile_circuit(&circuit, &Default::default()).unwrap();

    let dimacs = emit_dimacs(&compiled.cnf);
    println!("{dimacs}");
    let cnf = parse_dimacs(&dimacs).unwrap();
    let e = Evidence::from([("q0m1", 1), ("q1m3", 1), ("q0m2rv", 0)]);
    println!("brute-force WMC for 11, no damping: {:.6}", brute_force_wmc(&cnf, &e).unwrap());

    // The layout comments record which nodes are outputs and noise events.
    let text = serialize_ac(&compiled.ac) + &compiled.layout.to_comments();
    println!("{}", text.lines().take(8).collect::<Vec<_>>().join("\n"));
    println!("...");
    println!("{}", compiled.layout.to_comments().trim_end());
    let ac = parse_ac(&text).unwrap();
    let layout = QueryLayout::from_comments(&text).unwrap();
    let mut s = Session::new(Arc::new(ac), layout);
    println!("reloaded circuit, same query: {:.6}", s.evaluate(&e).unwrap());
}
