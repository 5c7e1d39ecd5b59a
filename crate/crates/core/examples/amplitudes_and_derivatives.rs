//! Evidence queries on a compiled circuit. One upward pass gives the
//! amplitude; the downward pass then gives, for every output and noise
//! event, the amplitude after changing only that variable.

use qkc::bayesnet::Evidence;
use qkc::circuit::parse_circuit;
use qkc::pipeline::compile_circuit;

fn main() {
    let circuit = parse_circuit(
        "qubits 3
         h 0
         cnot 0 1
         ry 2 0.7
         cz 1 2
         bf 2 0.1",
    )
    .unwrap();
    let compiled = compile_circuit(&circuit, &Default::default()).unwrap();
    let mut s = compiled.session();

    // Node names follow qubit and time step; the layout lists them.
    let layout = s.layout().clone();
    let mut e = Evidence::new();
    for (slot, v) in [1, 1, 0, 0].into_iter().enumerate() {
        e.set(layout.slot_node(slot).clone(), v);
    }
    println!("evidence: {:?}", e.assignments);
    let a = s.evaluate(&e).unwrap();
    println!("a(110 | no flip) = {a:.6}");

    let d = s.differentiate().unwrap();
    for slot in 0..s.layout().slot_count() {
        let node = s.layout().slot_node(slot);
        let vals: Vec<String> = d.values[slot].iter().map(|z| format!("{z:.4}")).collect();
        println!("  d/d{node} = [{}]", vals.join(", "));
    }
    println!("{} node visits for both passes", s.node_visits());
}
