//! Complex-valued Bayesian networks built from circuits.
//!
//! Every qubit starts with a root node carrying its initial value as
//! evidence. Each single-qubit gate appends a node for the qubit's new state
//! whose conditional amplitude table (CAT) is the transpose of the gate
//! unitary. A controlled monomial two-qubit gate appends one node for the
//! target qubit with the control and old target as parents. A noise channel
//! appends a noise-event node (one value per Kraus operator) and, unless all
//! operators are diagonal, a post-noise state node. SWAP only relabels wires.
//!
//! Table values equal to exactly 0 or 1 become [`Entry::Zero`] and
//! [`Entry::One`]; every other value becomes a parameter in a [`ParamTable`]
//! so it can be rebound later without recompiling.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{
    controlled_form, gate_unitary, kraus_set, validate_circuit, Circuit, CircuitError, GateKind,
    KrausSet, Op,
};
use crate::matrix::{ColumnSupport, Matrix};

/// Node label, `q{i}m{t}` for qubit states and `q{i}m{t}rv` for noise
/// events; `t` is one plus the index of the operation that created the node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entry {
    Zero,
    One,
    Param(ParamId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    QubitState,
    NoiseEvent,
}

/// Raw complex table: `rows` parent configurations by `domain` node values.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeTable {
    pub rows: usize,
    pub domain: usize,
    pub values: Vec<Complex64>,
}

impl AmplitudeTable {
    fn new(rows: usize, domain: usize) -> Self {
        AmplitudeTable {
            rows,
            domain,
            values: vec![Complex64::new(0.0, 0.0); rows * domain],
        }
    }

    pub fn get(&self, row: usize, value: usize) -> Complex64 {
        self.values[row * self.domain + value]
    }

    fn set(&mut self, row: usize, value: usize, v: Complex64) {
        self.values[row * self.domain + value] = v;
    }

    fn conj(&self) -> Self {
        AmplitudeTable {
            rows: self.rows,
            domain: self.domain,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Splits values into structural entries and parameters. Parameter ids
    /// are local to this table, numbered in first-occurrence order; values
    /// that are bitwise equal share an id.
    pub fn classify(&self) -> (Vec<Entry>, Vec<Complex64>) {
        let mut params: Vec<Complex64> = Vec::new();
        let mut seen: HashMap<(u64, u64), u32> = HashMap::new();
        let entries = self
            .values
            .iter()
            .map(|&v| {
                if v.re == 0.0 && v.im == 0.0 {
                    Entry::Zero
                } else if v.re == 1.0 && v.im == 0.0 {
                    Entry::One
                } else {
                    let id = *seen.entry((v.re.to_bits(), v.im.to_bits())).or_insert_with(|| {
                        params.push(v);
                        params.len() as u32 - 1
                    });
                    Entry::Param(ParamId(id))
                }
            })
            .collect();
        (entries, params)
    }
}

/// Conditional amplitude table attached to a node.
#[derive(Clone, Debug, PartialEq)]
pub struct Cat {
    /// Parent node indices, most significant first in the row index.
    pub parents: Vec<usize>,
    pub parent_domains: Vec<usize>,
    pub domain: usize,
    /// Row-major: `entries[row * domain + value]`.
    pub entries: Vec<Entry>,
}

impl Cat {
    pub fn rows(&self) -> usize {
        self.parent_domains.iter().product()
    }

    pub fn entry(&self, row: usize, value: usize) -> Entry {
        self.entries[row * self.domain + value]
    }

    pub fn row_index(&self, parent_values: &[usize]) -> usize {
        parent_values
            .iter()
            .zip(&self.parent_domains)
            .fold(0, |acc, (&v, &d)| acc * d + v)
    }

    pub fn row_values(&self, mut row: usize) -> Vec<usize> {
        let mut out = vec![0; self.parents.len()];
        for (slot, &d) in out.iter_mut().zip(&self.parent_domains).rev() {
            *slot = row % d;
            row /= d;
        }
        out
    }

    /// A row with exactly one ONE entry and ZERO elsewhere.
    pub fn row_is_deterministic(&self, row: usize) -> bool {
        let cells = &self.entries[row * self.domain..(row + 1) * self.domain];
        cells.iter().filter(|e| **e == Entry::One).count() == 1
            && cells.iter().all(|e| matches!(e, Entry::One | Entry::Zero))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub qubit: usize,
    /// Circuit operation that created the node; `None` for initial states.
    pub op_index: Option<usize>,
    pub domain: usize,
    pub cat: Cat,
}

/// Where a parameter came from, for rebinding.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamOrigin {
    pub op_index: Option<usize>,
    pub node: usize,
    /// `(row, value)` cells of the node's CAT sharing this parameter.
    pub cells: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamTable {
    pub values: Vec<Complex64>,
    pub provenance: Vec<ParamOrigin>,
}

impl ParamTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, id: ParamId) -> Complex64 {
        self.values[id.0 as usize]
    }

    pub fn binding(&self) -> ParamBinding {
        ParamBinding {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| (ParamId(i as u32), v))
                .collect(),
        }
    }
}

/// Values assigned to parameter ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamBinding {
    pub values: BTreeMap<ParamId, Complex64>,
}

impl ParamBinding {
    pub fn get(&self, id: ParamId) -> Option<Complex64> {
        self.values.get(&id).copied()
    }
}

/// Values observed on output and noise-event nodes. Unlisted nodes are
/// summed over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    pub assignments: BTreeMap<NodeId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, node: impl Into<NodeId>, value: usize) -> &mut Self {
        self.assignments.insert(node.into(), value);
        self
    }

    pub fn with(mut self, node: impl Into<NodeId>, value: usize) -> Self {
        self.set(node, value);
        self
    }

    pub fn get(&self, node: &NodeId) -> Option<usize> {
        self.assignments.get(node).copied()
    }

    /// Whether an indicator for `node = value` is compatible.
    pub fn allows(&self, node: &NodeId, value: usize) -> bool {
        self.get(node).is_none_or(|v| v == value)
    }
}

impl<const N: usize> From<[(&str, usize); N]> for Evidence {
    fn from(pairs: [(&str, usize); N]) -> Self {
        Evidence {
            assignments: pairs.iter().map(|&(n, v)| (NodeId::from(n), v)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesNet {
    pub nodes: Vec<BayesNode>,
    /// Latest state node per qubit.
    pub frontier: Vec<usize>,
    /// Output state nodes; qubit order, ket copy first in doubled networks.
    pub outputs: Vec<usize>,
    pub noise_events: Vec<usize>,
    pub initial_evidence: Vec<(usize, usize)>,
    index: HashMap<NodeId, usize>,
}

impl BayesNet {
    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, id: &NodeId) -> Option<&BayesNode> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when every edge goes from an earlier node to a later one.
    pub fn is_topologically_ordered(&self) -> bool {
        self.nodes
            .iter()
            .enumerate()
            .all(|(i, n)| n.cat.parents.iter().all(|&p| p < i))
    }

    /// Amplitude product of a complete value assignment (one value per node),
    /// ignoring evidence.
    pub fn path_amplitude(&self, values: &[usize], params: &ParamTable) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (i, node) in self.nodes.iter().enumerate() {
            let pv: Vec<usize> = node.cat.parents.iter().map(|&p| values[p]).collect();
            let row = node.cat.row_index(&pv);
            match node.cat.entry(row, values[i]) {
                Entry::Zero => return Complex64::new(0.0, 0.0),
                Entry::One => {}
                Entry::Param(id) => acc *= params.value(id),
            }
        }
        acc
    }

    /// Structured debug dump of nodes, parents and tables.
    pub fn debug_dump(&self, params: &ParamTable) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            let parents: Vec<&str> = node
                .cat
                .parents
                .iter()
                .map(|&p| self.nodes[p].id.as_str())
                .collect();
            out.push_str(&format!(
                "node {} kind={:?} domain={} parents=[{}]\n",
                node.id,
                node.kind,
                node.domain,
                parents.join(", ")
            ));
            for row in 0..node.cat.rows() {
                let cells: Vec<String> = (0..node.domain)
                    .map(|v| match node.cat.entry(row, v) {
                        Entry::Zero => "0".to_string(),
                        Entry::One => "1".to_string(),
                        Entry::Param(id) => {
                            let z = params.value(id);
                            format!("p{}({}{:+}i)", id.0, z.re, z.im)
                        }
                    })
                    .collect();
                out.push_str(&format!(
                    "  {:?} -> {}\n",
                    node.cat.row_values(row),
                    cells.join(" ")
                ));
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("op {op_index}: {message}")]
    Unencodable { op_index: usize, message: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("circuit structure differs from the compiled one: {0}")]
    StructureMismatch(String),
}

/// Table for a single-qubit gate: `entry(b, b') = u[b', b]`.
pub fn cat_from_single_qubit_gate(u: &Matrix) -> AmplitudeTable {
    assert_eq!(u.dim(), 2);
    let mut t = AmplitudeTable::new(2, 2);
    for b in 0..2 {
        for b2 in 0..2 {
            t.set(b, b2, u.get(b2, b));
        }
    }
    t
}

/// Table for the target of a controlled monomial gate, rows over
/// `(control, old target)`. When `control_first` is false the second qubit of
/// `u` is the preserved one.
pub fn cat_from_controlled_gate(
    u: &Matrix,
    control_first: bool,
) -> Result<AmplitudeTable, EncodeError> {
    let unencodable = |message: &str| EncodeError::Unencodable {
        op_index: 0,
        message: message.to_string(),
    };
    if u.dim() != 4 || !u.is_monomial() {
        return Err(unencodable("two-qubit gate is not monomial"));
    }
    // View with the control as the most significant qubit.
    let swap_bits = |i: usize| ((i & 1) << 1) | (i >> 1);
    let at = |r: usize, c: usize| {
        if control_first {
            u.get(r, c)
        } else {
            u.get(swap_bits(r), swap_bits(c))
        }
    };
    let mut t = AmplitudeTable::new(4, 2);
    for col in 0..4 {
        let control = col >> 1;
        for row in 0..4 {
            let v = at(row, col);
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            if row >> 1 != control {
                return Err(unencodable("control qubit value is not preserved"));
            }
            t.set(col, row & 1, v);
        }
    }
    Ok(t)
}

/// Event table (rows: input state, values: Kraus index) and, unless all
/// operators are diagonal, the deterministic post-state table over
/// `(input state, event)`.
pub fn cats_from_noise(k: &KrausSet) -> (AmplitudeTable, Option<AmplitudeTable>) {
    let n = k.len();
    let mut event = AmplitudeTable::new(2, n);
    let mut post = AmplitudeTable::new(2 * n, 2);
    for (j, e) in k.operators.iter().enumerate() {
        for b in 0..2 {
            let target = match e.column_support(b) {
                ColumnSupport::Single(r) => {
                    event.set(b, j, e.get(r, b));
                    r
                }
                ColumnSupport::Empty => b,
                ColumnSupport::Dense => unreachable!("column-monomial Kraus operator"),
            };
            post.set(b * n + j, target, Complex64::new(1.0, 0.0));
        }
    }
    let post = if k.is_diagonal() { None } else { Some(post) };
    (event, post)
}

/// Node before classification.
struct RawNode {
    id: NodeId,
    kind: NodeKind,
    qubit: usize,
    op_index: Option<usize>,
    parents: Vec<usize>,
    table: AmplitudeTable,
}

struct RawNet {
    nodes: Vec<RawNode>,
    frontier: Vec<usize>,
    outputs: Vec<usize>,
    noise_events: Vec<usize>,
    initial_evidence: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Amplitude,
    Doubled,
}

struct Builder {
    nodes: Vec<RawNode>,
}

impl Builder {
    fn add(
        &mut self,
        id: String,
        kind: NodeKind,
        qubit: usize,
        op_index: Option<usize>,
        parents: Vec<usize>,
        table: AmplitudeTable,
    ) -> usize {
        self.nodes.push(RawNode {
            id: NodeId(id),
            kind,
            qubit,
            op_index,
            parents,
            table,
        });
        self.nodes.len() - 1
    }
}

/// Roots carry amplitude 1 for both values; the initial state arrives as
/// evidence.
fn root_table() -> AmplitudeTable {
    let mut t = AmplitudeTable::new(1, 2);
    t.set(0, 0, Complex64::new(1.0, 0.0));
    t.set(0, 1, Complex64::new(1.0, 0.0));
    t
}

fn build_raw(circuit: &Circuit, mode: Mode) -> Result<RawNet, EncodeError> {
    if let Some(d) = validate_circuit(circuit).into_iter().next() {
        return Err(EncodeError::Unencodable {
            op_index: d.op_index,
            message: d.message,
        });
    }
    let n = circuit.num_qubits();
    let copies: &[&str] = match mode {
        Mode::Amplitude => &[""],
        Mode::Doubled => &["", "~"],
    };
    let mut b = Builder { nodes: Vec::new() };
    let mut initial_evidence = Vec::new();
    // frontier[copy][qubit]
    let mut frontier: Vec<Vec<usize>> = vec![Vec::with_capacity(n); copies.len()];
    for (ci, suffix) in copies.iter().enumerate() {
        for q in 0..n {
            let bit = circuit.initial_state()[q];
            let idx = b.add(
                format!("q{q}m0{suffix}"),
                NodeKind::QubitState,
                q,
                None,
                vec![],
                root_table(),
            );
            initial_evidence.push((idx, bit as usize));
            frontier[ci].push(idx);
        }
    }
    let mut noise_events = Vec::new();

    for (op_index, op) in circuit.ops().iter().enumerate() {
        let t = op_index + 1;
        match op {
            Op::Gate(g) if g.kind == GateKind::Swap => {
                for f in frontier.iter_mut() {
                    f.swap(g.qubits[0], g.qubits[1]);
                }
            }
            Op::Gate(g) if g.qubits.len() == 1 => {
                let q = g.qubits[0];
                let table = cat_from_single_qubit_gate(&gate_unitary(g));
                for (ci, suffix) in copies.iter().enumerate() {
                    let table = if ci == 0 { table.clone() } else { table.conj() };
                    let parent = frontier[ci][q];
                    frontier[ci][q] = b.add(
                        format!("q{q}m{t}{suffix}"),
                        NodeKind::QubitState,
                        q,
                        Some(op_index),
                        vec![parent],
                        table,
                    );
                }
            }
            Op::Gate(g) => {
                let u = gate_unitary(g);
                let control_first = controlled_form(&u).ok_or_else(|| EncodeError::Unencodable {
                    op_index,
                    message: "gate not encodable; decompose".into(),
                })?;
                let (control, target) = if control_first {
                    (g.qubits[0], g.qubits[1])
                } else {
                    (g.qubits[1], g.qubits[0])
                };
                let table = cat_from_controlled_gate(&u, control_first).map_err(|e| match e {
                    EncodeError::Unencodable { message, .. } => {
                        EncodeError::Unencodable { op_index, message }
                    }
                    other => other,
                })?;
                for (ci, suffix) in copies.iter().enumerate() {
                    let table = if ci == 0 { table.clone() } else { table.conj() };
                    let parents = vec![frontier[ci][control], frontier[ci][target]];
                    frontier[ci][target] = b.add(
                        format!("q{target}m{t}{suffix}"),
                        NodeKind::QubitState,
                        target,
                        Some(op_index),
                        parents,
                        table,
                    );
                }
            }
            Op::Noise(nz) => {
                let q = nz.qubit;
                let k = kraus_set(nz)?;
                let (event_table, post_table) = cats_from_noise(&k);
                let ket_event = b.add(
                    format!("q{q}m{t}rv"),
                    NodeKind::NoiseEvent,
                    q,
                    Some(op_index),
                    vec![frontier[0][q]],
                    event_table.clone(),
                );
                let mut events = vec![ket_event];
                if mode == Mode::Doubled {
                    // Bra copy of the event: conjugated amplitudes, forced
                    // equal to the ket event so both sides share one Kraus
                    // index.
                    let kd = k.len();
                    let mut bra = AmplitudeTable::new(2 * kd, kd);
                    for s in 0..2 {
                        for j in 0..kd {
                            bra.set(s * kd + j, j, event_table.get(s, j).conj());
                        }
                    }
                    events.push(b.add(
                        format!("q{q}m{t}rv~"),
                        NodeKind::NoiseEvent,
                        q,
                        Some(op_index),
                        vec![frontier[1][q], ket_event],
                        bra,
                    ));
                } else {
                    noise_events.push(ket_event);
                }
                if let Some(post) = post_table {
                    for (ci, suffix) in copies.iter().enumerate() {
                        let parents = vec![frontier[ci][q], events[ci]];
                        frontier[ci][q] = b.add(
                            format!("q{q}m{t}{suffix}"),
                            NodeKind::QubitState,
                            q,
                            Some(op_index),
                            parents,
                            post.clone(),
                        );
                    }
                }
            }
        }
    }

    let outputs = frontier.iter().flatten().copied().collect();
    Ok(RawNet {
        nodes: b.nodes,
        frontier: frontier.swap_remove(0),
        outputs,
        noise_events,
        initial_evidence,
    })
}

fn classify(raw: RawNet) -> (BayesNet, ParamTable) {
    let mut params = ParamTable::default();
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    let mut index = HashMap::new();
    let domains: Vec<usize> = raw.nodes.iter().map(|n| n.table.domain).collect();
    for (i, rn) in raw.nodes.into_iter().enumerate() {
        let (local_entries, local_values) = rn.table.classify();
        let base = params.values.len() as u32;
        let mut origins: Vec<ParamOrigin> = local_values
            .iter()
            .map(|_| ParamOrigin {
                op_index: rn.op_index,
                node: i,
                cells: Vec::new(),
            })
            .collect();
        let entries = local_entries
            .into_iter()
            .enumerate()
            .map(|(cell, e)| match e {
                Entry::Param(ParamId(local)) => {
                    origins[local as usize]
                        .cells
                        .push((cell / rn.table.domain, cell % rn.table.domain));
                    Entry::Param(ParamId(base + local))
                }
                other => other,
            })
            .collect();
        params.values.extend(local_values);
        params.provenance.extend(origins);
        index.insert(rn.id.clone(), i);
        nodes.push(BayesNode {
            id: rn.id,
            kind: rn.kind,
            qubit: rn.qubit,
            op_index: rn.op_index,
            domain: rn.table.domain,
            cat: Cat {
                parent_domains: rn.parents.iter().map(|&p| domains[p]).collect(),
                parents: rn.parents,
                domain: rn.table.domain,
                entries,
            },
        });
    }
    (
        BayesNet {
            nodes,
            frontier: raw.frontier,
            outputs: raw.outputs,
            noise_events: raw.noise_events,
            initial_evidence: raw.initial_evidence,
            index,
        },
        params,
    )
}

/// Converts a circuit into a Bayesian network and its parameter table.
pub fn circuit_to_bn(circuit: &Circuit) -> Result<(BayesNet, ParamTable), EncodeError> {
    Ok(classify(build_raw(circuit, Mode::Amplitude)?))
}

/// Builds the doubled network whose weighted model count with evidence
/// `x` on the ket outputs and `y` on the bra outputs (suffix `~`) is the
/// density matrix entry `ρ[x, y]`. The bra copy carries conjugated tables
/// and shares each noise event with the ket copy; noise events are summed
/// rather than queried, so `noise_events` is empty.
pub fn circuit_to_density_bn(circuit: &Circuit) -> Result<(BayesNet, ParamTable), EncodeError> {
    Ok(classify(build_raw(circuit, Mode::Doubled)?))
}

/// Computes parameter values for `circuit` against a network compiled from a
/// structurally identical circuit (same operations on the same qubits,
/// different angles or strengths). Fails when a structural ZERO/ONE cell
/// would change value or when cells sharing one parameter diverge.
pub fn rebind_from_circuit(bn: &BayesNet, circuit: &Circuit) -> Result<ParamBinding, EncodeError> {
    let doubled = bn.nodes.iter().any(|n| n.id.0.ends_with('~'));
    let mode = if doubled { Mode::Doubled } else { Mode::Amplitude };
    let raw = build_raw(circuit, mode)?;
    let mismatch = |msg: String| Err(EncodeError::StructureMismatch(msg));
    if raw.nodes.len() != bn.nodes.len() {
        return mismatch(format!(
            "{} nodes compiled, {} in new circuit",
            bn.nodes.len(),
            raw.nodes.len()
        ));
    }
    let mut binding = ParamBinding::default();
    for (old, new) in bn.nodes.iter().zip(&raw.nodes) {
        if old.id != new.id || old.cat.parents != new.parents || old.domain != new.table.domain {
            return mismatch(format!("node {} differs", old.id));
        }
        for row in 0..old.cat.rows() {
            for v in 0..old.domain {
                let value = new.table.get(row, v);
                match old.cat.entry(row, v) {
                    Entry::Zero if value != Complex64::new(0.0, 0.0) => {
                        return mismatch(format!("node {} cell ({row},{v}) is no longer 0", old.id))
                    }
                    Entry::One if value != Complex64::new(1.0, 0.0) => {
                        return mismatch(format!("node {} cell ({row},{v}) is no longer 1", old.id))
                    }
                    Entry::Param(id) => match binding.values.insert(id, value) {
                        Some(prev) if prev != value => {
                            return mismatch(format!(
                                "cells sharing parameter {} now differ in node {}",
                                id.0, old.id
                            ))
                        }
                        _ => {}
                    },
                    _ => {}
                }
            }
        }
    }
    Ok(binding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, NoiseApp, NoiseKind};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn labels(bn: &BayesNet) -> Vec<&str> {
        bn.nodes.iter().map(|n| n.id.as_str()).collect()
    }

    fn noisy_bell() -> Circuit {
        parse_circuit("qubits 2\nh 0\npd 0 0.36\ncnot 0 1").unwrap()
    }

    #[test]
    fn noisy_bell_nodes() {
        let (bn, params) = circuit_to_bn(&noisy_bell()).unwrap();
        assert_eq!(labels(&bn), ["q0m0", "q1m0", "q0m1", "q0m2rv", "q1m3"]);
        assert!(bn.node(&"q0m2".into()).is_none());
        let out: Vec<&str> = bn.outputs.iter().map(|&i| bn.nodes[i].id.as_str()).collect();
        assert_eq!(out, ["q0m1", "q1m3"]);
        assert_eq!(bn.noise_events, vec![3]);
        assert_eq!(bn.initial_evidence, vec![(0, 0), (1, 0)]);
        // H: ±1/√2 and the phase-damping event: 0.8, 0.6.
        assert_eq!(params.len(), 4);
        assert!(bn.is_topologically_ordered());
    }

    #[test]
    fn identity_circuit_is_single_root() {
        let (bn, params) = circuit_to_bn(&Circuit::new(1)).unwrap();
        assert_eq!(labels(&bn), ["q0m0"]);
        assert_eq!(bn.outputs, vec![0]);
        assert_eq!(bn.initial_evidence, vec![(0, 0)]);
        assert!(params.is_empty());
    }

    #[test]
    fn amplitude_damping_keeps_post_state() {
        let c = parse_circuit("qubits 1\nh 0\nad 0 0.3").unwrap();
        let (bn, _) = circuit_to_bn(&c).unwrap();
        assert_eq!(labels(&bn), ["q0m0", "q0m1", "q0m2rv", "q0m2"]);
        let post = &bn.nodes[3];
        assert_eq!(post.cat.parents, vec![1, 2]);
    }

    #[test]
    fn hadamard_table() {
        let h = gate_unitary(&crate::circuit::GateApp {
            kind: GateKind::H,
            qubits: vec![0],
            params: vec![],
        });
        let t = cat_from_single_qubit_gate(&h);
        let s = FRAC_1_SQRT_2;
        assert_eq!(t.get(0, 0).re, s);
        assert_eq!(t.get(0, 1).re, s);
        assert_eq!(t.get(1, 0).re, s);
        assert_eq!(t.get(1, 1).re, -s);
        let (entries, params) = t.classify();
        assert_eq!(params.len(), 2);
        assert_eq!(
            entries,
            vec![
                Entry::Param(ParamId(0)),
                Entry::Param(ParamId(0)),
                Entry::Param(ParamId(0)),
                Entry::Param(ParamId(1))
            ]
        );
    }

    fn single(kind: GateKind) -> AmplitudeTable {
        cat_from_single_qubit_gate(&gate_unitary(&crate::circuit::GateApp {
            kind,
            qubits: vec![0],
            params: vec![],
        }))
    }

    #[test]
    fn pauli_x_table_is_deterministic() {
        let (entries, params) = single(GateKind::X).classify();
        assert!(params.is_empty());
        assert_eq!(entries, vec![Entry::Zero, Entry::One, Entry::One, Entry::Zero]);
    }

    #[test]
    fn t_gate_table() {
        let t = single(GateKind::T);
        let (entries, params) = t.classify();
        assert_eq!(
            entries,
            vec![Entry::One, Entry::Zero, Entry::Zero, Entry::Param(ParamId(0))]
        );
        assert!((params[0] - Complex64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
    }

    fn two(kind: GateKind, params: &[f64]) -> Matrix {
        gate_unitary(&crate::circuit::GateApp {
            kind,
            qubits: vec![0, 1],
            params: params.to_vec(),
        })
    }

    #[test]
    fn cnot_table() {
        let t = cat_from_controlled_gate(&two(GateKind::Cnot, &[]), true).unwrap();
        let (entries, params) = t.classify();
        assert!(params.is_empty());
        use Entry::{One, Zero};
        assert_eq!(entries, vec![One, Zero, Zero, One, Zero, One, One, Zero]);
    }

    #[test]
    fn cz_table() {
        let t = cat_from_controlled_gate(&two(GateKind::Cz, &[]), true).unwrap();
        let (entries, params) = t.classify();
        assert_eq!(params, vec![Complex64::new(-1.0, 0.0)]);
        use Entry::{One, Param, Zero};
        assert_eq!(
            entries,
            vec![One, Zero, Zero, One, One, Zero, Zero, Param(ParamId(0))]
        );
    }

    #[test]
    fn zero_cphase_is_deterministic() {
        let t = cat_from_controlled_gate(&two(GateKind::Cphase, &[0.0]), true).unwrap();
        let (_, params) = t.classify();
        assert!(params.is_empty());
    }

    #[test]
    fn controlled_table_rejects_swap() {
        assert!(cat_from_controlled_gate(&two(GateKind::Swap, &[]), true).is_err());
    }

    fn noise(kind: NoiseKind, p: &[f64]) -> KrausSet {
        kraus_set(&NoiseApp {
            kind,
            qubit: 0,
            params: p.to_vec(),
        })
        .unwrap()
    }

    #[test]
    fn phase_damping_event_table() {
        let (event, post) = cats_from_noise(&noise(NoiseKind::PhaseDamping, &[0.36]));
        assert!(post.is_none());
        let (entries, params) = event.classify();
        assert_eq!(entries[0], Entry::One);
        assert_eq!(entries[1], Entry::Zero);
        assert!(matches!(entries[2], Entry::Param(_)));
        assert!(matches!(entries[3], Entry::Param(_)));
        assert!((params[0].re - 0.8).abs() < 1e-15);
        assert!((params[1].re - 0.6).abs() < 1e-15);
    }

    #[test]
    fn bit_flip_tables() {
        let (event, post) = cats_from_noise(&noise(NoiseKind::BitFlip, &[0.1]));
        let (a, b) = (0.9f64.sqrt(), 0.1f64.sqrt());
        for row in 0..2 {
            assert!((event.get(row, 0).re - a).abs() < 1e-15);
            assert!((event.get(row, 1).re - b).abs() < 1e-15);
        }
        let post = post.unwrap();
        // rows (input, event): value preserved for event 0, flipped for 1.
        for input in 0..2 {
            assert_eq!(post.get(input * 2, input).re, 1.0);
            assert_eq!(post.get(input * 2 + 1, 1 - input).re, 1.0);
            assert_eq!(post.get(input * 2 + 1, input).re, 0.0);
        }
    }

    #[test]
    fn full_amplitude_damping() {
        let (event, post) = cats_from_noise(&noise(NoiseKind::AmplitudeDamping, &[1.0]));
        let (entries, _) = event.classify();
        assert_eq!(&entries[2..4], &[Entry::Zero, Entry::One]);
        let post = post.unwrap();
        // (|1⟩, event 1) → |0⟩
        assert_eq!(post.get(2 + 1, 0).re, 1.0);
    }

    #[test]
    fn swap_relabels_frontier() {
        let c = parse_circuit("qubits 2\nx 0\nswap 0 1").unwrap();
        let (bn, _) = circuit_to_bn(&c).unwrap();
        assert_eq!(bn.len(), 3);
        let out: Vec<&str> = bn.outputs.iter().map(|&i| bn.nodes[i].id.as_str()).collect();
        assert_eq!(out, ["q1m0", "q0m1"]);
    }

    #[test]
    fn unencodable_gate_is_rejected() {
        let s = FRAC_1_SQRT_2;
        let rows = [
            [s, 0.0, s, 0.0],
            [0.0, s, 0.0, s],
            [s, 0.0, -s, 0.0],
            [0.0, s, 0.0, -s],
        ];
        let params: Vec<f64> = rows.iter().flatten().flat_map(|&x| [x, 0.0]).collect();
        let mut c = Circuit::new(2);
        c.push_gate(GateKind::Unitary2, &[0, 1], &params).unwrap();
        assert!(matches!(
            circuit_to_bn(&c),
            Err(EncodeError::Unencodable { op_index: 0, .. })
        ));
    }

    #[test]
    fn rebinding_tracks_angles() {
        let mut a = Circuit::new(1);
        a.rx(0, 0.3).rz(0, 0.7);
        let mut b = Circuit::new(1);
        b.rx(0, 1.1).rz(0, -0.2);
        let (bn, _) = circuit_to_bn(&a).unwrap();
        let binding = rebind_from_circuit(&bn, &b).unwrap();
        let (_, fresh) = circuit_to_bn(&b).unwrap();
        assert_eq!(binding, fresh.binding());

        // Parameters may take structural values after rebinding...
        let mut c = Circuit::new(1);
        c.rx(0, 0.3).rz(0, 0.0);
        assert!(rebind_from_circuit(&bn, &c).is_ok());
        // ...but structural cells cannot become parameters.
        let (bn_zero, _) = circuit_to_bn(&c).unwrap();
        assert!(matches!(
            rebind_from_circuit(&bn_zero, &a),
            Err(EncodeError::StructureMismatch(_))
        ));
    }

    #[test]
    fn density_network_shape() {
        let (bn, _) = circuit_to_density_bn(&noisy_bell()).unwrap();
        assert_eq!(
            labels(&bn),
            ["q0m0", "q1m0", "q0m0~", "q1m0~", "q0m1", "q0m1~", "q0m2rv", "q0m2rv~", "q1m3", "q1m3~"]
        );
        assert!(bn.noise_events.is_empty());
        assert_eq!(bn.outputs.len(), 4);
        assert!(bn.is_topologically_ordered());
    }
}
