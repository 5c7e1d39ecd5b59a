//! Queries against compiled circuits.
//!
//! A [`Session`] pairs a shared arithmetic circuit with parameter values,
//! evidence and the per-node caches of the last upward and downward pass.
//! Amplitudes come from the upward pass; the downward pass yields, for every
//! output and noise-event value, the amplitude obtained by changing only
//! that variable's evidence.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use crate::bayesnet::{Evidence, ParamBinding};
use crate::bayesnet::{BayesNet, NodeId, ParamId};
use crate::cnf::{Lit, VarMeaning};
use crate::ddnnf::{AcNode, ArithmeticCircuit};
use crate::matrix::Matrix;

pub const DEFAULT_ENUMERATION_LIMIT: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("node `{0}` is not an output or noise-event node")]
    NotQueryNode(NodeId),
    #[error("value {value} out of range for node `{node}` (domain {domain})")]
    ValueOutOfRange {
        node: NodeId,
        value: usize,
        domain: usize,
    },
    #[error("binding has no value for parameter {}", .0 .0)]
    MissingParam(ParamId),
    #[error("derivatives requested before evaluating the current binding and evidence")]
    StaleCaches,
    #[error("expected {expected} {what}, got {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("enumeration needs {size} evaluations, above the limit of {limit}")]
    EnumerationLimit { size: usize, limit: usize },
    #[error("cannot recover the query layout: {0}")]
    Layout(String),
}

/// Which network nodes can carry evidence, in slot order: outputs by qubit
/// first, then noise events in circuit order.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryLayout {
    pub num_qubits: usize,
    pub outputs: Vec<NodeId>,
    pub events: Vec<(NodeId, usize)>,
    /// Outputs are ket copies followed by bra copies and `f(x, y) = ρ[x, y]`.
    pub doubled: bool,
}

impl QueryLayout {
    pub fn from_bn(bn: &BayesNet, doubled: bool) -> Self {
        let outputs: Vec<NodeId> = bn.outputs.iter().map(|&i| bn.nodes[i].id.clone()).collect();
        QueryLayout {
            num_qubits: if doubled { outputs.len() / 2 } else { outputs.len() },
            outputs,
            events: bn
                .noise_events
                .iter()
                .map(|&i| (bn.nodes[i].id.clone(), bn.nodes[i].domain))
                .collect(),
            doubled,
        }
    }

    /// Comment lines that travel with a stored arithmetic circuit so a
    /// reloaded circuit knows its slots. Node names alone are not enough:
    /// swaps move a wire's node onto another qubit.
    pub fn to_comments(&self) -> String {
        let mut out = format!("c layout qubits {} doubled {}\n", self.num_qubits, self.doubled as u8);
        for node in &self.outputs {
            out.push_str(&format!("c output {node}\n"));
        }
        for (node, domain) in &self.events {
            out.push_str(&format!("c event {node} {domain}\n"));
        }
        out
    }

    /// Reads the lines written by [`QueryLayout::to_comments`]; other lines
    /// are ignored.
    pub fn from_comments(text: &str) -> Result<Self, QueryError> {
        let bad = |line: &str| QueryError::Layout(format!("malformed layout line `{line}`"));
        let mut header: Option<(usize, bool)> = None;
        let mut outputs = Vec::new();
        let mut events = Vec::new();
        for line in text.lines() {
            let t: Vec<&str> = line.split_whitespace().collect();
            match t.as_slice() {
                ["c", "layout", "qubits", n, "doubled", d] => {
                    let n = n.parse().map_err(|_| bad(line))?;
                    let d = match *d {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad(line)),
                    };
                    header = Some((n, d));
                }
                ["c", "output", node] => outputs.push(NodeId(node.to_string())),
                ["c", "event", node, domain] => {
                    events.push((NodeId(node.to_string()), domain.parse().map_err(|_| bad(line))?))
                }
                ["c", "layout" | "output" | "event", ..] => return Err(bad(line)),
                _ => {}
            }
        }
        let (num_qubits, doubled) =
            header.ok_or_else(|| QueryError::Layout("no `c layout` line; recompile to store one".into()))?;
        let want = if doubled { 2 * num_qubits } else { num_qubits };
        if outputs.len() != want {
            return Err(QueryError::Layout(format!(
                "{} output lines for {want} outputs",
                outputs.len()
            )));
        }
        Ok(QueryLayout {
            num_qubits,
            outputs,
            events,
            doubled,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.outputs.len() + self.events.len()
    }

    pub fn slot_node(&self, slot: usize) -> &NodeId {
        if slot < self.outputs.len() {
            &self.outputs[slot]
        } else {
            &self.events[slot - self.outputs.len()].0
        }
    }

    pub fn slot_domain(&self, slot: usize) -> usize {
        if slot < self.outputs.len() {
            2
        } else {
            self.events[slot - self.outputs.len()].1
        }
    }

    pub fn slot_of(&self, node: &NodeId) -> Option<usize> {
        self.outputs
            .iter()
            .position(|n| n == node)
            .or_else(|| {
                self.events
                    .iter()
                    .position(|(n, _)| n == node)
                    .map(|i| i + self.outputs.len())
            })
    }
}

/// Derivatives of the amplitude with respect to every evidence indicator,
/// indexed by slot and value.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives {
    pub layout: Arc<QueryLayout>,
    pub values: Vec<Vec<Complex64>>,
}

impl Derivatives {
    pub fn get(&self, node: &NodeId, value: usize) -> Option<Complex64> {
        let slot = self.layout.slot_of(node)?;
        self.values[slot].get(value).copied()
    }
}

#[derive(Clone, Debug)]
pub struct Session {
    ac: Arc<ArithmeticCircuit>,
    layout: Arc<QueryLayout>,
    /// AC variable per (slot, value), if the variable survived compilation.
    slot_vars: Vec<Vec<Option<u32>>>,
    /// Slot of each indicator variable, `usize::MAX` for others.
    var_slot: Vec<(usize, usize)>,
    params: Vec<(u32, ParamId)>,
    /// Weight of each positive literal; negative literals weigh 1.
    weight: Vec<Complex64>,
    evidence: Vec<Option<usize>>,
    upward: Vec<Complex64>,
    downward: Vec<Complex64>,
    dirty: bool,
    visits: u64,
    pub enumeration_limit: usize,
}

impl Session {
    /// Starts a session with the parameter values stored in the circuit.
    pub fn new(ac: Arc<ArithmeticCircuit>, layout: QueryLayout) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let slot_vars: Vec<Vec<Option<u32>>> = (0..layout.slot_count())
            .map(|s| vec![None; layout.slot_domain(s)])
            .collect();
        let mut s = Session {
            weight: vec![one; ac.vars.len() + 1],
            var_slot: vec![(usize::MAX, 0); ac.vars.len() + 1],
            slot_vars,
            params: Vec::new(),
            evidence: vec![None; layout.slot_count()],
            upward: Vec::new(),
            downward: Vec::new(),
            dirty: true,
            visits: 0,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
            layout: Arc::new(layout),
            ac,
        };
        for (i, v) in s.ac.vars.iter().enumerate() {
            let var = i as u32 + 1;
            match &v.meaning {
                VarMeaning::Indicator { node, value } => {
                    if let Some(slot) = s.layout.slot_of(node) {
                        if *value < s.slot_vars[slot].len() {
                            s.slot_vars[slot][*value] = Some(var);
                            s.var_slot[var as usize] = (slot, *value);
                        }
                    }
                }
                VarMeaning::Parameter { id } => {
                    s.params.push((var, *id));
                    s.weight[var as usize] = v.weight;
                }
            }
        }
        s
    }

    pub fn ac(&self) -> &Arc<ArithmeticCircuit> {
        &self.ac
    }

    pub fn layout(&self) -> &Arc<QueryLayout> {
        &self.layout
    }

    /// Nodes touched by upward and downward passes so far.
    pub fn node_visits(&self) -> u64 {
        self.visits
    }

    pub fn binding(&self) -> ParamBinding {
        ParamBinding {
            values: self
                .params
                .iter()
                .map(|&(var, id)| (id, self.weight[var as usize]))
                .collect(),
        }
    }

    /// Replaces all parameter values without recompiling.
    pub fn rebind_params(&mut self, b: &ParamBinding) -> Result<(), QueryError> {
        let mut updates = Vec::with_capacity(self.params.len());
        for &(var, id) in &self.params {
            updates.push((var, b.get(id).ok_or(QueryError::MissingParam(id))?));
        }
        for (var, w) in updates {
            self.weight[var as usize] = w;
        }
        self.dirty = true;
        Ok(())
    }

    fn slots_from(&self, e: &Evidence) -> Result<Vec<Option<usize>>, QueryError> {
        let mut slots = vec![None; self.layout.slot_count()];
        for (node, &value) in &e.assignments {
            let slot = self
                .layout
                .slot_of(node)
                .ok_or_else(|| QueryError::NotQueryNode(node.clone()))?;
            let domain = self.layout.slot_domain(slot);
            if value >= domain {
                return Err(QueryError::ValueOutOfRange {
                    node: node.clone(),
                    value,
                    domain,
                });
            }
            slots[slot] = Some(value);
        }
        Ok(slots)
    }

    /// Amplitude under `e`; unassigned outputs and events are summed
    /// coherently.
    pub fn evaluate(&mut self, e: &Evidence) -> Result<Complex64, QueryError> {
        let slots = self.slots_from(e)?;
        Ok(self.evaluate_slots(&slots))
    }

    /// [`Session::evaluate`] with evidence given per slot.
    pub fn evaluate_slots(&mut self, evidence: &[Option<usize>]) -> Complex64 {
        assert_eq!(evidence.len(), self.layout.slot_count(), "one entry per slot");
        for (slot, vars) in self.slot_vars.iter().enumerate() {
            for (value, var) in vars.iter().enumerate() {
                if let Some(v) = var {
                    let allowed = evidence[slot].is_none_or(|x| x == value);
                    self.weight[*v as usize] = Complex64::new(allowed as u8 as f64, 0.0);
                }
            }
        }
        self.evidence.copy_from_slice(evidence);
        let weight = &self.weight;
        self.ac.upward_into(
            |l: Lit| {
                if l.is_positive() {
                    weight[l.var() as usize]
                } else {
                    Complex64::new(1.0, 0.0)
                }
            },
            &mut self.upward,
        );
        self.visits += self.ac.node_count() as u64;
        self.dirty = false;
        self.upward[self.ac.root()]
    }

    /// Downward pass at the last evaluated evidence.
    pub fn differentiate(&mut self) -> Result<Derivatives, QueryError> {
        if self.dirty {
            return Err(QueryError::StaleCaches);
        }
        let n = self.ac.node_count();
        let zero = Complex64::new(0.0, 0.0);
        self.downward.clear();
        self.downward.resize(n, zero);
        self.downward[n - 1] = Complex64::new(1.0, 0.0);
        let mut prefix: Vec<Complex64> = Vec::new();
        for i in (0..n).rev() {
            let d = self.downward[i];
            match &self.ac.nodes[i] {
                AcNode::Or { lo, hi, .. } => {
                    self.downward[*lo] += d;
                    self.downward[*hi] += d;
                }
                AcNode::And(kids) => {
                    // Sibling products without division: prefix from the
                    // left times a running suffix from the right.
                    prefix.clear();
                    let mut acc = Complex64::new(1.0, 0.0);
                    for &k in kids {
                        prefix.push(acc);
                        acc *= self.upward[k];
                    }
                    let mut suffix = Complex64::new(1.0, 0.0);
                    for (j, &k) in kids.iter().enumerate().rev() {
                        self.downward[k] += d * prefix[j] * suffix;
                        suffix *= self.upward[k];
                    }
                }
                _ => {}
            }
        }
        self.visits += n as u64;
        let mut values: Vec<Vec<Complex64>> =
            self.slot_vars.iter().map(|vs| vec![zero; vs.len()]).collect();
        for (i, node) in self.ac.nodes.iter().enumerate() {
            if let AcNode::Lit(l) = node {
                if l.is_positive() {
                    let (slot, value) = self.var_slot[l.var() as usize];
                    if slot != usize::MAX {
                        values[slot][value] += self.downward[i];
                    }
                }
            }
        }
        Ok(Derivatives {
            layout: Arc::clone(&self.layout),
            values,
        })
    }

    /// Amplitude of output bitstring `outputs` (qubit order) along the noise
    /// trajectory `events`.
    pub fn basis_amplitude(
        &mut self,
        outputs: &[usize],
        events: &[usize],
    ) -> Result<Complex64, QueryError> {
        let slots = self.full_slots(outputs, events)?;
        Ok(self.evaluate_slots(&slots))
    }

    fn full_slots(&self, outputs: &[usize], events: &[usize]) -> Result<Vec<Option<usize>>, QueryError> {
        if outputs.len() != self.layout.outputs.len() {
            return Err(QueryError::LengthMismatch {
                what: "output values",
                expected: self.layout.outputs.len(),
                found: outputs.len(),
            });
        }
        if events.len() != self.layout.events.len() {
            return Err(QueryError::LengthMismatch {
                what: "noise-event values",
                expected: self.layout.events.len(),
                found: events.len(),
            });
        }
        let mut slots = Vec::with_capacity(self.layout.slot_count());
        for (slot, &v) in outputs.iter().chain(events).enumerate() {
            let domain = self.layout.slot_domain(slot);
            if v >= domain {
                return Err(QueryError::ValueOutOfRange {
                    node: self.layout.slot_node(slot).clone(),
                    value: v,
                    domain,
                });
            }
            slots.push(Some(v));
        }
        Ok(slots)
    }

    fn check_limit(&self, size: usize) -> Result<(), QueryError> {
        if size > self.enumeration_limit {
            Err(QueryError::EnumerationLimit {
                size,
                limit: self.enumeration_limit,
            })
        } else {
            Ok(())
        }
    }

    fn event_assignments(&self) -> Result<Vec<Vec<usize>>, QueryError> {
        let mut total: usize = 1;
        for &(_, d) in &self.layout.events {
            total = total.saturating_mul(d);
        }
        let n = self.layout.num_qubits;
        self.check_limit(total.saturating_mul(1usize.checked_shl(n as u32).unwrap_or(usize::MAX)))?;
        let mut all = vec![Vec::new()];
        for &(_, d) in &self.layout.events {
            all = all
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    (0..d).map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(all)
    }

    /// Amplitude vector over all output bitstrings for one noise trajectory.
    pub fn trajectory_amplitudes(&mut self, events: &[usize]) -> Result<Vec<Complex64>, QueryError> {
        if self.layout.doubled {
            return Err(QueryError::LengthMismatch {
                what: "noise-event slots (doubled network has none)",
                expected: 0,
                found: events.len(),
            });
        }
        let n = self.layout.num_qubits;
        let mut out = Vec::with_capacity(1 << n);
        for x in 0..1usize << n {
            let bits = index_bits(x, n);
            out.push(self.basis_amplitude(&bits, events)?);
        }
        Ok(out)
    }

    /// `ρ = Σ_v a_v a_v†` over all noise trajectories, or read entry by entry
    /// from a doubled network.
    pub fn density_matrix(&mut self) -> Result<Matrix, QueryError> {
        let n = self.layout.num_qubits;
        let dim = 1usize << n;
        let mut rho = Matrix::zeros(dim);
        if self.layout.doubled {
            self.check_limit(dim * dim)?;
            for x in 0..dim {
                for y in 0..dim {
                    let mut bits = index_bits(x, n);
                    bits.extend(index_bits(y, n));
                    rho.set(x, y, self.basis_amplitude(&bits, &[])?);
                }
            }
            return Ok(rho);
        }
        for events in self.event_assignments()? {
            let a = self.trajectory_amplitudes(&events)?;
            for x in 0..dim {
                if a[x] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for y in 0..dim {
                    rho.set(x, y, rho.get(x, y) + a[x] * a[y].conj());
                }
            }
        }
        Ok(rho)
    }

    /// Measurement probabilities indexed by basis state (qubit 0 most
    /// significant).
    pub fn probabilities(&mut self) -> Result<Vec<f64>, QueryError> {
        let n = self.layout.num_qubits;
        let dim = 1usize << n;
        if self.layout.doubled {
            self.check_limit(dim)?;
            return (0..dim)
                .map(|x| {
                    let mut bits = index_bits(x, n);
                    bits.extend(index_bits(x, n));
                    Ok(self.basis_amplitude(&bits, &[])?.re)
                })
                .collect();
        }
        let mut p = vec![0.0; dim];
        for events in self.event_assignments()? {
            for (x, a) in self.trajectory_amplitudes(&events)?.into_iter().enumerate() {
                p[x] += a.norm_sqr();
            }
        }
        Ok(p)
    }

    /// Non-zero measurement probabilities keyed by bitstring.
    pub fn output_distribution(&mut self) -> Result<BTreeMap<String, f64>, QueryError> {
        let n = self.layout.num_qubits;
        Ok(self
            .probabilities()?
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p != 0.0)
            .map(|(x, p)| (bitstring(x, n), p))
            .collect())
    }
}

/// Bits of basis index `x` over `n` qubits, qubit 0 first.
pub fn index_bits(x: usize, n: usize) -> Vec<usize> {
    (0..n).map(|q| (x >> (n - 1 - q)) & 1).collect()
}

pub fn bitstring(x: usize, n: usize) -> String {
    index_bits(x, n)
        .into_iter()
        .map(|b| if b == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a string of `0`/`1` characters into bit values.
pub fn parse_bits(s: &str) -> Option<Vec<usize>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect()
}
