//! Knowledge compilation of weighted CNF into smooth d-DNNF arithmetic
//! circuits.
//!
//! The compiler is an exhaustive DPLL search: unit propagation after every
//! decision, connected-component decomposition of the residual clauses into
//! AND nodes, binary decision OR nodes, and a cache of compiled components.
//!
//! Decision nodes over summed variables may leave the decision literal
//! implicit (it always weighs 1), which keeps intermediate qubit states off
//! the leaves. For every other variable both branches carry the literal.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::bayesnet::{NodeId, ParamId};
use crate::cnf::{CnfVar, Lit, VarMeaning, VarRole, WeightedCnf};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AcNode {
    True,
    False,
    Lit(Lit),
    And(Vec<usize>),
    /// Decision on `var`: `lo` covers `var = false`, `hi` covers `var = true`.
    Or { var: u32, lo: usize, hi: usize },
}

impl AcNode {
    pub fn children(&self) -> &[usize] {
        match self {
            AcNode::And(kids) => kids,
            _ => &[],
        }
    }

    fn for_each_child(&self, mut f: impl FnMut(usize)) {
        match self {
            AcNode::And(kids) => kids.iter().for_each(|&k| f(k)),
            AcNode::Or { lo, hi, .. } => {
                f(*lo);
                f(*hi);
            }
            _ => {}
        }
    }

    fn edge_count(&self) -> usize {
        match self {
            AcNode::And(kids) => kids.len(),
            AcNode::Or { .. } => 2,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarOrder {
    MinFill,
    Lexicographic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    pub var_order: VarOrder,
    /// Keep summed variables off the leaves and decide them first.
    pub elide_summed: bool,
    /// Maximum number of cached components.
    pub cache_budget: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            var_order: VarOrder::MinFill,
            elide_summed: true,
            cache_budget: 1 << 21,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CompileStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub decisions: u64,
    pub cache_hits: u64,
    pub cache_entries: usize,
    /// Set when the cache filled up and later components went uncached.
    pub cache_exhausted: bool,
    #[serde(serialize_with = "as_millis")]
    pub wall_time: Duration,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

/// A compiled circuit. Nodes are in topological order with the root last.
/// `vars[v - 1]` describes AC variable `v`; variables fixed positively
/// before compilation are re-attached as leaves at the root.
#[derive(Clone, Debug)]
pub struct ArithmeticCircuit {
    pub nodes: Vec<AcNode>,
    pub vars: Vec<CnfVar>,
    pub stats: CompileStats,
}

impl ArithmeticCircuit {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(AcNode::edge_count).sum()
    }

    pub fn var(&self, v: u32) -> &CnfVar {
        &self.vars[v as usize - 1]
    }

    pub fn query_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == VarRole::Query)
            .map(|(i, _)| i as u32 + 1)
    }

    pub fn summed_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == VarRole::Summed)
            .map(|(i, _)| i as u32 + 1)
    }

    /// Leaf node indices per variable.
    pub fn var_index(&self) -> HashMap<u32, Vec<usize>> {
        let mut index: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let AcNode::Lit(l) = n {
                index.entry(l.var()).or_default().push(i);
            }
        }
        index
    }

    /// Upward pass with caller-supplied literal weights; `values` receives
    /// one entry per node.
    pub fn upward_into(&self, weight: impl Fn(Lit) -> Complex64, values: &mut Vec<Complex64>) {
        values.clear();
        values.reserve(self.nodes.len());
        for n in &self.nodes {
            let v = match n {
                AcNode::True => Complex64::new(1.0, 0.0),
                AcNode::False => Complex64::new(0.0, 0.0),
                AcNode::Lit(l) => weight(*l),
                AcNode::And(kids) => kids.iter().map(|&k| values[k]).product(),
                AcNode::Or { lo, hi, .. } => values[*lo] + values[*hi],
            };
            values.push(v);
        }
    }

    pub fn weighted_count(&self, weight: impl Fn(Lit) -> Complex64) -> Complex64 {
        let mut values = Vec::new();
        self.upward_into(weight, &mut values);
        values[self.root()]
    }

    /// Number of models over the AC variables (every literal weighs 1).
    pub fn model_count(&self) -> f64 {
        self.weighted_count(|_| Complex64::new(1.0, 0.0)).re
    }

    fn implicit_allowed(&self, var: u32) -> bool {
        self.var(var).role == VarRole::Summed
    }
}

/// Orders CNF variables for branching. The result is a permutation of
/// `1..=num_vars`, earliest decision first.
pub fn choose_var_order(cnf: &WeightedCnf, heuristic: VarOrder) -> Vec<u32> {
    match heuristic {
        VarOrder::Lexicographic => lexicographic_order(cnf),
        VarOrder::MinFill => {
            let mut order = min_fill_elimination(cnf);
            order.reverse();
            order
        }
    }
}

/// `(time, qubit, event-before-state, ket-before-bra)` parsed from a
/// `q{i}m{t}[rv][~]` label.
fn label_key(node: &NodeId) -> Option<(u32, u32, u8, u8)> {
    let s = node.as_str();
    let (s, bra) = match s.strip_suffix('~') {
        Some(rest) => (rest, 1),
        None => (s, 0),
    };
    let (s, state) = match s.strip_suffix("rv") {
        Some(rest) => (rest, 0),
        None => (s, 1),
    };
    let (q, t) = s.strip_prefix('q')?.split_once('m')?;
    Some((t.parse().ok()?, q.parse().ok()?, state, bra))
}

fn lexicographic_order(cnf: &WeightedCnf) -> Vec<u32> {
    let mut keyed: Vec<((u8, u32, u32, u8, u8, usize), u32)> = cnf
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let var = i as u32 + 1;
            let key = match &v.meaning {
                VarMeaning::Indicator { node, value } => match label_key(node) {
                    Some((t, q, state, bra)) => (0, t, q, state, bra, *value),
                    None => (0, u32::MAX, var, 0, 0, 0),
                },
                VarMeaning::Parameter { id } => (1, id.0, var, 0, 0, 0),
            };
            (key, var)
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, v)| v).collect()
}

/// Greedy min-fill elimination on the primal graph (one vertex per
/// variable, a clique per clause). Ties go to lower degree, then lower
/// variable index.
fn min_fill_elimination(cnf: &WeightedCnf) -> Vec<u32> {
    let n = cnf.num_vars();
    let mut adj: Vec<HashSet<u32>> = vec![HashSet::new(); n + 1];
    for clause in &cnf.clauses {
        for (i, a) in clause.iter().enumerate() {
            for b in &clause[i + 1..] {
                if a.var() != b.var() {
                    adj[a.var() as usize].insert(b.var());
                    adj[b.var() as usize].insert(a.var());
                }
            }
        }
    }
    let fill = |adj: &[HashSet<u32>], u: u32| -> usize {
        let ns: Vec<u32> = adj[u as usize].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                if !adj[a as usize].contains(&b) {
                    missing += 1;
                }
            }
        }
        missing
    };
    let mut score: Vec<(usize, usize)> = vec![(0, 0); n + 1];
    let mut queue: BTreeSet<(usize, usize, u32)> = BTreeSet::new();
    for u in 1..=n as u32 {
        score[u as usize] = (fill(&adj, u), adj[u as usize].len());
        queue.insert((score[u as usize].0, score[u as usize].1, u));
    }
    let mut order = Vec::with_capacity(n);
    while let Some(&(f, d, u)) = queue.iter().next() {
        queue.remove(&(f, d, u));
        order.push(u);
        let ns: Vec<u32> = adj[u as usize].drain().collect();
        for &a in &ns {
            adj[a as usize].remove(&u);
        }
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                adj[a as usize].insert(b);
                adj[b as usize].insert(a);
            }
        }
        let mut affected: BTreeSet<u32> = ns.iter().copied().collect();
        for &a in &ns {
            affected.extend(adj[a as usize].iter().copied());
        }
        for w in affected {
            let old = score[w as usize];
            if !queue.remove(&(old.0, old.1, w)) {
                continue;
            }
            let new = (fill(&adj, w), adj[w as usize].len());
            score[w as usize] = new;
            queue.insert((new.0, new.1, w));
        }
    }
    order
}

const TRUE: usize = 0;
const FALSE: usize = 1;

/// Hash-consed node store. Index 0 is TRUE and index 1 is FALSE.
struct Store {
    nodes: Vec<AcNode>,
    unique: HashMap<AcNode, usize>,
}

impl Store {
    fn new() -> Self {
        let mut s = Store {
            nodes: Vec::new(),
            unique: HashMap::new(),
        };
        s.intern(AcNode::True);
        s.intern(AcNode::False);
        s
    }

    fn intern(&mut self, n: AcNode) -> usize {
        if let Some(&i) = self.unique.get(&n) {
            return i;
        }
        self.nodes.push(n.clone());
        self.unique.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn lit(&mut self, l: Lit) -> usize {
        self.intern(AcNode::Lit(l))
    }

    fn and(&mut self, kids: Vec<usize>) -> usize {
        let mut flat = Vec::with_capacity(kids.len());
        for k in kids {
            match &self.nodes[k] {
                AcNode::True => {}
                AcNode::False => return FALSE,
                AcNode::And(grand) => flat.extend_from_slice(grand),
                _ => flat.push(k),
            }
        }
        flat.sort_unstable();
        match flat.len() {
            0 => TRUE,
            1 => flat[0],
            _ => self.intern(AcNode::And(flat)),
        }
    }

    fn or(&mut self, var: u32, lo: usize, hi: usize) -> usize {
        self.intern(AcNode::Or { var, lo, hi })
    }
}

struct Compiler<'a> {
    clauses: &'a [Vec<Lit>],
    /// Clause ids per literal code `2 * var + positive`.
    occ: Vec<Vec<u32>>,
    value: Vec<i8>,
    trail: Vec<Lit>,
    rank: Vec<u32>,
    elide: Vec<bool>,
    uf: Vec<u32>,
    uf_stamp: Vec<u32>,
    group_of: Vec<u32>,
    stamp: u32,
    cache: HashMap<(Vec<u32>, Vec<u32>), usize>,
    budget: usize,
    store: Store,
    stats: CompileStats,
}

fn code(l: Lit) -> usize {
    2 * l.var() as usize + l.is_positive() as usize
}

impl<'a> Compiler<'a> {
    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.value[l.var() as usize];
        if l.is_positive() {
            v
        } else {
            -v
        }
    }

    fn assign(&mut self, l: Lit) {
        self.value[l.var() as usize] = if l.is_positive() { 1 } else { -1 };
        self.trail.push(l);
    }

    fn undo(&mut self, to: usize) {
        while self.trail.len() > to {
            let l = self.trail.pop().unwrap();
            self.value[l.var() as usize] = 0;
        }
    }

    /// Unit propagation over trail entries from `head`; false on conflict.
    fn propagate(&mut self, mut head: usize) -> bool {
        while head < self.trail.len() {
            let falsified = code(self.trail[head].negate());
            head += 1;
            for k in 0..self.occ[falsified].len() {
                let ci = self.occ[falsified][k] as usize;
                let mut open = None;
                let mut count = 0;
                let mut sat = false;
                for &x in &self.clauses[ci] {
                    match self.lit_value(x) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            if open != Some(x) {
                                count += 1;
                            }
                            open = Some(x);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match count {
                    0 => return false,
                    1 => self.assign(open.unwrap()),
                    _ => {}
                }
            }
        }
        true
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.uf[v as usize] != v {
            let p = self.uf[v as usize];
            self.uf[v as usize] = self.uf[p as usize];
            v = p;
        }
        v
    }

    fn touch(&mut self, v: u32) {
        if self.uf_stamp[v as usize] != self.stamp {
            self.uf_stamp[v as usize] = self.stamp;
            self.uf[v as usize] = v;
            self.group_of[v as usize] = u32::MAX;
        }
    }

    fn free_var(&mut self, v: u32) -> usize {
        if self.elide[v as usize] {
            self.store.or(v, TRUE, TRUE)
        } else {
            let neg = self.store.lit(Lit::new(v, false));
            let pos = self.store.lit(Lit::new(v, true));
            self.store.or(v, neg, pos)
        }
    }

    /// Conjunction of the literals implied since `start`, the variables of
    /// `vars` that became unconstrained, and the compiled components of
    /// the still-open clauses in `clauses`.
    fn expand(&mut self, clauses: &[u32], vars: &[u32], start: usize) -> usize {
        let mut parts = Vec::new();
        for i in start..self.trail.len() {
            let l = self.trail[i];
            if !self.elide[l.var() as usize] {
                parts.push(self.store.lit(l));
            }
        }

        self.stamp += 1;
        let mut open: Vec<u32> = Vec::new();
        for &ci in clauses {
            let clause = &self.clauses[ci as usize];
            if clause.iter().any(|&x| self.lit_value(x) == 1) {
                continue;
            }
            open.push(ci);
            let mut first: Option<u32> = None;
            for k in 0..clause.len() {
                let x = self.clauses[ci as usize][k];
                if self.value[x.var() as usize] != 0 {
                    continue;
                }
                self.touch(x.var());
                match first {
                    None => first = Some(x.var()),
                    Some(f) => {
                        let (a, b) = (self.find(f), self.find(x.var()));
                        if a != b {
                            self.uf[a as usize] = b;
                        }
                    }
                }
            }
        }
        for &v in vars {
            if self.value[v as usize] == 0 && self.uf_stamp[v as usize] != self.stamp {
                parts.push(self.free_var(v));
            }
        }

        let mut groups: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
        for &ci in &open {
            let anchor = self.clauses[ci as usize]
                .iter()
                .find(|x| self.value[x.var() as usize] == 0)
                .expect("open clause has an unassigned literal")
                .var();
            let root = self.find(anchor);
            let g = if self.group_of[root as usize] == u32::MAX {
                self.group_of[root as usize] = groups.len() as u32;
                groups.push((Vec::new(), Vec::new()));
                groups.len() - 1
            } else {
                self.group_of[root as usize] as usize
            };
            groups[g].0.push(ci);
        }
        for &v in vars {
            if self.value[v as usize] == 0 && self.uf_stamp[v as usize] == self.stamp {
                let root = self.find(v);
                groups[self.group_of[root as usize] as usize].1.push(v);
            }
        }

        for (cs, vs) in groups {
            let node = self.component(cs, vs);
            if node == FALSE {
                return FALSE;
            }
            parts.push(node);
        }
        self.store.and(parts)
    }

    fn component(&mut self, clauses: Vec<u32>, vars: Vec<u32>) -> usize {
        let key = (clauses, vars);
        if let Some(&n) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return n;
        }
        let (clauses, vars) = key;
        let v = *vars
            .iter()
            .min_by_key(|&&v| self.rank[v as usize])
            .expect("component has variables");
        self.stats.decisions += 1;
        let mut branch = [FALSE; 2];
        for (i, positive) in [false, true].into_iter().enumerate() {
            let start = self.trail.len();
            self.assign(Lit::new(v, positive));
            if self.propagate(start) {
                branch[i] = self.expand(&clauses, &vars, start);
            }
            self.undo(start);
        }
        let node = self.store.or(v, branch[0], branch[1]);
        if self.cache.len() < self.budget {
            self.cache.insert((clauses, vars), node);
        } else {
            self.stats.cache_exhausted = true;
        }
        node
    }
}

thread_local! {
    static COMPILATIONS: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

/// Number of [`compile`] calls made so far on the current thread.
pub fn compilations_on_this_thread() -> usize {
    COMPILATIONS.with(|c| c.get())
}

/// Compiles weighted CNF to a d-DNNF arithmetic circuit (not yet smooth;
/// see [`smooth`]). An unsatisfiable formula yields a lone FALSE node.
pub fn compile(cnf: &WeightedCnf, opts: &CompileOptions) -> ArithmeticCircuit {
    COMPILATIONS.with(|c| c.set(c.get() + 1));
    // Decision recursion can go as deep as the variable count.
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 30)
            .spawn_scoped(s, || compile_inner(cnf, opts))
            .expect("spawn compiler thread")
            .join()
            .expect("compiler thread panicked")
    })
}

fn compile_inner(cnf: &WeightedCnf, opts: &CompileOptions) -> ArithmeticCircuit {
    let started = Instant::now();
    let n = cnf.num_vars();
    let mut order = choose_var_order(cnf, opts.var_order);
    if opts.elide_summed {
        order.sort_by_key(|&v| cnf.var(v).role != VarRole::Summed);
    }
    let mut rank = vec![0u32; n + 1];
    for (i, &v) in order.iter().enumerate() {
        rank[v as usize] = i as u32;
    }
    let mut occ = vec![Vec::new(); 2 * n + 2];
    for (ci, clause) in cnf.clauses.iter().enumerate() {
        for &l in clause {
            let list: &mut Vec<u32> = &mut occ[code(l)];
            if list.last() != Some(&(ci as u32)) {
                list.push(ci as u32);
            }
        }
    }
    let mut elide = vec![false; n + 1];
    if opts.elide_summed {
        for v in cnf.summed_vars() {
            elide[v as usize] = true;
        }
    }
    let mut c = Compiler {
        clauses: &cnf.clauses,
        occ,
        value: vec![0; n + 1],
        trail: Vec::new(),
        rank,
        elide,
        uf: vec![0; n + 1],
        uf_stamp: vec![0; n + 1],
        group_of: vec![0; n + 1],
        stamp: 0,
        cache: HashMap::new(),
        budget: opts.cache_budget,
        store: Store::new(),
        stats: CompileStats::default(),
    };

    let mut root = FALSE;
    let mut consistent = true;
    for clause in &cnf.clauses {
        let mut open = clause.iter().filter(|&&x| c.lit_value(x) >= 0);
        let first = open.next().copied();
        match first {
            None => consistent = false,
            Some(x) if c.lit_value(x) == 0 && open.all(|&y| y == x) => {
                let start = c.trail.len();
                c.assign(x);
                consistent = c.propagate(start);
            }
            _ => {}
        }
        if !consistent {
            break;
        }
    }
    if consistent {
        let all_clauses: Vec<u32> = (0..cnf.clauses.len() as u32).collect();
        let all_vars: Vec<u32> = (1..=n as u32).collect();
        root = c.expand(&all_clauses, &all_vars, 0);
    }

    // Re-attach positively fixed literals whose weight is not constant.
    let mut vars = cnf.vars.clone();
    let mut pinned = vec![root];
    for f in &cnf.fixed {
        if f.value && f.var.role != VarRole::Summed {
            vars.push(f.var.clone());
            pinned.push(c.store.lit(Lit::new(vars.len() as u32, true)));
        }
    }
    let root = c.store.and(pinned);

    let mut stats = c.stats;
    stats.cache_entries = c.cache.len();
    let nodes = prune(&c.store.nodes, root);
    let mut ac = ArithmeticCircuit {
        nodes,
        vars,
        stats,
    };
    ac.stats.node_count = ac.node_count();
    ac.stats.edge_count = ac.edge_count();
    ac.stats.wall_time = started.elapsed();
    ac
}

/// Drops FALSE branches of OR nodes and everything unreachable from `root`,
/// returning nodes renumbered with the root last.
fn prune(nodes: &[AcNode], root: usize) -> Vec<AcNode> {
    let mut store = Store::new();
    let mut map = vec![FALSE; nodes.len()];
    let mut needed = vec![false; nodes.len()];
    needed[root] = true;
    for i in (0..nodes.len()).rev() {
        if needed[i] {
            nodes[i].for_each_child(|k| needed[k] = true);
        }
    }
    for (i, n) in nodes.iter().enumerate() {
        if !needed[i] {
            continue;
        }
        map[i] = match n {
            AcNode::True => TRUE,
            AcNode::False => FALSE,
            AcNode::Lit(l) => store.lit(*l),
            AcNode::And(kids) => store.and(kids.iter().map(|&k| map[k]).collect()),
            AcNode::Or { var, lo, hi } => match (map[*lo], map[*hi]) {
                (FALSE, FALSE) => FALSE,
                (FALSE, x) | (x, FALSE) => x,
                (a, b) => store.or(*var, a, b),
            },
        };
    }
    compact(&store.nodes, map[root])
}

/// Keeps the nodes reachable from `root`, preserving relative order.
fn compact(nodes: &[AcNode], root: usize) -> Vec<AcNode> {
    let mut keep = vec![false; nodes.len()];
    keep[root] = true;
    for i in (0..=root).rev() {
        if keep[i] {
            nodes[i].for_each_child(|k| keep[k] = true);
        }
    }
    let mut new_index = vec![usize::MAX; nodes.len()];
    let mut out = Vec::new();
    for i in 0..=root {
        if !keep[i] {
            continue;
        }
        let n = match &nodes[i] {
            AcNode::And(kids) => AcNode::And(kids.iter().map(|&k| new_index[k]).collect()),
            AcNode::Or { var, lo, hi } => AcNode::Or {
                var: *var,
                lo: new_index[*lo],
                hi: new_index[*hi],
            },
            other => other.clone(),
        };
        new_index[i] = out.len();
        out.push(n);
    }
    out
}

/// Sorted variables mentioned below each node, decision variables included;
/// `keep` filters which variables are tracked.
fn mention_sets(ac: &ArithmeticCircuit, keep: impl Fn(u32) -> bool) -> Vec<Vec<u32>> {
    let mut sets: Vec<Vec<u32>> = Vec::with_capacity(ac.nodes.len());
    for n in &ac.nodes {
        let mut s: Vec<u32> = match n {
            AcNode::True | AcNode::False => Vec::new(),
            AcNode::Lit(l) => vec![l.var()],
            AcNode::And(kids) => kids.iter().flat_map(|&k| sets[k].iter().copied()).collect(),
            AcNode::Or { var, lo, hi } => {
                let mut s = sets[*lo].clone();
                s.extend_from_slice(&sets[*hi]);
                s.push(*var);
                s
            }
        };
        s.retain(|&v| keep(v));
        s.sort_unstable();
        s.dedup();
        sets.push(s);
    }
    sets
}

fn sorted_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().filter(|x| b.binary_search(x).is_err()).copied().collect()
}

/// Makes both branches of every OR mention the same query variables by
/// conjoining `(¬v ∨ v)` gadgets for the missing ones. Summed and parameter
/// variables are left alone.
pub fn smooth(ac: &ArithmeticCircuit) -> ArithmeticCircuit {
    let is_query: Vec<bool> = ac.vars.iter().map(|v| v.role == VarRole::Query).collect();
    let sets = mention_sets(ac, |v| is_query[v as usize - 1]);
    let mut store = Store::new();
    let mut map = vec![0usize; ac.nodes.len()];
    let gadget = |store: &mut Store, vars: &[u32]| -> Vec<usize> {
        vars.iter()
            .map(|&v| {
                let neg = store.lit(Lit::new(v, false));
                let pos = store.lit(Lit::new(v, true));
                store.or(v, neg, pos)
            })
            .collect()
    };
    for (i, n) in ac.nodes.iter().enumerate() {
        map[i] = match n {
            AcNode::True => TRUE,
            AcNode::False => FALSE,
            AcNode::Lit(l) => store.lit(*l),
            AcNode::And(kids) => store.and(kids.iter().map(|&k| map[k]).collect()),
            AcNode::Or { var, lo, hi } => {
                let mut lo_parts = gadget(&mut store, &sorted_difference(&sets[*hi], &sets[*lo]));
                let mut hi_parts = gadget(&mut store, &sorted_difference(&sets[*lo], &sets[*hi]));
                lo_parts.push(map[*lo]);
                hi_parts.push(map[*hi]);
                let lo = store.and(lo_parts);
                let hi = store.and(hi_parts);
                store.or(*var, lo, hi)
            }
        };
    }
    let nodes = compact(&store.nodes, map[ac.root()]);
    let mut out = ArithmeticCircuit {
        nodes,
        vars: ac.vars.clone(),
        stats: ac.stats.clone(),
    };
    out.stats.node_count = out.node_count();
    out.stats.edge_count = out.edge_count();
    out
}

/// Whether `node` entails literal `l` (every model contains it).
fn entails(ac: &ArithmeticCircuit, node: usize, l: Lit, memo: &mut HashMap<(usize, Lit), bool>) -> bool {
    if let Some(&r) = memo.get(&(node, l)) {
        return r;
    }
    let r = match &ac.nodes[node] {
        AcNode::True => false,
        AcNode::False => true,
        AcNode::Lit(x) => *x == l,
        AcNode::And(kids) => kids.iter().any(|&k| entails(ac, k, l, memo)),
        AcNode::Or { var, lo, hi } => {
            // An implicit decision literal is entailed by construction.
            let implicit = *var == l.var() && ac.implicit_allowed(*var);
            let lo_ok = (implicit && !l.is_positive()) || entails(ac, *lo, l, memo);
            let hi_ok = (implicit && l.is_positive()) || entails(ac, *hi, l, memo);
            lo_ok && hi_ok
        }
    };
    memo.insert((node, l), r);
    r
}

/// Structural checks: acyclicity, decomposability, determinism and
/// smoothness over query variables. Empty when everything holds.
pub fn check_ddnnf(ac: &ArithmeticCircuit) -> Vec<String> {
    let mut diags = Vec::new();
    if ac.nodes.is_empty() {
        diags.push("circuit has no nodes".to_string());
        return diags;
    }
    for (i, n) in ac.nodes.iter().enumerate() {
        let mut bad = false;
        n.for_each_child(|k| bad |= k >= i);
        if bad {
            diags.push(format!("node {i}: child does not precede its parent (cycle or misordering)"));
        }
        if let AcNode::Lit(l) = n {
            if l.var() == 0 || l.var() as usize > ac.vars.len() {
                diags.push(format!("node {i}: literal {l} has no variable"));
            }
        }
    }
    if !diags.is_empty() {
        return diags;
    }
    let all = mention_sets(ac, |_| true);
    let mut memo = HashMap::new();
    for (i, n) in ac.nodes.iter().enumerate() {
        match n {
            AcNode::And(kids) => {
                let total: usize = kids.iter().map(|&k| all[k].len()).sum();
                if total != all[i].len() {
                    diags.push(format!("node {i}: AND children share variables (not decomposable)"));
                }
            }
            AcNode::Or { var, lo, hi } => {
                let (v, implicit) = (*var, ac.implicit_allowed(*var));
                let pos = Lit::new(v, true);
                let neg = Lit::new(v, false);
                let deterministic = if implicit {
                    let lo_mentions = all[*lo].binary_search(&v).is_ok();
                    let hi_mentions = all[*hi].binary_search(&v).is_ok();
                    !entails(ac, *lo, pos, &mut memo)
                        && !entails(ac, *hi, neg, &mut memo)
                        && (!lo_mentions || entails(ac, *lo, neg, &mut memo))
                        && (!hi_mentions || entails(ac, *hi, pos, &mut memo))
                } else {
                    entails(ac, *lo, neg, &mut memo) && entails(ac, *hi, pos, &mut memo)
                };
                if !deterministic {
                    diags.push(format!(
                        "node {i}: OR branches are not separated by variable {v} (not deterministic)"
                    ));
                }
            }
            _ => {}
        }
    }
    let is_query: Vec<bool> = ac.vars.iter().map(|v| v.role == VarRole::Query).collect();
    let query = mention_sets(ac, |v| is_query[v as usize - 1]);
    for (i, n) in ac.nodes.iter().enumerate() {
        if let AcNode::Or { lo, hi, .. } = n {
            if query[*lo] != query[*hi] {
                diags.push(format!("node {i}: OR branches mention different query variables (not smooth)"));
            }
        }
    }
    diags
}

pub fn compile_stats(ac: &ArithmeticCircuit) -> CompileStats {
    let mut stats = ac.stats.clone();
    stats.node_count = ac.node_count();
    stats.edge_count = ac.edge_count();
    stats
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: child {child} does not refer to an earlier node")]
    DanglingChild { line: usize, child: usize },
    #[error("header declares {declared} {what}, body has {found}")]
    CountMismatch {
        what: &'static str,
        declared: usize,
        found: usize,
    },
}

fn role_tag(role: VarRole) -> &'static str {
    match role {
        VarRole::Query => "q",
        VarRole::Summed => "s",
        VarRole::Parameter => "p",
    }
}

/// Text form:
///
/// ```text
/// nnf <nodes> <edges> <vars>
/// L <lit> | A <k> <child>… | O <var> 2 <lo> <hi> | T | F
/// c var <v> ind <node> <value> <q|s>
/// c var <v> par <id> <re> <im>
/// ```
///
/// Children refer to earlier lines (0-based); the last node is the root.
pub fn serialize_ac(ac: &ArithmeticCircuit) -> String {
    let mut out = String::new();
    writeln!(out, "nnf {} {} {}", ac.node_count(), ac.edge_count(), ac.vars.len()).unwrap();
    for n in &ac.nodes {
        match n {
            AcNode::True => out.push_str("T\n"),
            AcNode::False => out.push_str("F\n"),
            AcNode::Lit(l) => writeln!(out, "L {l}").unwrap(),
            AcNode::And(kids) => {
                write!(out, "A {}", kids.len()).unwrap();
                for k in kids {
                    write!(out, " {k}").unwrap();
                }
                out.push('\n');
            }
            AcNode::Or { var, lo, hi } => writeln!(out, "O {var} 2 {lo} {hi}").unwrap(),
        }
    }
    for (i, v) in ac.vars.iter().enumerate() {
        match &v.meaning {
            VarMeaning::Indicator { node, value } => {
                writeln!(out, "c var {} ind {node} {value} {}", i + 1, role_tag(v.role)).unwrap()
            }
            VarMeaning::Parameter { id } => writeln!(
                out,
                "c var {} par {} {:.16e} {:.16e}",
                i + 1,
                id.0,
                v.weight.re,
                v.weight.im
            )
            .unwrap(),
        }
    }
    out
}

pub fn parse_ac(text: &str) -> Result<ArithmeticCircuit, AcParseError> {
    let syntax = |line: usize, message: &str| AcParseError::Syntax {
        line,
        message: message.to_string(),
    };
    let mut header: Option<(usize, usize, usize)> = None;
    let mut nodes: Vec<AcNode> = Vec::new();
    let mut vars: Vec<Option<CnfVar>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t: Vec<&str> = raw.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        let num = |s: &str| -> Result<usize, AcParseError> {
            s.parse().map_err(|_| syntax(line, &format!("expected an integer, found `{s}`")))
        };
        let child = |s: &str, count: usize| -> Result<usize, AcParseError> {
            let c = num(s)?;
            if c >= count {
                return Err(AcParseError::DanglingChild { line, child: c });
            }
            Ok(c)
        };
        if header.is_none() {
            if t.len() != 4 || t[0] != "nnf" {
                return Err(syntax(line, "expected `nnf N E V` header"));
            }
            let h = (num(t[1])?, num(t[2])?, num(t[3])?);
            vars = vec![None; h.2];
            header = Some(h);
            continue;
        }
        let nvars = vars.len();
        let check_var = |v: usize| -> Result<u32, AcParseError> {
            if v == 0 || v > nvars {
                Err(syntax(line, &format!("variable {v} out of range")))
            } else {
                Ok(v as u32)
            }
        };
        let count = nodes.len();
        let node = match t[0] {
            "T" if t.len() == 1 => AcNode::True,
            "F" if t.len() == 1 => AcNode::False,
            "L" if t.len() == 2 => {
                let x: i32 = t[1].parse().map_err(|_| syntax(line, "bad literal"))?;
                check_var(x.unsigned_abs() as usize)?;
                AcNode::Lit(Lit::from_dimacs(x))
            }
            "A" if t.len() >= 2 => {
                let k = num(t[1])?;
                if t.len() != 2 + k {
                    return Err(syntax(line, "AND child count does not match"));
                }
                AcNode::And(t[2..].iter().map(|s| child(s, count)).collect::<Result<_, _>>()?)
            }
            "O" if t.len() == 5 && t[2] == "2" => AcNode::Or {
                var: check_var(num(t[1])?)?,
                lo: child(t[3], count)?,
                hi: child(t[4], count)?,
            },
            "c" if t.len() >= 2 && t[1] == "var" => {
                let v = check_var(num(t.get(2).copied().unwrap_or(""))?)? as usize;
                let var = match (t.get(3).copied(), t.len()) {
                    (Some("ind"), 7) => CnfVar {
                        meaning: VarMeaning::Indicator {
                            node: NodeId(t[4].to_string()),
                            value: num(t[5])?,
                        },
                        role: match t[6] {
                            "q" => VarRole::Query,
                            "s" => VarRole::Summed,
                            _ => return Err(syntax(line, "bad role")),
                        },
                        weight: Complex64::new(1.0, 0.0),
                    },
                    (Some("par"), 7) => {
                        let real = |s: &str| -> Result<f64, AcParseError> {
                            s.parse().map_err(|_| syntax(line, "bad real"))
                        };
                        CnfVar {
                            meaning: VarMeaning::Parameter {
                                id: ParamId(num(t[4])? as u32),
                            },
                            role: VarRole::Parameter,
                            weight: Complex64::new(real(t[5])?, real(t[6])?),
                        }
                    }
                    _ => return Err(syntax(line, "malformed variable line")),
                };
                vars[v - 1] = Some(var);
                continue;
            }
            "c" => continue,
            _ => return Err(syntax(line, "unrecognized node line")),
        };
        nodes.push(node);
    }
    let (n, e, _) = header.ok_or_else(|| syntax(0, "missing header"))?;
    let vars: Vec<CnfVar> = vars
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.unwrap_or(CnfVar {
                meaning: VarMeaning::Parameter { id: ParamId(i as u32) },
                role: VarRole::Parameter,
                weight: Complex64::new(1.0, 0.0),
            })
        })
        .collect();
    let mut ac = ArithmeticCircuit {
        nodes,
        vars,
        stats: CompileStats::default(),
    };
    if ac.node_count() != n || n == 0 {
        return Err(AcParseError::CountMismatch {
            what: "nodes",
            declared: n,
            found: ac.node_count(),
        });
    }
    if ac.edge_count() != e {
        return Err(AcParseError::CountMismatch {
            what: "edges",
            declared: e,
            found: ac.edge_count(),
        });
    }
    ac.stats.node_count = n;
    ac.stats.edge_count = e;
    Ok(ac)
}
