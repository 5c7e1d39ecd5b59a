//! Weighted CNF encoding of Bayesian networks.
//!
//! Each network node gets one indicator variable per value, tied together by
//! exactly-one clauses. Each non-structural table value gets a parameter
//! variable that is constrained to be true exactly when one of the cells it
//! stands for is active, so every satisfying assignment is one Feynman path
//! and carries the product of its parameter weights. Deterministic rows turn
//! into plain implications and zero cells into blocking clauses.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use thiserror::Error;

use crate::bayesnet::{BayesNet, Entry, NodeId, ParamId, ParamTable};

/// DIMACS-style literal: positive for `var`, negative for `¬var`, `var ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        debug_assert!(var >= 1);
        let v = var as i32;
        Lit(if positive { v } else { -v })
    }

    pub fn from_dimacs(x: i32) -> Lit {
        debug_assert!(x != 0);
        Lit(x)
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negate(self) -> Lit {
        Lit(-self.0)
    }

    pub fn dimacs(self) -> i32 {
        self.0
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum VarMeaning {
    Indicator { node: NodeId, value: usize },
    Parameter { id: ParamId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarRole {
    /// Indicator of an output or noise-event node; may receive evidence.
    Query,
    /// Indicator of an intermediate state; always summed out.
    Summed,
    Parameter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnfVar {
    pub meaning: VarMeaning,
    pub role: VarRole,
    /// Weight of the positive literal when no binding overrides it
    /// (1 for indicators).
    pub weight: Complex64,
}

/// A variable fixed by unit resolution and removed from the formula.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedLiteral {
    pub var: CnfVar,
    pub value: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedCnf {
    /// `vars[i]` describes variable `i + 1`.
    pub vars: Vec<CnfVar>,
    pub clauses: Vec<Vec<Lit>>,
    pub fixed: Vec<FixedLiteral>,
}

impl WeightedCnf {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var(&self, v: u32) -> &CnfVar {
        &self.vars[v as usize - 1]
    }

    pub fn query_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.vars_with_role(VarRole::Query)
    }

    pub fn summed_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.vars_with_role(VarRole::Summed)
    }

    fn vars_with_role(&self, role: VarRole) -> impl Iterator<Item = u32> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(move |(_, v)| v.role == role)
            .map(|(i, _)| i as u32 + 1)
    }

    /// Indicator variable for `node = value`, if present.
    pub fn indicator(&self, node: &NodeId, value: usize) -> Option<u32> {
        self.vars
            .iter()
            .position(|v| matches!(&v.meaning, VarMeaning::Indicator { node: n, value: x } if n == node && *x == value))
            .map(|i| i as u32 + 1)
    }

    pub fn parameter(&self, id: ParamId) -> Option<u32> {
        self.vars
            .iter()
            .position(|v| v.meaning == VarMeaning::Parameter { id })
            .map(|i| i as u32 + 1)
    }

    /// Clauses containing `lit`.
    pub fn clauses_with(&self, lit: Lit) -> impl Iterator<Item = &Vec<Lit>> + '_ {
        self.clauses.iter().filter(move |c| c.contains(&lit))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CnfError {
    #[error("unit resolution derived the empty clause; the encoding is inconsistent")]
    Inconsistent,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Encodes a Bayesian network and its parameters as weighted CNF.
pub fn bn_to_cnf(bn: &BayesNet, params: &ParamTable) -> WeightedCnf {
    let mut vars = Vec::new();
    let mut query = vec![false; bn.nodes.len()];
    for &i in bn.outputs.iter().chain(&bn.noise_events) {
        query[i] = true;
    }
    // indicator[node][value] -> var
    let mut indicator: Vec<Vec<u32>> = Vec::with_capacity(bn.nodes.len());
    for (i, node) in bn.nodes.iter().enumerate() {
        let role = if query[i] { VarRole::Query } else { VarRole::Summed };
        let mut ids = Vec::with_capacity(node.domain);
        for value in 0..node.domain {
            vars.push(CnfVar {
                meaning: VarMeaning::Indicator {
                    node: node.id.clone(),
                    value,
                },
                role,
                weight: Complex64::new(1.0, 0.0),
            });
            ids.push(vars.len() as u32);
        }
        indicator.push(ids);
    }
    let param_base = vars.len() as u32;
    for (i, &w) in params.values.iter().enumerate() {
        vars.push(CnfVar {
            meaning: VarMeaning::Parameter { id: ParamId(i as u32) },
            role: VarRole::Parameter,
            weight: w,
        });
    }
    let param_var = |id: ParamId| param_base + id.0 + 1;

    let mut clauses: Vec<Vec<Lit>> = Vec::new();

    // Exactly one value per node.
    for ids in &indicator {
        clauses.push(ids.iter().map(|&v| Lit::new(v, true)).collect());
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                clauses.push(vec![Lit::new(ids[a], false), Lit::new(ids[b], false)]);
            }
        }
    }

    // Known initial values.
    for &(node, value) in &bn.initial_evidence {
        clauses.push(vec![Lit::new(indicator[node][value], true)]);
    }

    for (i, node) in bn.nodes.iter().enumerate() {
        let cat = &node.cat;
        let rows = cat.rows();
        // ¬(parents = row) as literals.
        let row_guard = |row: usize| -> Vec<Lit> {
            cat.row_values(row)
                .iter()
                .zip(&cat.parents)
                .map(|(&v, &p)| Lit::new(indicator[p][v], false))
                .collect()
        };
        for row in 0..rows {
            if cat.row_is_deterministic(row) {
                let value = (0..node.domain)
                    .find(|&v| cat.entry(row, v) == Entry::One)
                    .expect("deterministic row");
                let mut c = row_guard(row);
                c.push(Lit::new(indicator[i][value], true));
                clauses.push(c);
                continue;
            }
            for value in 0..node.domain {
                let mut c = row_guard(row);
                c.push(Lit::new(indicator[i][value], false));
                match cat.entry(row, value) {
                    Entry::Zero => clauses.push(c),
                    Entry::One => {}
                    Entry::Param(id) => {
                        c.push(Lit::new(param_var(id), true));
                        clauses.push(c);
                    }
                }
            }
        }
        // A parameter is false whenever a cell it does not stand for is
        // active, which makes it a function of the indicators.
        let mut table_params: Vec<ParamId> = cat
            .entries
            .iter()
            .filter_map(|e| match e {
                Entry::Param(id) => Some(*id),
                _ => None,
            })
            .collect();
        table_params.sort();
        table_params.dedup();
        for id in table_params {
            for row in 0..rows {
                for value in 0..node.domain {
                    match cat.entry(row, value) {
                        Entry::Zero => {}
                        Entry::Param(other) if other == id => {}
                        _ => {
                            let mut c = vec![Lit::new(param_var(id), false)];
                            c.extend(row_guard(row));
                            c.push(Lit::new(indicator[i][value], false));
                            clauses.push(c);
                        }
                    }
                }
            }
        }
    }

    WeightedCnf {
        vars,
        clauses,
        fixed: Vec::new(),
    }
}

/// Propagates unit clauses to a fixpoint, drops satisfied clauses and false
/// literals, records fixed variables and renumbers the rest densely.
pub fn simplify_units(cnf: &WeightedCnf) -> Result<WeightedCnf, CnfError> {
    let n = cnf.num_vars();
    let mut value: Vec<Option<bool>> = vec![None; n + 1];
    let mut clauses: Vec<Vec<Lit>> = cnf.clauses.clone();
    loop {
        let mut changed = false;
        let mut next = Vec::with_capacity(clauses.len());
        for clause in clauses {
            let mut satisfied = false;
            let mut rest = Vec::with_capacity(clause.len());
            for lit in clause {
                match value[lit.var() as usize] {
                    Some(v) if v == lit.is_positive() => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => rest.push(lit),
                }
            }
            if satisfied {
                changed = true;
                continue;
            }
            match rest.len() {
                0 => return Err(CnfError::Inconsistent),
                1 => {
                    let lit = rest[0];
                    value[lit.var() as usize] = Some(lit.is_positive());
                    changed = true;
                }
                _ => next.push(rest),
            }
        }
        clauses = next;
        if !changed {
            break;
        }
    }

    let mut fixed = cnf.fixed.clone();
    let mut remap = vec![0u32; n + 1];
    let mut vars = Vec::new();
    for v in 1..=n {
        match value[v] {
            Some(b) => fixed.push(FixedLiteral {
                var: cnf.vars[v - 1].clone(),
                value: b,
            }),
            None => {
                vars.push(cnf.vars[v - 1].clone());
                remap[v] = vars.len() as u32;
            }
        }
    }
    let clauses = clauses
        .into_iter()
        .map(|c| {
            c.into_iter()
                .map(|l| Lit::new(remap[l.var() as usize], l.is_positive()))
                .collect()
        })
        .collect();
    Ok(WeightedCnf {
        vars,
        clauses,
        fixed,
    })
}

fn role_tag(role: VarRole) -> &'static str {
    match role {
        VarRole::Query => "q",
        VarRole::Summed => "s",
        VarRole::Parameter => "p",
    }
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the extended DIMACS format:
///
/// ```text
/// p cnf V C
/// c ind <var> <node> <value>        indicator meaning
/// c w <var> <re> <im>               parameter weight
/// c pid <var> <param-id>            parameter identity
/// c q <var> | c s <var>             query / summed indicator
/// c fix ind <node> <value> <q|s> <0|1>
/// c fix par <param-id> <re> <im> <0|1>
/// <clauses, each terminated by 0>
/// ```
pub fn emit_dimacs(cnf: &WeightedCnf) -> String {
    let mut out = String::new();
    writeln!(out, "p cnf {} {}", cnf.num_vars(), cnf.clauses.len()).unwrap();
    for (i, v) in cnf.vars.iter().enumerate() {
        let var = i + 1;
        match &v.meaning {
            VarMeaning::Indicator { node, value } => {
                writeln!(out, "c ind {var} {node} {value}").unwrap();
                writeln!(out, "c {} {var}", role_tag(v.role)).unwrap();
            }
            VarMeaning::Parameter { id } => {
                writeln!(out, "c w {var} {} {}", fmt_real(v.weight.re), fmt_real(v.weight.im))
                    .unwrap();
                writeln!(out, "c pid {var} {}", id.0).unwrap();
            }
        }
    }
    for f in &cnf.fixed {
        let bit = f.value as u8;
        match &f.var.meaning {
            VarMeaning::Indicator { node, value } => {
                writeln!(out, "c fix ind {node} {value} {} {bit}", role_tag(f.var.role)).unwrap()
            }
            VarMeaning::Parameter { id } => writeln!(
                out,
                "c fix par {} {} {} {bit}",
                id.0,
                fmt_real(f.var.weight.re),
                fmt_real(f.var.weight.im)
            )
            .unwrap(),
        }
    }
    for clause in &cnf.clauses {
        for lit in clause {
            write!(out, "{lit} ").unwrap();
        }
        out.push_str("0\n");
    }
    out
}

/// Parses the format written by [`emit_dimacs`]. Variables without meaning
/// lines default to parameters with weight 1 whose id is the variable index.
pub fn parse_dimacs(text: &str) -> Result<WeightedCnf, CnfError> {
    let err = |line: usize, message: String| CnfError::Parse { line, message };
    let mut header: Option<(usize, usize)> = None;
    let mut meaning: HashMap<usize, VarMeaning> = HashMap::new();
    let mut weight: HashMap<usize, Complex64> = HashMap::new();
    let mut role: HashMap<usize, VarRole> = HashMap::new();
    let mut fixed = Vec::new();
    let mut clauses = Vec::new();
    let mut pending: Vec<Lit> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let num = |t: &str| -> Result<usize, CnfError> {
            t.parse().map_err(|_| err(line, format!("expected an integer, found `{t}`")))
        };
        let real = |t: &str| -> Result<f64, CnfError> {
            t.parse().map_err(|_| err(line, format!("expected a real number, found `{t}`")))
        };
        let var_in_range = |v: usize| -> Result<usize, CnfError> {
            match header {
                Some((n, _)) if v >= 1 && v <= n => Ok(v),
                Some(_) => Err(err(line, format!("variable {v} out of range"))),
                None => Err(err(line, "comment before `p cnf` header".into())),
            }
        };
        match toks[0] {
            "p" => {
                if header.is_some() {
                    return Err(err(line, "duplicate header".into()));
                }
                if toks.len() != 4 || toks[1] != "cnf" {
                    return Err(err(line, "expected `p cnf V C`".into()));
                }
                header = Some((num(toks[2])?, num(toks[3])?));
            }
            "c" => match toks.get(1).copied() {
                Some("ind") if toks.len() == 5 => {
                    let v = var_in_range(num(toks[2])?)?;
                    meaning.insert(
                        v,
                        VarMeaning::Indicator {
                            node: NodeId(toks[3].to_string()),
                            value: num(toks[4])?,
                        },
                    );
                }
                Some("w") if toks.len() == 5 => {
                    let v = var_in_range(num(toks[2])?)?;
                    weight.insert(v, Complex64::new(real(toks[3])?, real(toks[4])?));
                }
                Some("pid") if toks.len() == 4 => {
                    let v = var_in_range(num(toks[2])?)?;
                    meaning.insert(
                        v,
                        VarMeaning::Parameter {
                            id: ParamId(num(toks[3])? as u32),
                        },
                    );
                }
                Some(tag @ ("q" | "s")) if toks.len() == 3 => {
                    let v = var_in_range(num(toks[2])?)?;
                    role.insert(
                        v,
                        if tag == "q" { VarRole::Query } else { VarRole::Summed },
                    );
                }
                Some("fix") if toks.len() == 7 && toks[2] == "ind" => {
                    let r = match toks[5] {
                        "q" => VarRole::Query,
                        "s" => VarRole::Summed,
                        other => return Err(err(line, format!("bad role `{other}`"))),
                    };
                    fixed.push(FixedLiteral {
                        var: CnfVar {
                            meaning: VarMeaning::Indicator {
                                node: NodeId(toks[3].to_string()),
                                value: num(toks[4])?,
                            },
                            role: r,
                            weight: Complex64::new(1.0, 0.0),
                        },
                        value: parse_bit(toks[6]).ok_or_else(|| err(line, "bad bit".into()))?,
                    });
                }
                Some("fix") if toks.len() == 7 && toks[2] == "par" => {
                    fixed.push(FixedLiteral {
                        var: CnfVar {
                            meaning: VarMeaning::Parameter {
                                id: ParamId(num(toks[3])? as u32),
                            },
                            role: VarRole::Parameter,
                            weight: Complex64::new(real(toks[4])?, real(toks[5])?),
                        },
                        value: parse_bit(toks[6]).ok_or_else(|| err(line, "bad bit".into()))?,
                    });
                }
                Some("ind" | "w" | "pid" | "q" | "s" | "fix") => {
                    return Err(err(line, format!("malformed `{}` line", toks[1])))
                }
                // Free-form comment.
                _ => {}
            },
            _ => {
                let (n, _) = header.ok_or_else(|| err(line, "clause before header".into()))?;
                for t in toks {
                    let x: i32 = t
                        .parse()
                        .map_err(|_| err(line, format!("bad literal `{t}`")))?;
                    if x == 0 {
                        clauses.push(std::mem::take(&mut pending));
                    } else {
                        if x.unsigned_abs() as usize > n {
                            return Err(err(line, format!("literal {x} out of range")));
                        }
                        pending.push(Lit::from_dimacs(x));
                    }
                }
            }
        }
    }
    let (n, c) = header.ok_or_else(|| err(0, "missing `p cnf` header".into()))?;
    if !pending.is_empty() {
        return Err(err(0, "last clause not terminated by 0".into()));
    }
    if clauses.len() != c {
        return Err(err(0, format!("header declares {c} clauses, found {}", clauses.len())));
    }
    let vars = (1..=n)
        .map(|v| {
            let m = meaning.remove(&v).unwrap_or(VarMeaning::Parameter {
                id: ParamId(v as u32),
            });
            let r = match m {
                VarMeaning::Indicator { .. } => role.get(&v).copied().unwrap_or(VarRole::Query),
                VarMeaning::Parameter { .. } => VarRole::Parameter,
            };
            CnfVar {
                meaning: m,
                role: r,
                weight: weight.get(&v).copied().unwrap_or(Complex64::new(1.0, 0.0)),
            }
        })
        .collect();
    Ok(WeightedCnf {
        vars,
        clauses,
        fixed,
    })
}

fn parse_bit(t: &str) -> Option<bool> {
    match t {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}
