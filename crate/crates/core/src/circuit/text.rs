//! Line-based circuit format.
//!
//! ```text
//! # noisy Bell pair
//! qubits 2
//! h 0
//! pd 0 0.36
//! cnot 0 1
//! ```
//!
//! One statement per line, whitespace separated, `#` starts a comment. The
//! first statement must be `qubits N`; `init BITSTRING` optionally sets the
//! initial basis state (qubit 0 first). Gate operands are qubit indices
//! followed by angles in radians; noise operands are one qubit followed by
//! probabilities.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, CircuitError, GateKind, NoiseKind, Op};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown gate or noise kind `{name}`")]
    UnknownKind { line: usize, name: String },
    #[error("line {line}: `{name}` expects {expected} operand(s), found {found}")]
    Arity {
        line: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: CircuitError },
    #[error("missing `qubits N` declaration")]
    MissingHeader,
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_usize(line: usize, tok: &str) -> Result<usize, ParseError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("expected a non-negative integer, found `{tok}`")))
}

fn parse_real(line: usize, tok: &str) -> Result<f64, ParseError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("expected a real number, found `{tok}`")))
}

/// Parses the circuit text format into a validated [`Circuit`].
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit: Option<Circuit> = None;
    let mut saw_init = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let Some((&head, args)) = tokens.split_first() else {
            continue;
        };

        if head == "qubits" {
            if circuit.is_some() {
                return Err(syntax(line, "duplicate `qubits` declaration"));
            }
            if args.len() != 1 {
                return Err(ParseError::Arity {
                    line,
                    name: head.into(),
                    expected: 1,
                    found: args.len(),
                });
            }
            let n = parse_usize(line, args[0])?;
            if n == 0 {
                return Err(ParseError::Invalid {
                    line,
                    source: CircuitError::NoQubits,
                });
            }
            circuit = Some(Circuit::new(n));
            continue;
        }

        let c = circuit.as_mut().ok_or(ParseError::MissingHeader)?;

        if head == "init" {
            if saw_init {
                return Err(syntax(line, "duplicate `init` statement"));
            }
            if args.len() != 1 {
                return Err(ParseError::Arity {
                    line,
                    name: head.into(),
                    expected: 1,
                    found: args.len(),
                });
            }
            let bits = args[0]
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(syntax(line, format!("invalid bit `{ch}` in initial state"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            c.set_initial_state(&bits)
                .map_err(|source| ParseError::Invalid { line, source })?;
            saw_init = true;
            continue;
        }

        let op_result = if let Some(kind) = GateKind::from_mnemonic(head) {
            let expected = kind.arity() + kind.param_count();
            if args.len() != expected {
                return Err(ParseError::Arity {
                    line,
                    name: head.into(),
                    expected,
                    found: args.len(),
                });
            }
            let (qs, ps) = args.split_at(kind.arity());
            let qubits = qs
                .iter()
                .map(|t| parse_usize(line, t))
                .collect::<Result<Vec<_>, _>>()?;
            let params = ps
                .iter()
                .map(|t| parse_real(line, t))
                .collect::<Result<Vec<_>, _>>()?;
            c.push_gate(kind, &qubits, &params).map(|_| ())
        } else if let Some(kind) = NoiseKind::from_mnemonic(head) {
            let expected = 1 + kind.param_count();
            if args.len() != expected {
                return Err(ParseError::Arity {
                    line,
                    name: head.into(),
                    expected,
                    found: args.len(),
                });
            }
            let qubit = parse_usize(line, args[0])?;
            let params = args[1..]
                .iter()
                .map(|t| parse_real(line, t))
                .collect::<Result<Vec<_>, _>>()?;
            c.push_noise(kind, qubit, &params).map(|_| ())
        } else {
            return Err(ParseError::UnknownKind {
                line,
                name: head.into(),
            });
        };
        op_result.map_err(|source| ParseError::Invalid { line, source })?;
    }

    circuit.ok_or(ParseError::MissingHeader)
}

/// Renders a circuit in the text format. Reals use the shortest decimal
/// representation that parses back to the same `f64`.
pub fn serialize_circuit(circuit: &Circuit) -> String {
    let mut out = String::new();
    writeln!(out, "qubits {}", circuit.num_qubits()).unwrap();
    if circuit.initial_state().iter().any(|&b| b) {
        let bits: String = circuit
            .initial_state()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        writeln!(out, "init {bits}").unwrap();
    }
    for op in circuit.ops() {
        match op {
            Op::Gate(g) => {
                out.push_str(g.kind.mnemonic());
                for q in &g.qubits {
                    write!(out, " {q}").unwrap();
                }
                for p in &g.params {
                    write!(out, " {p}").unwrap();
                }
            }
            Op::Noise(n) => {
                write!(out, "{} {}", n.kind.mnemonic(), n.qubit).unwrap();
                for p in &n.params {
                    write!(out, " {p}").unwrap();
                }
            }
        }
        out.push('\n');
    }
    out
}
