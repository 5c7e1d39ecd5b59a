//! Noisy quantum circuit simulation by knowledge compilation.
//!
//! Circuits become Bayesian networks, then weighted CNF, then smooth d-DNNF
//! arithmetic circuits that answer amplitude, density-matrix, derivative and
//! sampling queries in time linear in the circuit size.
//!
//! ```
//! use qkc::circuit::Circuit;
//! use qkc::pipeline::{compile_circuit, compile_density};
//! use qkc::sampler::{sample, SamplerConfig};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let mut c = Circuit::new(2);
//! c.h(0).cnot(0, 1);
//!
//! let compiled = compile_circuit(&c, &Default::default())?;
//! let mut session = compiled.session();
//! let a = session.basis_amplitude(&[1, 1], &[])?;
//! assert!((a.re - 0.5f64.sqrt()).abs() < 1e-12);
//! let report = sample(&mut session, &SamplerConfig { samples: 1000, ..Default::default() })?;
//! assert_eq!(report.counts.values().sum::<usize>(), 1000);
//!
//! let rho = compile_density(&c, &Default::default())?.session().density_matrix()?;
//! assert!((rho.get(0, 3).re - 0.5).abs() < 1e-12);
//! # Ok(())
//! # }
//! ```

pub mod bayesnet;
pub mod bench;
pub mod circuit;
pub mod cnf;
pub mod ddnnf;
pub mod matrix;
pub mod oracle;
pub mod pipeline;
pub mod query;
pub mod sampler;
