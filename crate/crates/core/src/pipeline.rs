//! Circuit → Bayesian network → CNF → arithmetic circuit in one call.

use std::sync::Arc;

use thiserror::Error;

use crate::bayesnet::{
    circuit_to_bn, circuit_to_density_bn, rebind_from_circuit, BayesNet, EncodeError,
    ParamBinding, ParamTable,
};
use crate::circuit::Circuit;
use crate::cnf::{bn_to_cnf, simplify_units, CnfError, WeightedCnf};
use crate::ddnnf::{compile, smooth, ArithmeticCircuit, CompileOptions};
use crate::query::{QueryLayout, Session};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

/// Every intermediate artifact of one compilation.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub bn: BayesNet,
    pub params: ParamTable,
    /// After unit resolution.
    pub cnf: WeightedCnf,
    /// Smoothed.
    pub ac: Arc<ArithmeticCircuit>,
    pub layout: QueryLayout,
}

impl Compiled {
    pub fn session(&self) -> Session {
        Session::new(Arc::clone(&self.ac), self.layout.clone())
    }

    /// Parameter values for a circuit with the same structure but
    /// different angles or noise strengths.
    pub fn binding_for(&self, circuit: &Circuit) -> Result<ParamBinding, EncodeError> {
        rebind_from_circuit(&self.bn, circuit)
    }
}

fn finish(
    bn: BayesNet,
    params: ParamTable,
    opts: &CompileOptions,
    doubled: bool,
) -> Result<Compiled, PipelineError> {
    let cnf = simplify_units(&bn_to_cnf(&bn, &params))?;
    let ac = smooth(&compile(&cnf, opts));
    let layout = QueryLayout::from_bn(&bn, doubled);
    Ok(Compiled {
        bn,
        params,
        cnf,
        ac: Arc::new(ac),
        layout,
    })
}

/// Compiles the amplitude network: evidence on outputs and noise events.
pub fn compile_circuit(circuit: &Circuit, opts: &CompileOptions) -> Result<Compiled, PipelineError> {
    let (bn, params) = circuit_to_bn(circuit)?;
    finish(bn, params, opts, false)
}

/// Compiles the doubled ket/bra network whose value at outputs `(x, y)` is
/// `ρ[x, y]`, with noise events summed inside the circuit.
pub fn compile_density(circuit: &Circuit, opts: &CompileOptions) -> Result<Compiled, PipelineError> {
    let (bn, params) = circuit_to_density_bn(circuit)?;
    finish(bn, params, opts, true)
}
