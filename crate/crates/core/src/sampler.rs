//! Gibbs sampling of measurement outcomes.
//!
//! The chain runs over noise events and outputs jointly, targeting
//! `P(x, v) ∝ |a_v(x)|²`. Resampling one variable needs its full
//! conditional, which is the squared magnitude of the derivative with
//! respect to each of its indicators: one upward and one downward pass give
//! the conditionals of every variable at once.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::query::{bitstring, Derivatives, QueryLayout, Session};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("no state with non-zero amplitude found; the circuit has empty support")]
    EmptySupport,
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("every candidate value of slot {0} has zero weight")]
    ZeroConditional(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scan {
    /// Noise events in circuit order, then outputs by qubit.
    Fixed,
    /// A uniformly random variable per step.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerConfig {
    /// Sweeps discarded before recording; `None` means ten per chain
    /// variable.
    pub burn_in: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub scan: Scan,
    pub init_retries: usize,
    /// Re-initialize (and burn in again) after this many recorded sweeps.
    pub restart_every: Option<usize>,
    /// Selects an independent random stream for parallel chains.
    pub chain_index: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in: None,
            samples: 1000,
            seed: 0,
            scan: Scan::Fixed,
            init_retries: 100,
            restart_every: None,
            chain_index: 0,
        }
    }
}

impl SamplerConfig {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.chain_index);
        rng
    }
}

/// Values of every output and noise-event node, in the session's slot
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub layout: Arc<QueryLayout>,
    pub values: Vec<usize>,
}

impl ChainState {
    pub fn assignment(&self) -> BTreeMap<String, usize> {
        self.values
            .iter()
            .enumerate()
            .map(|(slot, &v)| (self.layout.slot_node(slot).to_string(), v))
            .collect()
    }

    /// Basis index of the outputs, qubit 0 most significant.
    pub fn output_index(&self) -> usize {
        self.values[..self.layout.outputs.len()]
            .iter()
            .fold(0, |acc, &b| (acc << 1) | b)
    }

    fn evidence(&self) -> Vec<Option<usize>> {
        self.values.iter().map(|&v| Some(v)).collect()
    }
}

/// Slots in the fixed scan order: noise events, then outputs.
pub fn scan_order(layout: &QueryLayout) -> Vec<usize> {
    let outputs = layout.outputs.len();
    (outputs..layout.slot_count()).chain(0..outputs).collect()
}

fn check_layout(s: &Session) -> Result<(), SampleError> {
    if s.layout().doubled {
        return Err(SampleError::Config(
            "sampling needs an amplitude network, not a doubled density network".into(),
        ));
    }
    Ok(())
}

/// Uniform random start, retried while the amplitude is zero; then a
/// variable-by-variable construction that keeps the largest derivative.
pub fn init_chain(s: &mut Session, rng: &mut impl Rng, retries: usize) -> Result<(ChainState, usize), SampleError> {
    check_layout(s)?;
    let layout = Arc::clone(s.layout());
    let n = layout.slot_count();
    for attempt in 0..=retries {
        let values: Vec<usize> = (0..n).map(|slot| rng.gen_range(0..layout.slot_domain(slot))).collect();
        let st = ChainState {
            layout: Arc::clone(&layout),
            values,
        };
        if s.evaluate_slots(&st.evidence()).norm_sqr() > 0.0 {
            return Ok((st, attempt + 1));
        }
    }
    let mut partial: Vec<Option<usize>> = vec![None; n];
    for slot in scan_order(&layout) {
        s.evaluate_slots(&partial);
        let d = s.differentiate().expect("fresh evaluation");
        let best = (0..layout.slot_domain(slot))
            .max_by(|&a, &b| {
                d.values[slot][a]
                    .norm_sqr()
                    .total_cmp(&d.values[slot][b].norm_sqr())
                    .then(b.cmp(&a))
            })
            .unwrap();
        partial[slot] = Some(best);
    }
    if s.evaluate_slots(&partial).norm_sqr() == 0.0 {
        return Err(SampleError::EmptySupport);
    }
    Ok((
        ChainState {
            layout,
            values: partial.into_iter().map(Option::unwrap).collect(),
        },
        retries + 2,
    ))
}

/// Full conditional of `slot` given the rest of `derivs`' state:
/// `|∂f/∂λ_b|²` normalized over values `b`.
pub fn conditional(derivs: &Derivatives, slot: usize) -> Option<Vec<f64>> {
    let w: Vec<f64> = derivs.values[slot].iter().map(Complex64::norm_sqr).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        Some(w.into_iter().map(|x| x / total).collect())
    } else {
        None
    }
}

fn draw(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` above the cumulative sum; take the last supported
    // value.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Resamples one variable from its full conditional at `st`.
pub fn gibbs_step(
    s: &mut Session,
    st: &ChainState,
    slot: usize,
    rng: &mut impl Rng,
) -> Result<ChainState, SampleError> {
    s.evaluate_slots(&st.evidence());
    let d = s.differentiate().expect("fresh evaluation");
    let probs = conditional(&d, slot).ok_or(SampleError::ZeroConditional(slot))?;
    let mut next = st.clone();
    next.values[slot] = draw(&probs, rng);
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub format_version: u32,
    pub config: SamplerConfig,
    pub burn_in: usize,
    pub chain_variables: usize,
    pub counts: BTreeMap<String, usize>,
    /// Recorded outcomes in order, as basis indices.
    #[serde(skip)]
    pub sequence: Vec<usize>,
    pub kl_to_exact: Option<f64>,
    /// Gibbs moves are always accepted; this counts how many changed a value.
    pub value_changes: u64,
    pub steps: u64,
    pub init_attempts: usize,
    pub evaluations: u64,
}

impl SampleReport {
    /// Empirical distribution of the first `prefix` recorded samples.
    pub fn empirical(&self, prefix: usize, num_qubits: usize) -> BTreeMap<String, f64> {
        empirical_distribution(&self.sequence[..prefix.min(self.sequence.len())], num_qubits)
    }
}

/// Runs one chain: `burn_in` sweeps, then one recorded outcome per sweep.
pub fn sample(s: &mut Session, cfg: &SamplerConfig) -> Result<SampleReport, SampleError> {
    check_layout(s)?;
    if cfg.samples == 0 {
        return Err(SampleError::Config("samples must be positive".into()));
    }
    if cfg.restart_every == Some(0) {
        return Err(SampleError::Config("restart interval must be positive".into()));
    }
    let layout = Arc::clone(s.layout());
    let vars = layout.slot_count();
    let burn_in = cfg.burn_in.unwrap_or(10 * vars);
    let order = scan_order(&layout);
    let mut rng = cfg.rng();
    let mut report = SampleReport {
        format_version: 1,
        config: cfg.clone(),
        burn_in,
        chain_variables: vars,
        counts: BTreeMap::new(),
        sequence: Vec::with_capacity(cfg.samples),
        kl_to_exact: None,
        value_changes: 0,
        steps: 0,
        init_attempts: 0,
        evaluations: 0,
    };
    let n = layout.num_qubits;
    let mut state: Option<ChainState> = None;
    let mut derivs: Option<Derivatives> = None;
    let mut since_restart = 0;
    while report.sequence.len() < cfg.samples {
        let restart = match cfg.restart_every {
            Some(r) => since_restart == r,
            None => false,
        };
        if state.is_none() || restart {
            let (st, attempts) = init_chain(s, &mut rng, cfg.init_retries)?;
            report.init_attempts += attempts;
            state = Some(st);
            derivs = None;
            since_restart = 0;
            for _ in 0..burn_in {
                sweep(s, &order, &mut state, &mut derivs, &mut rng, &mut report, cfg.scan)?;
            }
        }
        sweep(s, &order, &mut state, &mut derivs, &mut rng, &mut report, cfg.scan)?;
        let x = state.as_ref().unwrap().output_index();
        report.sequence.push(x);
        *report.counts.entry(bitstring(x, n)).or_default() += 1;
        since_restart += 1;
    }
    Ok(report)
}

/// One sweep; the derivatives from the last pass stay valid until a value
/// actually changes.
fn sweep(
    s: &mut Session,
    order: &[usize],
    state: &mut Option<ChainState>,
    derivs: &mut Option<Derivatives>,
    rng: &mut ChaCha8Rng,
    report: &mut SampleReport,
    scan: Scan,
) -> Result<(), SampleError> {
    let st = state.as_mut().unwrap();
    for i in 0..order.len() {
        let slot = match scan {
            Scan::Fixed => order[i],
            Scan::Random => order[rng.gen_range(0..order.len())],
        };
        if derivs.is_none() {
            s.evaluate_slots(&st.evidence());
            *derivs = Some(s.differentiate().expect("fresh evaluation"));
            report.evaluations += 1;
        }
        let probs = conditional(derivs.as_ref().unwrap(), slot).ok_or(SampleError::ZeroConditional(slot))?;
        let v = draw(&probs, rng);
        report.steps += 1;
        if v != st.values[slot] {
            st.values[slot] = v;
            report.value_changes += 1;
            *derivs = None;
        }
    }
    Ok(())
}

/// `KL(empirical ‖ exact)` in nats with `0 · log 0 = 0`; infinite when the
/// empirical distribution puts mass where the exact one has none.
pub fn kl_divergence(empirical: &BTreeMap<String, f64>, exact: &BTreeMap<String, f64>) -> f64 {
    let mut kl = 0.0;
    for (x, &p) in empirical {
        if p == 0.0 {
            continue;
        }
        match exact.get(x) {
            Some(&q) if q > 0.0 => kl += p * (p / q).ln(),
            _ => return f64::INFINITY,
        }
    }
    kl
}

/// Draws `count` independent outcomes from an exact distribution.
pub fn direct_samples(probs: &[f64], count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let total: f64 = probs.iter().sum();
    let normalized: Vec<f64> = probs.iter().map(|p| p / total).collect();
    (0..count).map(|_| draw(&normalized, rng)).collect()
}

/// Empirical distribution of basis indices, keyed by bitstring.
pub fn empirical_distribution(samples: &[usize], num_qubits: usize) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &x in samples {
        *counts.entry(x).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(x, c)| (bitstring(x, num_qubits), c as f64 / samples.len() as f64))
        .collect()
}
