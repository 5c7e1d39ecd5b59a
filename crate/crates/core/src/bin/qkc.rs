//! Command-line driver: compile circuits, query amplitudes and density
//! matrices, sample, cross-check against the reference simulators and run
//! benchmark workloads. JSON goes to stdout, diagnostics to stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use qkc::bench::{add_noise, rebind_sweep, WorkloadSpec, ALGORITHMS};
use qkc::circuit::{parse_circuit, validate_circuit, Circuit, NoiseKind};
use qkc::cnf::emit_dimacs;
use qkc::ddnnf::{check_ddnnf, compilations_on_this_thread, compile_stats, parse_ac, serialize_ac, ArithmeticCircuit, CompileOptions, VarOrder};
use qkc::matrix::Matrix;
use qkc::oracle::{density_matrix_simulate, statevector_simulate};
use qkc::pipeline::{compile_circuit, compile_density, Compiled};
use qkc::query::{parse_bits, QueryLayout, Session};
use qkc::sampler::{kl_divergence, sample, Scan, SamplerConfig};

const FORMAT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "qkc", version, about = "Noisy circuit simulation by knowledge compilation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    MinFill,
    Lex,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanArg {
    Fixed,
    Random,
}

#[derive(clap::Args)]
struct CompileFlags {
    #[arg(long, value_enum, default_value = "min-fill")]
    order: Order,
    /// Keep literals of summed-out variables in the circuit.
    #[arg(long)]
    no_elide: bool,
}

impl CompileFlags {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            var_order: match self.order {
                Order::MinFill => VarOrder::MinFill,
                Order::Lex => VarOrder::Lexicographic,
            },
            elide_summed: !self.no_elide,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile a circuit to an arithmetic circuit.
    Compile {
        circuit: PathBuf,
        /// Write the arithmetic circuit here.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: CompileFlags,
        /// Compile the doubled ket/bra network instead of the amplitude one.
        #[arg(long)]
        density: bool,
        /// Also write the weighted CNF in DIMACS form.
        #[arg(long)]
        dimacs: Option<PathBuf>,
        /// Include compiler statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Amplitude of one output bitstring and noise-event assignment.
    Amplitude {
        /// Circuit file or stored arithmetic circuit.
        input: PathBuf,
        #[arg(long)]
        outputs: String,
        /// Comma-separated noise-event values in circuit order.
        #[arg(long, default_value = "")]
        events: String,
        #[command(flatten)]
        flags: CompileFlags,
    },
    /// Full density matrix, row-major with `[re, im]` entries.
    Density {
        input: PathBuf,
        /// For circuit input, sum noise inside the doubled network.
        #[arg(long)]
        doubled: bool,
        #[command(flatten)]
        flags: CompileFlags,
    },
    /// Gibbs-sample measurement outcomes.
    Sample {
        input: PathBuf,
        #[arg(short = 'n', long)]
        samples: usize,
        /// Sweeps discarded first (default: ten per chain variable).
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report KL(empirical ‖ exact) against the enumerated distribution.
        #[arg(long)]
        kl: bool,
        #[arg(long, value_enum, default_value = "fixed")]
        scan: ScanArg,
        #[arg(long, default_value_t = 100)]
        init_retries: usize,
        #[arg(long)]
        restart_every: Option<usize>,
        /// Independent chains run in parallel, each drawing `samples`.
        #[arg(long, default_value_t = 1)]
        chains: u64,
        #[command(flatten)]
        flags: CompileFlags,
    },
    /// Cross-check the compiled pipeline against the reference simulators.
    Validate {
        circuit: PathBuf,
        #[command(flatten)]
        flags: CompileFlags,
    },
    /// Build and compile a benchmark workload.
    Bench {
        /// qaoa, vqe, rcs, or an algorithm name.
        workload: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        rows: usize,
        #[arg(long, default_value_t = 2)]
        cols: usize,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Symmetric depolarizing strength after every gate.
        #[arg(long)]
        noise: Option<f64>,
        /// Compile once, then rebind and query this many angle sets (QAOA).
        #[arg(long)]
        rebind_sweep: Option<usize>,
        #[command(flatten)]
        flags: CompileFlags,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: impl std::fmt::Display) -> Failure {
    Failure::Compute(e.to_string())
}

type CliResult = Result<Value, Failure>;

/// Writes finite floats with 17 significant digits so they round-trip;
/// non-finite values become `null`.
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    v.serialize(&mut ser).expect("serializable output");
    String::from_utf8(out).expect("utf-8 json")
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &Matrix) -> Value {
    let d = m.dim();
    Value::Array((0..d).map(|i| Value::Array((0..d).map(|j| complex(m.get(i, j))).collect())).collect())
}

enum Input {
    Circuit(Circuit),
    Ac(ArithmeticCircuit, QueryLayout),
}

fn load(path: &Path) -> Result<Input, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let is_ac = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.starts_with("nnf "));
    if is_ac {
        let ac = parse_ac(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let layout = QueryLayout::from_comments(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Ok(Input::Ac(ac, layout))
    } else {
        parse_circuit(&text)
            .map(Input::Circuit)
            .map_err(|e| usage(format!("{}: {e}", path.display())))
    }
}

fn load_circuit(path: &Path) -> Result<Circuit, Failure> {
    match load(path)? {
        Input::Circuit(c) => Ok(c),
        Input::Ac(..) => Err(usage(format!("{}: expected a circuit file", path.display()))),
    }
}

fn session_for(input: Input, doubled: bool, opts: &CompileOptions) -> Result<Session, Failure> {
    match input {
        Input::Circuit(c) => {
            let compiled = if doubled {
                compile_density(&c, opts)
            } else {
                compile_circuit(&c, opts)
            };
            Ok(compiled.map_err(compute)?.session())
        }
        Input::Ac(ac, layout) => Ok(Session::new(Arc::new(ac), layout)),
    }
}

fn parse_events(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| usage(format!("bad event value `{t}`"))))
        .collect()
}

fn cmd_compile(
    circuit: &Path,
    output: Option<&Path>,
    flags: &CompileFlags,
    density: bool,
    dimacs: Option<&Path>,
    stats: bool,
) -> CliResult {
    let c = load_circuit(circuit)?;
    let opts = flags.options();
    let compiled: Compiled = if density {
        compile_density(&c, &opts)
    } else {
        compile_circuit(&c, &opts)
    }
    .map_err(compute)?;
    if let Some(path) = output {
        let text = serialize_ac(&compiled.ac) + &compiled.layout.to_comments();
        fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = dimacs {
        fs::write(path, emit_dimacs(&compiled.cnf)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let mut out = json!({
        "format_version": FORMAT_VERSION,
        "num_qubits": c.num_qubits(),
        "doubled": density,
        "cnf_vars": compiled.cnf.num_vars(),
        "cnf_clauses": compiled.cnf.clauses.len(),
        "node_count": compiled.ac.node_count(),
        "edge_count": compiled.ac.edge_count(),
    });
    if stats {
        out["stats"] = serde_json::to_value(compile_stats(&compiled.ac)).map_err(compute)?;
        out["options"] = json!({
            "order": opts.var_order,
            "elide_summed": opts.elide_summed,
            "cache_budget": opts.cache_budget,
        });
    }
    Ok(out)
}

fn cmd_amplitude(input: &Path, outputs: &str, events: &str, flags: &CompileFlags) -> CliResult {
    let bits = parse_bits(outputs).ok_or_else(|| usage(format!("bad output bitstring `{outputs}`")))?;
    let events = parse_events(events)?;
    let mut s = session_for(load(input)?, false, &flags.options())?;
    if s.layout().doubled {
        return Err(usage("amplitudes need an amplitude network, not a doubled one"));
    }
    let a = s.basis_amplitude(&bits, &events).map_err(usage)?;
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "outputs": outputs,
        "events": events,
        "amplitude": complex(a),
        "probability": a.norm_sqr(),
    }))
}

fn cmd_density(input: &Path, doubled: bool, flags: &CompileFlags) -> CliResult {
    let start = Instant::now();
    let mut s = session_for(load(input)?, doubled, &flags.options())?;
    let rho = s.density_matrix().map_err(compute)?;
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "num_qubits": s.layout().num_qubits,
        "route": if s.layout().doubled { "doubled" } else { "trajectories" },
        "node_count": s.ac().node_count(),
        "wall_ms": start.elapsed().as_secs_f64() * 1e3,
        "matrix": matrix_json(&rho),
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    input: &Path,
    samples: usize,
    burn_in: Option<usize>,
    seed: u64,
    kl: bool,
    scan: ScanArg,
    init_retries: usize,
    restart_every: Option<usize>,
    chains: u64,
    flags: &CompileFlags,
) -> CliResult {
    if samples == 0 || chains == 0 || restart_every == Some(0) {
        return Err(usage("samples, chains and the restart interval must be positive"));
    }
    let mut s = session_for(load(input)?, false, &flags.options())?;
    let base = SamplerConfig {
        burn_in,
        samples,
        seed,
        scan: match scan {
            ScanArg::Fixed => Scan::Fixed,
            ScanArg::Random => Scan::Random,
        },
        init_retries,
        restart_every,
        chain_index: 0,
    };
    let mut reports = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|i| {
                let cfg = SamplerConfig {
                    chain_index: i,
                    ..base.clone()
                };
                let mut chain = Session::new(Arc::clone(s.ac()), (**s.layout()).clone());
                scope.spawn(move || sample(&mut chain, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(compute)?;
    let n = s.layout().num_qubits;
    let mut merged = std::collections::BTreeMap::<String, usize>::new();
    for r in &reports {
        for (k, c) in &r.counts {
            *merged.entry(k.clone()).or_default() += c;
        }
    }
    let mut kl_merged = None;
    if kl {
        let exact = s.output_distribution().map_err(compute)?;
        for r in &mut reports {
            r.kl_to_exact = Some(kl_divergence(&r.empirical(r.sequence.len(), n), &exact));
        }
        let total: usize = merged.values().sum();
        let empirical = merged
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / total as f64))
            .collect();
        kl_merged = Some(kl_divergence(&empirical, &exact));
    }
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "num_qubits": n,
        "counts": merged,
        "kl_to_exact": kl_merged,
        "chains": reports,
    }))
}

fn max_error(a: &Matrix, b: &[Complex64]) -> f64 {
    a.as_slice().iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn check(name: &str, error: f64, tolerance: f64) -> Value {
    json!({ "check": name, "max_abs_error": error, "tolerance": tolerance, "pass": error <= tolerance })
}

fn cmd_validate(circuit: &Path, flags: &CompileFlags) -> CliResult {
    let c = load_circuit(circuit)?;
    let diagnostics: Vec<String> = validate_circuit(&c).iter().map(ToString::to_string).collect();
    if !diagnostics.is_empty() {
        return Ok(json!({ "format_version": FORMAT_VERSION, "diagnostics": diagnostics, "pass": false }));
    }
    let opts = flags.options();
    let mut checks = Vec::new();
    let compiled = compile_circuit(&c, &opts).map_err(compute)?;
    let structure = check_ddnnf(&compiled.ac);
    checks.push(json!({ "check": "ddnnf-properties", "problems": structure, "pass": structure.is_empty() }));
    let mut s = compiled.session();
    if c.noise_count() == 0 {
        let oracle = statevector_simulate(&c).map_err(compute)?;
        let n = c.num_qubits();
        let mut err: f64 = 0.0;
        for (x, want) in oracle.amplitudes.iter().enumerate() {
            let bits = qkc::query::index_bits(x, n);
            let got = s.basis_amplitude(&bits, &[]).map_err(compute)?;
            err = err.max((got - want).norm());
        }
        checks.push(check("amplitudes-vs-statevector", err, 1e-9));
    }
    let oracle = density_matrix_simulate(&c).map_err(compute)?;
    let rho = s.density_matrix().map_err(compute)?;
    checks.push(check("density-trajectories-vs-oracle", max_error(&rho, oracle.entries.as_slice()), 1e-8));
    let mut doubled = compile_density(&c, &opts).map_err(compute)?.session();
    let rho = doubled.density_matrix().map_err(compute)?;
    checks.push(check("density-doubled-vs-oracle", max_error(&rho, oracle.entries.as_slice()), 1e-8));
    let pass = checks.iter().all(|c| c["pass"] == json!(true));
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "diagnostics": diagnostics,
        "checks": checks,
        "pass": pass,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    workload: &str,
    n: Option<usize>,
    p: usize,
    seed: u64,
    depth: usize,
    rows: usize,
    cols: usize,
    steps: usize,
    noise: Option<f64>,
    sweep: Option<usize>,
    flags: &CompileFlags,
) -> CliResult {
    let opts = flags.options();
    if let Some(count) = sweep {
        if workload != "qaoa" {
            return Err(usage("--rebind-sweep is only defined for the qaoa workload"));
        }
        if noise.is_some() {
            return Err(usage("--rebind-sweep runs the ideal circuit; drop --noise"));
        }
        let report = rebind_sweep(n.unwrap_or(8), p, seed, count, &opts).map_err(compute)?;
        let mean = |f: fn(&qkc::bench::QueryRecord) -> f64| {
            report.records.iter().map(f).sum::<f64>() / report.records.len().max(1) as f64
        };
        let mut out = serde_json::to_value(&report).map_err(compute)?;
        out["format_version"] = json!(FORMAT_VERSION);
        out["workload"] = json!({ "kind": "qaoa", "n": n.unwrap_or(8), "p": p, "seed": seed });
        out["mean_rebind_ms"] = json!(mean(|r| r.rebind_ms));
        out["mean_query_ms"] = json!(mean(|r| r.query_ms));
        return Ok(out);
    }
    let spec = match workload {
        "qaoa" => WorkloadSpec::Qaoa {
            n: n.unwrap_or(8),
            p,
            seed,
            gammas: vec![0.4],
            betas: vec![0.7],
        },
        "vqe" => WorkloadSpec::VqeIsing {
            rows,
            cols,
            steps,
            angles: vec![0.5, 0.3, 0.2],
        },
        "rcs" => WorkloadSpec::Rcs {
            n: n.unwrap_or(5),
            depth,
            seed,
        },
        name if ALGORITHMS.contains(&name) => WorkloadSpec::Algorithm { name: name.to_string() },
        other => {
            return Err(usage(format!(
                "unknown workload `{other}`; expected qaoa, vqe, rcs or one of {}",
                ALGORITHMS.join(", ")
            )))
        }
    };
    let mut c = spec.build().map_err(usage)?;
    if let Some(prob) = noise {
        c = add_noise(&c, NoiseKind::DepolarizingSym, &[prob]).map_err(usage)?;
    }
    let compiles_before = compilations_on_this_thread();
    let start = Instant::now();
    let compiled = if noise.is_some() {
        compile_density(&c, &opts)
    } else {
        compile_circuit(&c, &opts)
    }
    .map_err(compute)?;
    let compile_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut s = compiled.session();
    let t = Instant::now();
    let zeros = vec![0usize; c.num_qubits()];
    let probe = if compiled.layout.doubled {
        let both: Vec<usize> = zeros.iter().chain(&zeros).copied().collect();
        s.evaluate_slots(&both.into_iter().map(Some).collect::<Vec<_>>())
    } else {
        s.basis_amplitude(&zeros, &vec![0; compiled.layout.events.len()])
            .map_err(compute)?
    };
    let query_ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "workload": spec,
        "noise": noise,
        "num_qubits": c.num_qubits(),
        "gates": c.gate_count(),
        "noise_ops": c.noise_count(),
        "compile_count": compilations_on_this_thread() - compiles_before,
        "compile_ms": compile_ms,
        "stats": compile_stats(&compiled.ac),
        "probe": complex(probe),
        "query_ms": query_ms,
    }))
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Compile {
            circuit,
            output,
            flags,
            density,
            dimacs,
            stats,
        } => cmd_compile(&circuit, output.as_deref(), &flags, density, dimacs.as_deref(), stats),
        Command::Amplitude {
            input,
            outputs,
            events,
            flags,
        } => cmd_amplitude(&input, &outputs, &events, &flags),
        Command::Density { input, doubled, flags } => cmd_density(&input, doubled, &flags),
        Command::Sample {
            input,
            samples,
            burn_in,
            seed,
            kl,
            scan,
            init_retries,
            restart_every,
            chains,
            flags,
        } => cmd_sample(
            &input,
            samples,
            burn_in,
            seed,
            kl,
            scan,
            init_retries,
            restart_every,
            chains,
            &flags,
        ),
        Command::Validate { circuit, flags } => cmd_validate(&circuit, &flags),
        Command::Bench {
            workload,
            n,
            p,
            seed,
            depth,
            rows,
            cols,
            steps,
            noise,
            rebind_sweep,
            flags,
        } => cmd_bench(
            &workload,
            n,
            p,
            seed,
            depth,
            rows,
            cols,
            steps,
            noise,
            rebind_sweep,
            &flags,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(v) => {
            println!("{}", to_json(&v));
            if v.get("pass") == Some(&json!(false)) {
                eprintln!("validation failed");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
