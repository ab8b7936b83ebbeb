//! `steinbench`: spanner Stein discrepancies from the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use steinbench_core::config::{load_diffusion_file, load_model_file, DiffusionConfig, TargetConfig};
use steinbench_core::lp::{AutoSolver, BarrierSolver, LpSolver, SimplexSolver};
use steinbench_core::metrics::{coupled_upper_bound_for, fit_rate, wasserstein_1d};
use steinbench_core::samplers::{
    iid_chain, mala_chain, sgrld_chain, ChainConfig, ChainMetadata, IdentityMetric, PseudoHuberMetric,
    ScalarMetric,
};
use steinbench_core::spanner::{build_greedy_spanner, build_sorted_1d_spanner, verify_spanner, SpannerCheck};
use steinbench_core::steinlp::{discrepancy_on_graph, operator_for_sample, DiscrepancyRun, GraphChoice};
use steinbench_core::{
    load_sample, save_sample, DiffusionSpec, DiscrepancyOptions, Error, SteinScales, TargetModel, WeightMode,
    WeightedSample,
};

#[derive(Parser, Debug)]
#[command(name = "steinbench", version, about = "Spanner diffusion Stein discrepancies")]
struct Cli {
    /// Worker threads for coordinate solves and spanner checks (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the discrepancy of a sample and write its witness as JSON.
    Discrepancy(DiscrepancyArgs),
    /// Build and verify a spanner, writing its edges as CSV.
    Spanner(SpannerArgs),
    /// Run a sampler and write the sample CSV plus a metadata sidecar.
    Sample(SampleArgs),
    /// Discrepancy on growing prefixes of a sample.
    Compare(CompareArgs),
    /// Export h* = T g* at the sample points as CSV.
    Witness(DiscrepancyArgs),
}

#[derive(Args, Debug, Clone)]
struct SampleInput {
    /// Sample CSV, one point per row.
    #[arg(long)]
    sample: PathBuf,
    /// Read point masses from a trailing column.
    #[arg(long)]
    weighted: bool,
}

#[derive(Args, Debug, Clone)]
struct ModelInput {
    /// Target JSON (a model file or a bare target object).
    #[arg(long)]
    target: PathBuf,
    /// Diffusion JSON; defaults to the model file's diffusion, else Langevin.
    #[arg(long)]
    diffusion: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SolverChoice {
    Auto,
    Barrier,
    Primal,
    Dual,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum GraphKind {
    Auto,
    Greedy,
    Sorted,
    Complete,
}

#[derive(Args, Debug, Clone)]
struct LpArgs {
    /// Spanner stretch t >= 1.
    #[arg(long, default_value_t = 2.0)]
    stretch: f64,
    /// Stein set scales c1,c2,c3.
    #[arg(long, default_value = "1,1,1")]
    scales: String,
    #[arg(long, value_enum, default_value = "auto")]
    solver: SolverChoice,
    #[arg(long, value_enum, default_value = "auto")]
    graph: GraphKind,
}

#[derive(Args, Debug)]
struct DiscrepancyArgs {
    #[command(flatten)]
    input: SampleInput,
    #[command(flatten)]
    model: ModelInput,
    #[command(flatten)]
    lp: LpArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpannerArgs {
    #[command(flatten)]
    input: SampleInput,
    #[arg(long, default_value_t = 2.0)]
    stretch: f64,
    #[arg(long, value_enum, default_value = "greedy")]
    graph: GraphKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SamplerKind {
    Iid,
    Mala,
    Sgrld,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MetricKind {
    Identity,
    PseudoHuber,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelInput,
    #[arg(long, value_enum)]
    sampler: SamplerKind,
    /// Number of draws (iid).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Chain length (mala, sgrld).
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long = "step-size", default_value_t = 0.1, allow_negative_numbers = true)]
    step_size: f64,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long = "burn-in", default_value_t = 0.1)]
    burn_in: f64,
    #[arg(long)]
    minibatch: Option<usize>,
    /// Initial state, comma separated (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    /// SGRLD metric; defaults to the one matching the diffusion.
    #[arg(long, value_enum)]
    metric: Option<MetricKind>,
    #[arg(long = "metric-delta")]
    metric_delta: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    input: SampleInput,
    #[command(flatten)]
    model: ModelInput,
    #[command(flatten)]
    lp: LpArgs,
    /// Prefix lengths, comma separated (default: doubling up to n).
    #[arg(long)]
    sizes: Option<String>,
    /// Reference sample from P for W1 and the coupling bound.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Size of a reference drawn from the target when none is given.
    #[arg(long = "reference-size", default_value_t = 10_000)]
    reference_size: usize,
    /// Write the table and fit as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

const CONFIG: u8 = 1;
const INGEST: u8 = 2;
const SOLVER: u8 = 3;

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Self {
            code: CONFIG,
            msg: msg.into(),
        }
    }

    fn from_error(code: u8, e: Error) -> Self {
        let code = match e {
            Error::Solver(_) => SOLVER,
            _ => code,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

trait Classify<T> {
    fn or_exit(self, code: u8) -> CliResult<T>;
}

impl<T> Classify<T> for steinbench_core::Result<T> {
    fn or_exit(self, code: u8) -> CliResult<T> {
        self.map_err(|e| Failure::from_error(code, e))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STEINBENCH_LOG", "warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::config("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    match cli.command {
        Command::Discrepancy(a) => cmd_discrepancy(&a),
        Command::Witness(a) => cmd_witness(&a),
        Command::Spanner(a) => cmd_spanner(&a),
        Command::Sample(a) => cmd_sample(&a, cli.seed),
        Command::Compare(a) => cmd_compare(&a, cli.seed),
    }
}

struct Model {
    target_config: TargetConfig,
    diffusion_config: DiffusionConfig,
    target: Box<dyn TargetModel>,
    spec: DiffusionSpec,
}

fn load_model(m: &ModelInput) -> CliResult<Model> {
    let file = load_model_file(&m.target).or_exit(CONFIG)?;
    let target_config = file
        .target
        .ok_or_else(|| Failure::config(format!("{}: no target section", m.target.display())))?;
    let diffusion_config = match &m.diffusion {
        Some(p) => load_diffusion_file(p).or_exit(CONFIG)?,
        None => file.diffusion.unwrap_or_default(),
    };
    let target = target_config.build().or_exit(CONFIG)?;
    let spec = diffusion_config.build(target.dim()).or_exit(CONFIG)?;
    Ok(Model {
        target_config,
        diffusion_config,
        target,
        spec,
    })
}

fn load_input(s: &SampleInput) -> CliResult<WeightedSample> {
    let mode = if s.weighted { WeightMode::Column } else { WeightMode::Uniform };
    load_sample(&s.sample, mode).or_exit(INGEST)
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Failure::config(format!("{what}: cannot parse {v:?}")))
        })
        .collect()
}

fn options(lp: &LpArgs) -> CliResult<DiscrepancyOptions> {
    let s = parse_list(&lp.scales, "--scales")?;
    if s.len() != 3 {
        return Err(Failure::config("--scales needs three values c1,c2,c3"));
    }
    let scales = SteinScales::new(s[0], s[1], s[2]).or_exit(CONFIG)?;
    if !(lp.stretch >= 1.0) {
        return Err(Failure::config(format!("--stretch must be >= 1, got {}", lp.stretch)));
    }
    let solver: Arc<dyn LpSolver> = match lp.solver {
        SolverChoice::Auto => Arc::new(AutoSolver::default()),
        SolverChoice::Barrier => Arc::new(BarrierSolver::default()),
        SolverChoice::Primal => Arc::new(SimplexSolver::primal()),
        SolverChoice::Dual => Arc::new(SimplexSolver::dual()),
    };
    Ok(DiscrepancyOptions {
        stretch: lp.stretch,
        scales,
        graph: GraphChoice::Auto,
        solver,
        parallel: true,
    })
}

fn graph_for(sample: &WeightedSample, kind: GraphKind, stretch: f64) -> CliResult<steinbench_core::SpannerGraph> {
    let g = match kind {
        GraphKind::Auto if sample.dim() == 1 => build_sorted_1d_spanner(sample),
        GraphKind::Auto | GraphKind::Greedy => build_greedy_spanner(sample, stretch),
        GraphKind::Sorted => build_sorted_1d_spanner(sample),
        GraphKind::Complete => Ok(steinbench_core::SpannerGraph::complete(sample)),
    };
    g.or_exit(CONFIG)
}

fn discrepancy(sample: &WeightedSample, model: &Model, lp: &LpArgs) -> CliResult<DiscrepancyRun> {
    let opts = options(lp)?;
    let op = operator_for_sample(sample, model.target.as_ref(), &model.spec).or_exit(CONFIG)?;
    let graph = graph_for(sample, lp.graph, lp.stretch)?;
    discrepancy_on_graph(sample, sample.weights(), &op, graph, &opts).or_exit(CONFIG)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_discrepancy(a: &DiscrepancyArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let sample = load_input(&a.input)?;
    let run = discrepancy(&sample, &model, &a.lp)?;
    if let Some(out) = &a.out {
        write_file(out, &run.witness.to_json())?;
    }
    println!("{:?}", run.witness.value);
    Ok(())
}

fn cmd_witness(a: &DiscrepancyArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let sample = load_input(&a.input)?;
    let run = discrepancy(&sample, &model, &a.lp)?;
    let d = sample.dim();
    let mut csv = String::from("#");
    for k in 0..d {
        let _ = write!(csv, "x{k},");
    }
    csv.push_str("weight,h_star");
    for j in 0..d {
        let _ = write!(csv, ",g{j}");
    }
    csv.push('\n');
    for i in 0..sample.len() {
        for v in sample.point(i) {
            let _ = write!(csv, "{v:?},");
        }
        let _ = write!(csv, "{:?},{:?}", sample.weight(i), run.witness.h_star[i]);
        for j in 0..d {
            let _ = write!(csv, ",{:?}", run.witness.psi[j][i]);
        }
        csv.push('\n');
    }
    match &a.out {
        Some(out) => write_file(out, &csv)?,
        None => print!("{csv}"),
    }
    if a.out.is_some() {
        println!("{:?}", run.witness.value);
    }
    Ok(())
}

#[derive(Serialize)]
struct SpannerSummary {
    n: usize,
    edges: usize,
    stretch: f64,
    verified: bool,
}

fn cmd_spanner(a: &SpannerArgs) -> CliResult<()> {
    let sample = load_input(&a.input)?;
    if !(a.stretch >= 1.0) {
        return Err(Failure::config(format!("--stretch must be >= 1, got {}", a.stretch)));
    }
    let graph = graph_for(&sample, a.graph, a.stretch)?;
    let check = verify_spanner(&graph, &sample, graph.stretch());
    if let Some(out) = &a.out {
        graph.save(out).or_exit(CONFIG)?;
    }
    let summary = SpannerSummary {
        n: sample.len(),
        edges: graph.edges().len(),
        stretch: graph.stretch(),
        verified: check.is_ok(),
    };
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    if let SpannerCheck::Violation { i, l, path, direct } = check {
        return Err(Failure::config(format!(
            "spanner check failed for ({i}, {l}): path {path} > t·{direct}"
        )));
    }
    Ok(())
}

fn sgrld_metric(a: &SampleArgs, model: &Model) -> CliResult<Box<dyn ScalarMetric>> {
    let matching = match &model.diffusion_config {
        DiffusionConfig::PseudoHuber { delta, .. } => Some(*delta),
        _ => None,
    };
    let kind = a.metric.unwrap_or(if matching.is_some() {
        MetricKind::PseudoHuber
    } else {
        MetricKind::Identity
    });
    Ok(match kind {
        MetricKind::Identity => Box::new(IdentityMetric),
        MetricKind::PseudoHuber => {
            let delta = a
                .metric_delta
                .or(matching)
                .ok_or_else(|| Failure::config("pseudo-huber metric needs --metric-delta"))?;
            Box::new(PseudoHuberMetric::new(delta).or_exit(CONFIG)?)
        }
    })
}

fn cmd_sample(a: &SampleArgs, seed: u64) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let d = model.target.dim();
    let (sample, meta) = match a.sampler {
        SamplerKind::Iid => {
            let mix = model
                .target_config
                .mixture()
                .or_exit(CONFIG)?
                .ok_or_else(|| Failure::config("iid sampling needs a Gaussian or mixture target"))?;
            if a.n == 0 {
                return Err(Failure::config("--n must be >= 1"));
            }
            let s = iid_chain(&mix, a.n, seed).or_exit(CONFIG)?;
            let meta = serde_json::json!({"sampler": "iid", "n": a.n, "seed": seed});
            (s, meta)
        }
        SamplerKind::Mala | SamplerKind::Sgrld => {
            let init = match &a.init {
                Some(text) => parse_list(text, "--init")?,
                None => vec![0.0; d],
            };
            let mut cfg = ChainConfig::new(a.step_size, a.steps, init);
            cfg.thin = a.thin;
            cfg.burn_in = a.burn_in;
            cfg.minibatch = a.minibatch;
            cfg.seed = seed;
            let (name, out) = match a.sampler {
                SamplerKind::Mala => ("mala", mala_chain(model.target.as_ref(), &cfg)),
                _ => {
                    let metric = sgrld_metric(a, &model)?;
                    ("sgrld", sgrld_chain(model.target.as_ref(), metric.as_ref(), &cfg))
                }
            };
            let out = out.or_exit(CONFIG)?;
            let meta = serde_json::to_value(ChainMetadata::new(name, &cfg, &out)).expect("metadata serializes");
            (out.sample, meta)
        }
    };
    let mode = if sample.weights().iter().all(|&w| w == sample.weight(0)) {
        WeightMode::Uniform
    } else {
        WeightMode::Column
    };
    save_sample(&sample, &a.out, mode).or_exit(CONFIG)?;
    let mut meta_path = a.out.clone().into_os_string();
    meta_path.push(".meta.json");
    write_file(Path::new(&meta_path), &serde_json::to_string_pretty(&meta).expect("json"))?;
    println!("{}", serde_json::to_string(&meta).expect("json"));
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    n: usize,
    discrepancy: f64,
    wasserstein: Option<f64>,
    bound: Option<f64>,
}

#[derive(Serialize)]
struct CompareReport {
    rows: Vec<CompareRow>,
    slope: Option<f64>,
}

fn cmd_compare(a: &CompareArgs, seed: u64) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let sample = load_input(&a.input)?;
    let n = sample.len();
    let sizes: Vec<usize> = match &a.sizes {
        Some(text) => parse_list(text, "--sizes")?
            .into_iter()
            .map(|v| {
                if v >= 1.0 && v.fract() == 0.0 && (v as usize) <= n {
                    Ok(v as usize)
                } else {
                    Err(Failure::config(format!("--sizes: {v} is not an integer in 1..={n}")))
                }
            })
            .collect::<CliResult<_>>()?,
        None => {
            let mut v: Vec<usize> = std::iter::successors(Some(n), |&k| (k / 2 >= 1).then_some(k / 2)).collect();
            v.reverse();
            v
        }
    };
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::config("--sizes must be strictly increasing"));
    }
    let reference = match &a.reference {
        Some(p) => Some(load_sample(p, WeightMode::Uniform).or_exit(INGEST)?),
        None => match model.target_config.mixture().or_exit(CONFIG)? {
            Some(mix) => Some(iid_chain(&mix, a.reference_size, seed.wrapping_add(1)).or_exit(CONFIG)?),
            None => None,
        },
    };
    let mut rows = Vec::new();
    println!("n,discrepancy,wasserstein,bound");
    for &k in &sizes {
        let prefix = sample.prefix(k).or_exit(CONFIG)?;
        let run = discrepancy(&prefix, &model, &a.lp)?;
        let w1 = match &reference {
            Some(r) if prefix.dim() == 1 => Some(wasserstein_1d(&prefix, r).or_exit(CONFIG)?),
            _ => None,
        };
        let bound = match &reference {
            Some(r) => Some(
                coupled_upper_bound_for(&prefix, r, model.target.as_ref(), &model.spec)
                    .or_exit(CONFIG)?
                    .value,
            ),
            None => None,
        };
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        println!("{k},{:?},{},{}", run.witness.value, fmt(w1), fmt(bound));
        rows.push(CompareRow {
            n: k,
            discrepancy: run.witness.value,
            wasserstein: w1,
            bound,
        });
    }
    let pairs: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.discrepancy)).collect();
    let slope = fit_rate(&pairs).ok().map(|f| f.slope);
    if let Some(out) = &a.out {
        let report = CompareReport { rows, slope };
        write_file(out, &serde_json::to_string_pretty(&report).expect("json"))?;
    }
    Ok(())
}
