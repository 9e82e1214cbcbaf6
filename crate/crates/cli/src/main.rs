//! `mrf`: generate models, draw samples, verify conditions, reconstruct
//! graphs and run sample-complexity experiments.
//!
//! Exit codes: 0 success, 1 input error, 2 resource cap, 3 reconstruction failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mrf_core::experiment::{run_experiment, EstimatorMode, ExperimentConfig, Generator};
use mrf_core::model::Model;
use mrf_core::oracle::{
    hidden_condition_bounds, joint_distribution_with_cap, verify_hidden_conditions_on, verify_thm2_conditions_on,
    verify_thm3_conditions_on, DistTable, DEFAULT_ENUM_CAP,
};
use mrf_core::reconstruct::{
    error_lower_bound, graph_count_lower_bound, observed_graph, reconstruct, reconstruct_with_hidden,
    required_samples_thm2, required_samples_thm3, Algorithm, ReconConfig,
};
use mrf_core::sampler::{apply_noise, gibbs_sample, sample_exact, GibbsConfig, NoiseChannel};
use mrf_core::{Estimator, MrfError, SampleMatrix};

const EXIT_INPUT: u8 = 1;
const EXIT_CAP: u8 = 2;
const EXIT_RECON: u8 = 3;

#[derive(Parser)]
#[command(name = "mrf", version, about = "Structure learning for bounded-degree Markov random fields")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an Ising model from a built-in family.
    Generate(GenerateArgs),
    /// Draw samples from a model.
    Sample(SampleArgs),
    /// Reconstruct the graph from samples, or from exact marginals of a model.
    Reconstruct(ReconstructArgs),
    /// Check a model's non-degeneracy conditions by enumeration.
    Verify(VerifyArgs),
    /// Run a success-rate sweep described by a JSON config.
    Experiment(ExperimentArgs),
    /// Sample-size requirements and lower bounds (natural logarithms).
    Bounds(BoundsArgs),
    /// Reconstruct with degree bound 2d and contract cliques into hidden vertices.
    Hidden(HiddenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Path,
    Cycle,
    Hypercube,
    Complete,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Vertex count (cube dimension for `hypercube`).
    #[arg(long)]
    n: usize,
    /// Coupling on every edge (fixed families).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Degree bound for `random`.
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0.3)]
    beta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_max: f64,
    #[arg(long)]
    ferromagnetic: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleMode {
    Exact,
    Gibbs,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: SampleMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = mrf_core::sampler::DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = mrf_core::sampler::DEFAULT_THINNING)]
    thinning: usize,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Symmetric per-site noise probability.
    #[arg(long)]
    noise_q: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Degree bound.
    #[arg(long)]
    d: usize,
    /// Gap threshold; measured from the oracle when omitted in model mode.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Mass threshold; measured from the oracle when omitted in model mode.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    samples: Option<PathBuf>,
    /// Use exact marginals of this model instead of samples.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Defaults to `decay` when --kappa is given and `ctp` otherwise.
    #[arg(long, value_parser = parse_algorithm)]
    algo: Option<Algorithm>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the edge list as two-column CSV.
    #[arg(long)]
    edges_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Condition {
    #[value(name = "2")]
    Pairwise,
    #[value(name = "3")]
    General,
    Hidden,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    d: usize,
    /// `2`: conditional two-point test; `3`: score test; `hidden`: hidden-vertex condition.
    #[arg(long, value_enum)]
    theorem: Condition,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides the config's sample sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    noise_q: Option<f64>,
    /// Report JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Curve CSV; defaults to the report path with extension `.curve.csv`.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long = "alphabet", short = 'A', default_value_t = 2)]
    alphabet: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Sample count for the error lower bound.
    #[arg(long, default_value_t = 0)]
    k: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct HiddenArgs {
    /// Samples of the observed vertices only.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    samples: Option<PathBuf>,
    /// Full model; exact marginals of the vertices not listed in --hidden are used.
    #[arg(long, requires = "hidden")]
    model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Degree bound of the full graph (the observed search uses 2d).
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: MrfError| e.to_string())
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<MrfError> for Failure {
    fn from(e: MrfError) -> Self {
        let code = if e.is_resource_cap() { EXIT_CAP } else { EXIT_INPUT };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

type CliResult = Result<u8, Failure>;

fn enum_cap() -> Result<u64, Failure> {
    match std::env::var("MRF_ENUM_CAP") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure { code: EXIT_INPUT, message: format!("MRF_ENUM_CAP must be a positive integer, got {v:?}") }),
        Err(_) => Ok(DEFAULT_ENUM_CAP),
    }
}

fn oracle(model: &Model) -> Result<DistTable, Failure> {
    Ok(joint_distribution_with_cap(model, enum_cap()?)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value).map_err(MrfError::from)? + "\n")
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let generator = match a.family {
        Family::Path => Generator::Path { n: a.n, beta: a.beta },
        Family::Cycle => Generator::Cycle { n: a.n, beta: a.beta },
        Family::Hypercube => Generator::Hypercube { dim: a.n as u32, beta: a.beta },
        Family::Complete => Generator::Complete { n: a.n, beta: a.beta },
        Family::Random => Generator::RandomIsing {
            n: a.n,
            d: a.d,
            beta_min: a.beta_min,
            beta_max: a.beta_max,
            ferromagnetic: a.ferromagnetic,
            seed: a.seed,
        },
    };
    emit(a.out.as_deref(), &(generator.build().to_json()? + "\n"))?;
    Ok(0)
}

fn cmd_sample(a: SampleArgs) -> CliResult {
    let model = Model::load(&a.model)?;
    let samples = match a.mode {
        SampleMode::Exact => sample_exact(&oracle(&model)?, a.k, a.seed)?,
        SampleMode::Gibbs => {
            let cfg = GibbsConfig { burn_in: a.burn_in, thinning: a.thinning, chains: a.chains };
            gibbs_sample(&model, a.k, cfg, a.seed)?
        }
    };
    let samples = match a.noise_q {
        Some(q) => apply_noise(&samples, &NoiseChannel::symmetric(q), a.seed.wrapping_add(1))?,
        None => samples,
    };
    let mut buf = Vec::new();
    samples.write_csv(&mut buf)?;
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("csv output is utf-8"))?;
    Ok(0)
}

fn thresholds(t: &ThresholdArgs, measure: impl FnOnce() -> (f64, f64)) -> Result<ReconConfig, Failure> {
    let (epsilon, delta) = match (t.epsilon, t.delta) {
        (Some(e), Some(d)) => (e, d),
        (e, d) => {
            let (me, md) = measure();
            log::info!("measured epsilon* = {me}, delta* = {md}");
            (e.unwrap_or(me), d.unwrap_or(md))
        }
    };
    let cfg = ReconConfig::new(t.d, epsilon, delta).with_c1(t.c1);
    cfg.validate()?;
    Ok(cfg)
}

fn no_measure(what: &str) -> Failure {
    Failure { code: EXIT_INPUT, message: format!("--epsilon and --delta are required with {what}") }
}

fn cmd_reconstruct(a: ReconstructArgs) -> CliResult {
    let algorithm = a.algo.unwrap_or(if a.kappa.is_some() { Algorithm::Decay } else { Algorithm::Ctp });
    let (est, mut cfg) = match (&a.samples, &a.model) {
        (Some(path), _) => {
            if a.thresholds.epsilon.is_none() || a.thresholds.delta.is_none() {
                return Err(no_measure("--samples"));
            }
            let est = Estimator::empirical(SampleMatrix::load(path)?);
            (est, thresholds(&a.thresholds, || unreachable!())?)
        }
        (None, Some(path)) => {
            let model = Model::load(path)?;
            let dist = Arc::new(oracle(&model)?);
            let cfg = thresholds(&a.thresholds, || {
                let r = match algorithm {
                    Algorithm::Ctp => verify_thm2_conditions_on(dist.as_ref(), model.graph(), a.thresholds.d),
                    _ => verify_thm3_conditions_on(dist.as_ref(), model.graph(), a.thresholds.d),
                };
                if !r.holds {
                    log::warn!("the model fails the non-degeneracy condition");
                }
                (r.epsilon_star, r.delta_star)
            })?;
            (Estimator::exact(dist), cfg)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    cfg.kappa = a.kappa;
    let result = reconstruct(&est, algorithm, &cfg)?;
    emit(a.out.as_deref(), &(result.to_json()? + "\n"))?;
    if let Some(path) = &a.edges_csv {
        fs::write(path, result.edges_csv()?)?;
    }
    for (v, r) in &result.per_vertex {
        if r.failed {
            eprintln!("vertex {v}: no candidate neighborhood accepted");
        }
        if r.ambiguous {
            eprintln!("vertex {v}: {} candidate neighborhoods tie", r.candidates_accepted);
        }
    }
    for (u, v) in &result.inconsistencies {
        eprintln!("asymmetric claim: {v} in N({u}) but not the reverse");
    }
    Ok(if result.is_clean() { 0 } else { EXIT_RECON })
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    let model = Model::load(&a.model)?;
    let dist = oracle(&model)?;
    let report = match a.theorem {
        Condition::Pairwise => verify_thm2_conditions_on(&dist, model.graph(), a.d),
        Condition::General => verify_thm3_conditions_on(&dist, model.graph(), a.d),
        Condition::Hidden => verify_hidden_conditions_on(&dist, model.graph(), a.d),
    };
    emit(a.out.as_deref(), &(report.to_json()? + "\n"))?;
    eprintln!(
        "holds={} epsilon*={:.6e} delta*={:.6e} failures={}",
        report.holds,
        report.epsilon_star,
        report.delta_star,
        report.failures.len()
    );
    if let (Condition::Hidden, Some(couplings)) = (a.theorem, model.ising_couplings()) {
        let betas: Vec<f64> = couplings.iter().map(|c| c.2).collect();
        let (lo, hi) = betas.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &b| (lo.min(b), hi.max(b)));
        if lo > 0.0 && a.d >= 3 {
            // bounds need c < β < C strictly
            if let Ok(b) = hidden_condition_bounds(lo * (1.0 - 1e-9), hi * (1.0 + 1e-9), a.d) {
                eprintln!("ferromagnetic bounds: epsilon >= {:.6e}, delta >= {:.6e}", b.epsilon_lb, b.delta_lb);
            }
        }
    }
    Ok(0)
}

fn cmd_experiment(a: ExperimentArgs) -> CliResult {
    let (mut config, base) = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(trials) = a.trials {
        config.trials = trials;
    }
    if let Some(q) = a.noise_q {
        config.noise_q = Some(q);
    }
    if let Some(ks) = a.k {
        match &mut config.estimator {
            EstimatorMode::Samples { k, .. } => *k = ks,
            EstimatorMode::Exact => {
                return Err(Failure { code: EXIT_INPUT, message: "--k needs a sampled estimator in the config".into() })
            }
        }
    }
    let report = run_experiment(&config, &base)?;
    emit(a.out.as_deref(), &(report.to_json()? + "\n"))?;
    let curve_path = a.curve.or_else(|| a.out.as_ref().map(|p| p.with_extension("curve.csv")));
    match curve_path {
        Some(p) => fs::write(p, report.curve_csv()?)?,
        None => eprint!("{}", report.curve_csv()?),
    }
    for cell in report.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!("k={:?} trial={}: {}", cell.k, cell.trial, cell.error.as_deref().unwrap_or_default());
    }
    Ok(0)
}

#[derive(Serialize)]
struct BoundsRow {
    n: usize,
    d: usize,
    alphabet: usize,
    epsilon: f64,
    delta: f64,
    c1: f64,
    required_samples_thm2: u64,
    failure_bound_thm2: f64,
    required_samples_thm3: u64,
    failure_bound_thm3: f64,
    graph_count_log_lower_bound: f64,
    graph_count_bound_valid: bool,
    k: u64,
    error_lower_bound: f64,
}

fn cmd_bounds(a: BoundsArgs) -> CliResult {
    let cfg = ReconConfig::new(a.d, a.epsilon, a.delta).with_c1(a.c1);
    let t2 = required_samples_thm2(&cfg, a.n, a.alphabet)?;
    let t3 = required_samples_thm3(&cfg, a.n, a.alphabet)?;
    let count = graph_count_lower_bound(a.n, a.d);
    let row = BoundsRow {
        n: a.n,
        d: a.d,
        alphabet: a.alphabet,
        epsilon: a.epsilon,
        delta: a.delta,
        c1: a.c1,
        required_samples_thm2: t2.samples,
        failure_bound_thm2: t2.failure_probability,
        required_samples_thm3: t3.samples,
        failure_bound_thm3: t3.failure_probability,
        graph_count_log_lower_bound: count.log_count,
        graph_count_bound_valid: count.valid,
        k: a.k,
        error_lower_bound: error_lower_bound(a.n, a.d, a.alphabet, a.k),
    };
    if a.json {
        emit(None, &to_json(&row)?)?;
    } else {
        let value = serde_json::to_value(&row).map_err(MrfError::from)?;
        let obj = value.as_object().expect("row is an object");
        let width = obj.keys().map(String::len).max().unwrap_or(0);
        let mut text = String::new();
        for (key, v) in obj {
            text.push_str(&format!("{key:<width$}  {v}\n"));
        }
        if !count.valid {
            text.push_str("note: n is too small for the graph-count construction; the count bound is 0\n");
        }
        emit(None, &text)?;
    }
    Ok(0)
}

fn cmd_hidden(a: HiddenArgs) -> CliResult {
    let dprime = a.thresholds.d;
    let (est, cfg) = match (&a.samples, &a.model) {
        (Some(path), _) => {
            if a.thresholds.epsilon.is_none() || a.thresholds.delta.is_none() {
                return Err(no_measure("--samples"));
            }
            (Estimator::empirical(SampleMatrix::load(path)?), thresholds(&a.thresholds, || unreachable!())?)
        }
        (None, Some(path)) => {
            let model = Model::load(path)?;
            let hidden = a.hidden.clone().unwrap_or_default();
            let (gstar, keep) = observed_graph(model.graph(), &hidden)?;
            let marginal = Arc::new(oracle(&model)?.marginalize(&keep)?);
            let cfg = thresholds(&a.thresholds, || {
                let r = verify_thm3_conditions_on(marginal.as_ref(), &gstar, 2 * dprime);
                (r.epsilon_star, r.delta_star)
            })?;
            (Estimator::exact(marginal), cfg)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let (result, recovery) = match reconstruct_with_hidden(&est, dprime, &cfg) {
        Ok(r) => r,
        Err(e @ MrfError::HiddenRecovery(_)) => {
            return Err(Failure { code: EXIT_RECON, message: e.to_string() });
        }
        Err(e) => return Err(e.into()),
    };
    #[derive(Serialize)]
    struct Output {
        observed: serde_json::Value,
        recovered: mrf_core::reconstruct::HiddenRecovery,
    }
    let observed: serde_json::Value = serde_json::from_str(&result.to_json()?).map_err(MrfError::from)?;
    emit(a.out.as_deref(), &to_json(&Output { observed, recovered: recovery })?)?;
    Ok(if result.is_clean() { 0 } else { EXIT_RECON })
}

fn run(cli: Cli) -> CliResult {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global().ok();
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Hidden(a) => cmd_hidden(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
