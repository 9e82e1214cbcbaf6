//! Sample-complexity experiments: reconstruct a known model repeatedly over a
//! grid of sample sizes and report success rates.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::estimator::Estimator;
use crate::model::{ising_on_graph, random_ising, Graph, Model, ModelFile};
use crate::oracle::{
    joint_distribution_with_cap, state_count, verify_thm2_conditions_on, verify_thm3_conditions_on, DistTable,
    DEFAULT_ENUM_CAP,
};
use crate::reconstruct::{
    calibrated_constant, observed_graph, reconstruct, reconstruct_with_hidden, required_samples_thm2,
    required_samples_thm3, Algorithm, ReconConfig, SampleBound,
};
use crate::sampler::rng::{stream_at, STREAM_EXPERIMENT};
use crate::sampler::{apply_noise, gibbs_sample, sample_exact, GibbsConfig, NoiseChannel, SampleMatrix};

/// Built-in model families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Path { n: usize, beta: f64 },
    Cycle { n: usize, beta: f64 },
    Hypercube { dim: u32, beta: f64 },
    Complete { n: usize, beta: f64 },
    RandomIsing {
        n: usize,
        d: usize,
        beta_min: f64,
        beta_max: f64,
        #[serde(default)]
        ferromagnetic: bool,
        seed: u64,
    },
}

impl Generator {
    pub fn build(&self) -> Model {
        match *self {
            Generator::Path { n, beta } => ising_on_graph(&Graph::path(n), beta),
            Generator::Cycle { n, beta } => ising_on_graph(&Graph::cycle(n), beta),
            Generator::Hypercube { dim, beta } => ising_on_graph(&Graph::hypercube(dim), beta),
            Generator::Complete { n, beta } => ising_on_graph(&Graph::complete(n), beta),
            Generator::RandomIsing { n, d, beta_min, beta_max, ferromagnetic, seed } => {
                random_ising(n, d, beta_min, beta_max, ferromagnetic, seed)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    /// Path to a model JSON file, relative to the config file's directory.
    File(PathBuf),
    Generator(Generator),
    Inline(ModelFile),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Exact,
    Gibbs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    Exact,
    Samples {
        k: Vec<usize>,
        #[serde(default)]
        sampler: SamplerKind,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "default_thinning")]
        thinning: usize,
        #[serde(default = "default_chains")]
        chains: usize,
    },
}

fn default_burn_in() -> usize {
    crate::sampler::DEFAULT_BURN_IN
}

fn default_thinning() -> usize {
    crate::sampler::DEFAULT_THINNING
}

fn default_chains() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_trials() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub estimator: EstimatorMode,
    pub algorithm: Algorithm,
    pub d: usize,
    /// Measured from the oracle when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Symmetric noise applied to every observed site.
    #[serde(default)]
    pub noise_q: Option<f64>,
    /// Unobserved vertices; reconstruction then recovers them from cliques
    /// (degree bound `d` for hidden vertices, `2d` for the observed search).
    #[serde(default)]
    pub hidden: Vec<usize>,
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Measure the non-degeneracy constants even when ε and δ are given.
    #[serde(default = "default_true")]
    pub measure_conditions: bool,
    /// When false, runtimes are reported as 0 so reports are byte-identical across runs.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default)]
    pub enum_cap: Option<u64>,
}

fn default_c1() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        Ok((cfg, path.parent().map(Path::to_path_buf).unwrap_or_default()))
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(MrfError::InvalidConfig("trials must be at least 1".into()));
        }
        if let EstimatorMode::Samples { k, .. } = &self.estimator {
            if k.is_empty() || k.contains(&0) {
                return Err(MrfError::InvalidConfig("sample sizes must be a non-empty list of positive counts".into()));
            }
        }
        if self.algorithm == Algorithm::Decay && self.kappa.is_none() {
            return Err(MrfError::InvalidConfig("the decay algorithm needs kappa".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measured {
    pub holds: bool,
    pub epsilon_star: f64,
    pub delta_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    /// `None` for the exact estimator.
    pub k: Option<usize>,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub precision: f64,
    pub recall: f64,
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub k: Option<usize>,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_runtime_ms: f64,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// Smallest grid size whose success rate reached `target_success`.
    pub k: usize,
    pub target_success: f64,
    /// The constant replacing `81/(ε²δ⁴)` that makes the sample formula return `k`.
    pub constant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub n: usize,
    pub alphabet: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub measured: Option<Measured>,
    pub formula_samples: Option<SampleBound>,
    pub calibration: Option<Calibration>,
    pub cells: Vec<Cell>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `k,success_rate,mean_precision,mean_recall,mean_runtime_ms`; the exact
    /// estimator's row has `k = exact`.
    pub fn curve_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "success_rate", "mean_precision", "mean_recall", "mean_runtime_ms"])?;
        for a in &self.aggregates {
            w.write_record([
                a.k.map_or_else(|| "exact".to_string(), |k| k.to_string()),
                a.success_rate.to_string(),
                a.mean_precision.to_string(),
                a.mean_recall.to_string(),
                a.mean_runtime_ms.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| MrfError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of numbers is utf-8"))
    }
}

/// Edge precision and recall of `predicted` against `truth` (1 when the
/// relevant edge set is empty).
pub fn precision_recall(predicted: &Graph, truth: &Graph) -> (f64, f64) {
    let p = predicted.edges();
    let hits = p.iter().filter(|&&(u, v)| u < truth.n() && v < truth.n() && truth.has_edge(u, v)).count();
    let precision = if p.is_empty() { 1.0 } else { hits as f64 / p.len() as f64 };
    let recall = if truth.edge_count() == 0 { 1.0 } else { hits as f64 / truth.edge_count() as f64 };
    (precision, recall)
}

fn load_model(source: &ModelSource, base_dir: &Path) -> Result<Model> {
    match source {
        ModelSource::File(p) => Model::load(if p.is_absolute() { p.clone() } else { base_dir.join(p) }),
        ModelSource::Generator(g) => Ok(g.build()),
        ModelSource::Inline(f) => Model::try_from(f.clone()),
    }
}

struct Setup {
    model: Model,
    /// Distribution of the observed vertices, when enumerable.
    dist: Option<Arc<DistTable>>,
    keep: Vec<usize>,
    truth: Graph,
    observed_truth: Graph,
}

fn cell_seed(seed: u64, index: usize) -> u64 {
    stream_at(seed, STREAM_EXPERIMENT, index as u128).gen()
}

/// Runs the whole grid. `base_dir` resolves relative model paths.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    let model = load_model(&config.model, base_dir)?;
    let cap = config.enum_cap.unwrap_or(DEFAULT_ENUM_CAP);
    let feasible = state_count(model.n(), model.alphabet(), cap).is_ok();
    let full = if feasible { Some(Arc::new(joint_distribution_with_cap(&model, cap)?)) } else { None };
    let truth = model.graph().clone();
    let (observed_truth, keep) = observed_graph(&truth, &config.hidden)?;
    let dist = match &full {
        Some(f) if config.hidden.is_empty() => Some(Arc::clone(f)),
        Some(f) => Some(Arc::new(f.marginalize(&keep)?)),
        None => None,
    };
    let setup = Setup { model, dist, keep, truth, observed_truth };

    let hidden_mode = !config.hidden.is_empty();
    let measure_d = if hidden_mode { 2 * config.d } else { config.d };
    let needs_measure = config.epsilon.is_none() || config.delta.is_none();
    let measured = match &setup.dist {
        Some(dist) if needs_measure || config.measure_conditions => {
            let report = if config.algorithm == Algorithm::Ctp && !hidden_mode {
                verify_thm2_conditions_on(dist.as_ref(), &setup.observed_truth, measure_d)
            } else {
                verify_thm3_conditions_on(dist.as_ref(), &setup.observed_truth, measure_d)
            };
            Some(Measured { holds: report.holds, epsilon_star: report.epsilon_star, delta_star: report.delta_star })
        }
        _ => None,
    };
    let pick = |given: Option<f64>, measured_value: Option<f64>, name: &str| {
        given.or(measured_value).ok_or_else(|| {
            MrfError::InvalidConfig(format!("{name} not given and the model is too large to measure it"))
        })
    };
    let epsilon = pick(config.epsilon, measured.as_ref().map(|m| m.epsilon_star), "epsilon")?;
    let delta = pick(config.delta, measured.as_ref().map(|m| m.delta_star), "delta")?;
    let mut recon = ReconConfig::new(config.d, epsilon, delta).with_c1(config.c1);
    recon.kappa = config.kappa;
    if measured.as_ref().is_some_and(|m| !m.holds) {
        log::warn!("the non-degeneracy condition fails for this model; reconstruction may be wrong");
    }

    let ks: Vec<Option<usize>> = match &config.estimator {
        EstimatorMode::Exact => vec![None],
        EstimatorMode::Samples { k, .. } => k.iter().copied().map(Some).collect(),
    };
    let grid: Vec<(usize, Option<usize>, usize)> = ks
        .iter()
        .enumerate()
        .flat_map(|(ki, &k)| (0..config.trials).map(move |t| (ki * config.trials + t, k, t)))
        .collect();

    let run_cell = |&(index, k, trial): &(usize, Option<usize>, usize)| -> Cell {
        let seed = cell_seed(config.seed, index);
        let start = Instant::now();
        let outcome = run_one(config, &setup, &recon, k, seed);
        let runtime_ms = if config.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        match outcome {
            Ok((success, precision, recall)) => Cell { k, trial, seed, success, precision, recall, runtime_ms, error: None },
            Err(e) => Cell {
                k,
                trial,
                seed,
                success: false,
                precision: 0.0,
                recall: 0.0,
                runtime_ms,
                error: Some(e.to_string()),
            },
        }
    };
    let cells: Vec<Cell> = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| MrfError::InvalidConfig(e.to_string()))?
            .install(|| grid.par_iter().map(run_cell).collect()),
        None => grid.par_iter().map(run_cell).collect(),
    };

    let aggregates: Vec<Aggregate> = ks
        .iter()
        .map(|&k| {
            let group: Vec<&Cell> = cells.iter().filter(|c| c.k == k).collect();
            let t = group.len() as f64;
            let mean = |f: fn(&Cell) -> f64| group.iter().map(|c| f(c)).sum::<f64>() / t;
            Aggregate {
                k,
                trials: group.len(),
                success_rate: mean(|c| c.success as u8 as f64),
                mean_precision: mean(|c| c.precision),
                mean_recall: mean(|c| c.recall),
                mean_runtime_ms: mean(|c| c.runtime_ms),
                errors: group.iter().filter(|c| c.error.is_some()).count(),
            }
        })
        .collect();

    let n_obs = setup.keep.len();
    let alphabet = setup.model.alphabet();
    let recon_d = ReconConfig { d: measure_d, ..recon.clone() };
    let (formula_samples, m) = if config.algorithm == Algorithm::Ctp && !hidden_mode {
        (required_samples_thm2(&recon_d, n_obs, alphabet).ok(), measure_d + 2)
    } else {
        (required_samples_thm3(&recon_d, n_obs, alphabet).ok(), 2 * measure_d + 1)
    };
    let calibration = formula_samples.and_then(|bound| {
        let target = (1.0 - bound.failure_probability).max(0.9);
        let k = aggregates.iter().find(|a| a.k.is_some() && a.success_rate >= target)?.k?;
        let constant = calibrated_constant(k as u64, &recon_d, n_obs, m).ok()?;
        Some(Calibration { k, target_success: target, constant })
    });

    Ok(ExperimentReport {
        config: config.clone(),
        n: n_obs,
        alphabet,
        epsilon,
        delta,
        measured,
        formula_samples,
        calibration,
        cells,
        aggregates,
    })
}

fn draw(config: &ExperimentConfig, setup: &Setup, k: usize, seed: u64) -> Result<SampleMatrix> {
    let EstimatorMode::Samples { sampler, burn_in, thinning, chains, .. } = &config.estimator else {
        unreachable!("draw is only called in sampled mode")
    };
    let samples = match (sampler, &setup.dist) {
        (SamplerKind::Exact, Some(dist)) => sample_exact(dist, k, seed)?,
        (SamplerKind::Exact, None) => {
            return Err(MrfError::StateSpaceTooLarge {
                states: (setup.model.alphabet() as u128).saturating_pow(setup.model.n() as u32),
                cap: config.enum_cap.unwrap_or(DEFAULT_ENUM_CAP),
            })
        }
        (SamplerKind::Gibbs, _) => {
            let cfg = GibbsConfig { burn_in: *burn_in, thinning: *thinning, chains: *chains };
            let full = gibbs_sample(&setup.model, k, cfg, seed)?;
            if config.hidden.is_empty() {
                full
            } else {
                let data = full.rows().flat_map(|r| setup.keep.iter().map(move |&v| r[v])).collect();
                SampleMatrix::new(setup.keep.len(), full.alphabet(), data, full.provenance().clone(), seed)?
            }
        }
    };
    match config.noise_q {
        Some(q) if q > 0.0 => apply_noise(&samples, &NoiseChannel::symmetric(q), seed.wrapping_add(1)),
        _ => Ok(samples),
    }
}

fn run_one(config: &ExperimentConfig, setup: &Setup, recon: &ReconConfig, k: Option<usize>, seed: u64) -> Result<(bool, f64, f64)> {
    let est = match k {
        None => {
            let dist = setup.dist.as_ref().ok_or_else(|| MrfError::StateSpaceTooLarge {
                states: (setup.model.alphabet() as u128).saturating_pow(setup.model.n() as u32),
                cap: config.enum_cap.unwrap_or(DEFAULT_ENUM_CAP),
            })?;
            Estimator::exact(Arc::clone(dist))
        }
        Some(k) => Estimator::empirical(draw(config, setup, k, seed)?),
    };
    if config.hidden.is_empty() {
        let result = reconstruct(&est, config.algorithm, recon)?;
        let (precision, recall) = precision_recall(&result.graph, &setup.truth);
        Ok((result.graph == setup.truth, precision, recall))
    } else {
        let (_, recovery) = reconstruct_with_hidden(&est, config.d, recon)?;
        // vertex labels of added vertices are arbitrary, so only isomorphism is meaningful
        let ok = recovery.graph.is_isomorphic_to(&setup.truth);
        let score = if ok { 1.0 } else { 0.0 };
        Ok((ok, score, score))
    }
}
