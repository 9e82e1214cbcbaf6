//! Neighborhood-search reconstruction algorithms, hidden-vertex recovery and
//! the sample-complexity calculators.

mod complexity;
mod ctp;
mod decay;
mod general;
mod hidden;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::model::Graph;
use crate::table::Marginals;

pub use complexity::{
    calibrated_constant, error_lower_bound, graph_count_lower_bound, required_samples_calibrated, required_samples_thm2,
    required_samples_thm3, CountBound, SampleBound,
};
pub use ctp::neighborhood_ctp;
pub use decay::{correlation_matrix, correlation_neighborhoods};
pub use general::{neighborhood_general, score_f};
pub use hidden::{observed_graph, recover_hidden, HiddenRecovery};

/// Default cap on correlation-neighborhood size in the decay algorithm.
pub const DEFAULT_DECAY_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Smallest set passing the conditional two-point test.
    Ctp,
    /// Largest set with score above ε/2.
    General,
    /// The general search restricted to correlation neighborhoods.
    Decay,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ctp => "ctp",
            Algorithm::General => "general",
            Algorithm::Decay => "decay",
        })
    }
}

impl FromStr for Algorithm {
    type Err = MrfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ctp" => Ok(Algorithm::Ctp),
            "general" => Ok(Algorithm::General),
            "decay" => Ok(Algorithm::Decay),
            _ => Err(MrfError::InvalidConfig(format!("unknown algorithm {s:?} (expected ctp, general or decay)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_decay_cap")]
    pub decay_cap: usize,
}

fn default_c1() -> f64 {
    1.0
}

fn default_decay_cap() -> usize {
    DEFAULT_DECAY_CAP
}

impl ReconConfig {
    pub fn new(d: usize, epsilon: f64, delta: f64) -> Self {
        ReconConfig { d, epsilon, delta, kappa: None, c1: 1.0, decay_cap: DEFAULT_DECAY_CAP }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }

    /// `εδ²/9`: the marginal accuracy under which the thresholded tests are exact.
    pub fn gamma(&self) -> f64 {
        self.epsilon * self.delta * self.delta / 9.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(MrfError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(MrfError::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(MrfError::InvalidConfig(format!("kappa must be positive, got {k}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VertexReport {
    pub neighborhood: Vec<usize>,
    pub candidates_tested: usize,
    pub candidates_accepted: usize,
    pub ambiguous: bool,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation_neighborhood: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconResult {
    /// Union of the per-vertex claims.
    #[serde(serialize_with = "serialize_edges")]
    pub graph: Graph,
    pub per_vertex: BTreeMap<usize, VertexReport>,
    pub symmetrized: bool,
    /// Ordered pairs `(u, v)` with `v ∈ N̂(u)` but `u ∉ N̂(v)`.
    pub inconsistencies: Vec<(usize, usize)>,
    pub config: ReconConfig,
}

fn serialize_edges<S: serde::Serializer>(g: &Graph, s: S) -> std::result::Result<S::Ok, S::Error> {
    g.edges().serialize(s)
}

impl ReconResult {
    /// Assembles the union graph from per-vertex neighborhoods.
    pub fn from_neighborhoods(n: usize, per_vertex: Vec<VertexReport>, config: ReconConfig) -> Self {
        let mut graph = Graph::empty(n);
        let mut inconsistencies = Vec::new();
        for (u, report) in per_vertex.iter().enumerate() {
            for &v in &report.neighborhood {
                if !per_vertex[v].neighborhood.contains(&u) {
                    inconsistencies.push((u, v));
                }
                if !graph.has_edge(u, v) {
                    graph.add_edge(u, v).expect("neighborhoods hold valid distinct vertices");
                }
            }
        }
        if !inconsistencies.is_empty() {
            log::warn!("{} asymmetric neighborhood claims", inconsistencies.len());
        }
        ReconResult {
            graph,
            per_vertex: per_vertex.into_iter().enumerate().collect(),
            symmetrized: true,
            inconsistencies,
            config,
        }
    }

    /// No per-vertex failure, no ambiguity and no asymmetric claims.
    pub fn is_clean(&self) -> bool {
        self.inconsistencies.is_empty() && self.per_vertex.values().all(|r| !r.failed && !r.ambiguous)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        // `graph` holds the edge list; expose it under the documented key
        if let Some(obj) = value.as_object_mut() {
            let edges = obj.remove("graph").unwrap_or_default();
            obj.insert("edges".into(), edges);
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn edges_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for (u, v) in self.graph.edges() {
            w.serialize((u, v))?;
        }
        let bytes = w.into_inner().map_err(|e| MrfError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of integers is utf-8"))
    }
}

fn run_per_vertex<F>(n: usize, cfg: &ReconConfig, search: F) -> ReconResult
where
    F: Fn(usize) -> VertexReport + Sync + Send,
{
    let reports: Vec<VertexReport> = (0..n).into_par_iter().map(&search).collect();
    ReconResult::from_neighborhoods(n, reports, cfg.clone())
}

/// Conditional two-point reconstruction.
pub fn reconstruct_ctp<M: Marginals>(est: &M, cfg: &ReconConfig) -> Result<ReconResult> {
    cfg.validate()?;
    Ok(run_per_vertex(est.n(), cfg, |v| neighborhood_ctp(est, v, cfg)))
}

/// Score-based reconstruction.
pub fn reconstruct_general<M: Marginals>(est: &M, cfg: &ReconConfig) -> Result<ReconResult> {
    cfg.validate()?;
    Ok(run_per_vertex(est.n(), cfg, |v| {
        let pool: Vec<usize> = (0..est.n()).filter(|&u| u != v).collect();
        neighborhood_general(est, v, &pool, cfg)
    }))
}

pub use decay::reconstruct_decay;

pub fn reconstruct(est: &crate::estimator::Estimator, algorithm: Algorithm, cfg: &ReconConfig) -> Result<ReconResult> {
    match algorithm {
        Algorithm::Ctp => reconstruct_ctp(est, cfg),
        Algorithm::General => reconstruct_general(est, cfg),
        Algorithm::Decay => reconstruct_decay(est, cfg),
    }
}

/// General reconstruction on the observed vertices with degree bound
/// `2·dprime`, followed by clique contraction.
pub fn reconstruct_with_hidden<M: Marginals>(
    est: &M,
    dprime: usize,
    cfg: &ReconConfig,
) -> Result<(ReconResult, HiddenRecovery)> {
    let cfg = ReconConfig { d: 2 * dprime, ..cfg.clone() };
    let result = reconstruct_general(est, &cfg)?;
    let recovery = recover_hidden(&result.graph, dprime)?;
    Ok((result, recovery))
}
