//! Sample generation: exact draws from the oracle, Gibbs sampling for models
//! beyond the enumeration cap, and symmetric observation noise.

mod io;
pub(crate) mod rng;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::model::Model;
use crate::oracle::DistTable;

use rng::{stream_at, STREAM_EXACT, STREAM_GIBBS, STREAM_NOISE};

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_THINNING: usize = 10;

/// How a sample matrix was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Gibbs { burn_in: usize, thinning: usize },
    Noisy { channel: NoiseChannel, seed: u64, base: Box<Provenance> },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Exact => write!(f, "exact"),
            Provenance::Gibbs { burn_in, thinning } => write!(f, "gibbs(burn_in={burn_in},thinning={thinning})"),
            Provenance::Noisy { channel, seed, base } => {
                let sites = match &channel.sites {
                    None => "all".to_string(),
                    Some(s) => s.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
                };
                write!(f, "noisy(q={},seed={seed},sites={sites},base={base})", channel.flip_prob)
            }
        }
    }
}

impl FromStr for Provenance {
    type Err = MrfError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || MrfError::Parse(format!("unrecognized provenance {s:?}"));
        if s == "exact" {
            return Ok(Provenance::Exact);
        }
        let (name, inner) = s.strip_suffix(')').and_then(|t| t.split_once('(')).ok_or_else(bad)?;
        // split top-level `key=value` pairs; `base` is always last and may nest
        let mut fields = Vec::new();
        let mut rest = inner;
        while !rest.is_empty() {
            let (key, tail) = rest.split_once('=').ok_or_else(bad)?;
            if key == "base" {
                fields.push((key, tail));
                break;
            }
            let (value, next) = tail.split_once(',').unwrap_or((tail, ""));
            fields.push((key, value));
            rest = next;
        }
        let get = |k: &str| fields.iter().find(|f| f.0 == k).map(|f| f.1).ok_or_else(bad);
        let num = |k: &str| get(k)?.parse::<u64>().map_err(|_| bad());
        match name {
            "gibbs" => Ok(Provenance::Gibbs { burn_in: num("burn_in")? as usize, thinning: num("thinning")? as usize }),
            "noisy" => {
                let sites = match get("sites")? {
                    "all" => None,
                    list => Some(list.split(';').map(|x| x.parse().map_err(|_| bad())).collect::<Result<Vec<usize>>>()?),
                };
                let flip_prob = get("q")?.parse().map_err(|_| bad())?;
                Ok(Provenance::Noisy {
                    channel: NoiseChannel { flip_prob, sites },
                    seed: num("seed")?,
                    base: Box::new(get("base")?.parse()?),
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Symmetric channel: each affected site is replaced, with probability
/// `flip_prob`, by a uniform draw among the other `A - 1` symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel {
    pub flip_prob: f64,
    /// `None` means every vertex.
    pub sites: Option<Vec<usize>>,
}

impl NoiseChannel {
    pub fn symmetric(flip_prob: f64) -> Self {
        NoiseChannel { flip_prob, sites: None }
    }

    pub fn on_sites(flip_prob: f64, sites: Vec<usize>) -> Self {
        NoiseChannel { flip_prob, sites: Some(sites) }
    }
}

/// `k × n` matrix of symbols, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    k: usize,
    n: usize,
    alphabet: usize,
    data: Vec<u8>,
    provenance: Provenance,
    seed: u64,
}

impl SampleMatrix {
    pub fn new(n: usize, alphabet: usize, data: Vec<u8>, provenance: Provenance, seed: u64) -> Result<Self> {
        if !(2..=256).contains(&alphabet) {
            return Err(MrfError::InvalidAlphabet(alphabet));
        }
        if n == 0 || data.len() % n != 0 {
            return Err(MrfError::InvalidConfig(format!("{} symbols do not form rows of width {n}", data.len())));
        }
        if let Some(&x) = data.iter().find(|&&x| x as usize >= alphabet) {
            return Err(MrfError::InvalidConfig(format!("symbol {x} outside alphabet of size {alphabet}")));
        }
        Ok(SampleMatrix { k: data.len() / n, n, alphabet, data, provenance, seed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, u8> {
        self.data.chunks(self.n)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The first `k` rows.
    pub fn truncated(&self, k: usize) -> SampleMatrix {
        let k = k.min(self.k);
        SampleMatrix { k, data: self.data[..k * self.n].to_vec(), ..self.clone() }
    }
}

/// `k` iid draws from `dist` by inverse CDF.
pub fn sample_exact(dist: &DistTable, k: usize, seed: u64) -> Result<SampleMatrix> {
    if k == 0 {
        return Err(MrfError::InvalidConfig("sample count must be at least 1".into()));
    }
    let (n, a) = (dist.n(), dist.alphabet());
    let mut cdf = Vec::with_capacity(dist.probs().len());
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cdf.push(acc);
    }
    let last_positive = dist.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut data = vec![0u8; k * n];
    data.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        let u: f64 = stream_at(seed, STREAM_EXACT, row as u128).gen::<f64>() * acc;
        let state = cdf.partition_point(|&c| c <= u).min(last_positive);
        let mut rem = state;
        for slot in out.iter_mut().rev() {
            *slot = (rem % a) as u8;
            rem /= a;
        }
    });
    SampleMatrix::new(n, a, data, Provenance::Exact, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thinning: usize,
    /// Independent chains; row `r` comes from chain `r % chains`.
    pub chains: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig { burn_in: DEFAULT_BURN_IN, thinning: DEFAULT_THINNING, chains: 1 }
    }
}

/// Systematic-scan Gibbs sampling (sites `0..n` per sweep).
///
/// Each chain starts from the all-zero state if it has positive weight, and
/// from a uniformly random state otherwise.
pub fn gibbs_sample(model: &Model, k: usize, cfg: GibbsConfig, seed: u64) -> Result<SampleMatrix> {
    if k == 0 || cfg.thinning == 0 || cfg.chains == 0 {
        return Err(MrfError::InvalidConfig("k, thinning and chains must be positive".into()));
    }
    let (n, a) = (model.n(), model.alphabet());
    let by_vertex = model.potentials_by_vertex();
    let chains = cfg.chains.min(k);
    let per_chain: Vec<Result<Vec<u8>>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let rows = (k - c).div_ceil(chains);
            let mut rng = stream_at(seed, STREAM_GIBBS + ((c as u64) << 8), 0);
            let mut state = vec![0u8; n];
            if model.log_weight(&state) == f64::NEG_INFINITY {
                for x in state.iter_mut() {
                    *x = rng.gen_range(0..a) as u8;
                }
            }
            let mut weights = vec![0.0; a];
            let mut sweep = |state: &mut Vec<u8>, rng: &mut rand_chacha::ChaCha8Rng| -> Result<()> {
                for i in 0..n {
                    for (x, w) in weights.iter_mut().enumerate() {
                        state[i] = x as u8;
                        *w = by_vertex[i].iter().map(|&p| model.potentials()[p].value(state, a)).sum();
                    }
                    let top = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if top == f64::NEG_INFINITY {
                        return Err(MrfError::HardConstraintDeadlock(i));
                    }
                    let mut total = 0.0;
                    for w in weights.iter_mut() {
                        *w = (*w - top).exp();
                        total += *w;
                    }
                    let mut u = rng.gen::<f64>() * total;
                    let mut pick = a - 1;
                    for (x, &w) in weights.iter().enumerate() {
                        if u < w {
                            pick = x;
                            break;
                        }
                        u -= w;
                    }
                    while weights[pick] == 0.0 {
                        pick -= 1;
                    }
                    state[i] = pick as u8;
                }
                Ok(())
            };
            for _ in 0..cfg.burn_in {
                sweep(&mut state, &mut rng)?;
            }
            let mut out = Vec::with_capacity(rows * n);
            for _ in 0..rows {
                for _ in 0..cfg.thinning {
                    sweep(&mut state, &mut rng)?;
                }
                out.extend_from_slice(&state);
            }
            Ok(out)
        })
        .collect();
    let per_chain = per_chain.into_iter().collect::<Result<Vec<_>>>()?;
    let mut data = vec![0u8; k * n];
    for (r, row) in data.chunks_mut(n).enumerate() {
        let (c, j) = (r % chains, r / chains);
        row.copy_from_slice(&per_chain[c][j * n..(j + 1) * n]);
    }
    SampleMatrix::new(n, a, data, Provenance::Gibbs { burn_in: cfg.burn_in, thinning: cfg.thinning }, seed)
}

/// Corrupts the sites selected by `channel`, independently per (row, site).
///
/// The randomness for site `s` of row `r` depends only on `(seed, r, s)`, so
/// applications to disjoint site sets with the same seed commute.
pub fn apply_noise(samples: &SampleMatrix, channel: &NoiseChannel, seed: u64) -> Result<SampleMatrix> {
    let q = channel.flip_prob;
    if !(0.0..1.0).contains(&q) {
        return Err(MrfError::InvalidConfig(format!("flip probability must be in [0, 1), got {q}")));
    }
    let n = samples.n;
    let sites: Vec<usize> = match &channel.sites {
        None => (0..n).collect(),
        Some(s) => {
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(MrfError::VertexOutOfRange { vertex: v, n });
            }
            s.clone()
        }
    };
    let a = samples.alphabet;
    let mut data = samples.data.clone();
    data.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        for &s in &sites {
            let mut rng = stream_at(seed, STREAM_NOISE, (row * n + s) as u128);
            if rng.gen::<f64>() < q {
                let shift = rng.gen_range(1..a);
                out[s] = ((out[s] as usize + shift) % a) as u8;
            }
        }
    });
    let provenance = Provenance::Noisy { channel: channel.clone(), seed, base: Box::new(samples.provenance.clone()) };
    Ok(SampleMatrix { data, provenance, ..samples.clone() })
}
