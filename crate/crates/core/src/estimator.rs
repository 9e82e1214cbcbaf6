//! The probability provider consumed by reconstruction: empirical frequencies
//! from samples, or exact oracle values.

use std::collections::HashMap;
use std::sync::Arc;

use dashmap::DashMap;

use crate::error::Result;
use crate::oracle::DistTable;
use crate::sampler::SampleMatrix;
use crate::table::{self, MarginalTable, Marginals};

enum Source {
    Exact(Arc<DistTable>),
    Empirical { samples: Arc<SampleMatrix>, distinct: Vec<(Vec<u8>, u64)> },
}

pub struct Estimator {
    source: Source,
    cache: DashMap<Vec<usize>, Arc<MarginalTable>>,
}

impl std::fmt::Debug for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.source {
            Source::Exact(d) => write!(f, "Estimator::Exact(n={}, A={})", d.n(), d.alphabet()),
            Source::Empirical { samples, .. } => {
                write!(f, "Estimator::Empirical(n={}, A={}, k={})", samples.n(), samples.alphabet(), samples.k())
            }
        }
    }
}

impl Estimator {
    /// Passes oracle marginals through unchanged.
    pub fn exact(dist: impl Into<Arc<DistTable>>) -> Self {
        Estimator { source: Source::Exact(dist.into()), cache: DashMap::new() }
    }

    /// Empirical frequencies `count / k`.
    pub fn empirical(samples: impl Into<Arc<SampleMatrix>>) -> Self {
        let samples = samples.into();
        let mut counts: HashMap<&[u8], u64> = HashMap::new();
        for row in samples.rows() {
            *counts.entry(row).or_default() += 1;
        }
        let mut distinct: Vec<(Vec<u8>, u64)> = counts.into_iter().map(|(r, c)| (r.to_vec(), c)).collect();
        // fixed order so that floating-point sums do not depend on hashing
        distinct.sort_unstable();
        let source = Source::Empirical { samples: Arc::clone(&samples), distinct };
        Estimator { source, cache: DashMap::new() }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.source, Source::Exact(_))
    }

    pub fn samples(&self) -> Option<&SampleMatrix> {
        match &self.source {
            Source::Empirical { samples, .. } => Some(samples),
            Source::Exact(_) => None,
        }
    }

    pub fn dist(&self) -> Option<&DistTable> {
        match &self.source {
            Source::Exact(d) => Some(d),
            Source::Empirical { .. } => None,
        }
    }

    /// `P̂(X(U) = x_U)`.
    pub fn prob(&self, vars: &[usize], assignment: &[u8]) -> Result<f64> {
        table::prob(self, vars, assignment)
    }

    /// `P̂(X(v) = x_v | X(U) = x_U)`; errors when the conditioning event was never observed.
    pub fn cond_prob(&self, v: usize, x_v: u8, vars: &[usize], assignment: &[u8]) -> Result<f64> {
        table::cond_prob(self, v, x_v, vars, assignment)
    }

    /// `d̂_C(u, v)`.
    pub fn corr(&self, u: usize, v: usize) -> Result<f64> {
        table::correlation_distance(self, u, v)
    }
}

impl Marginals for Estimator {
    fn n(&self) -> usize {
        match &self.source {
            Source::Exact(d) => d.n(),
            Source::Empirical { samples, .. } => samples.n(),
        }
    }

    fn alphabet(&self) -> usize {
        match &self.source {
            Source::Exact(d) => d.alphabet(),
            Source::Empirical { samples, .. } => samples.alphabet(),
        }
    }

    fn marginal_table(&self, vars: &[usize]) -> Arc<MarginalTable> {
        match &self.source {
            Source::Exact(d) => d.marginal_table(vars),
            Source::Empirical { samples, distinct } => {
                if let Some(t) = self.cache.get(vars) {
                    return Arc::clone(&t);
                }
                let a = samples.alphabet();
                let mut counts = vec![0u64; a.pow(vars.len() as u32)];
                for (row, c) in distinct {
                    let idx = vars.iter().fold(0, |acc, &v| acc * a + row[v] as usize);
                    counts[idx] += c;
                }
                let k = samples.k() as f64;
                let t = Arc::new(MarginalTable::new(vars.to_vec(), a, counts.into_iter().map(|c| c as f64 / k).collect()));
                self.cache.entry(vars.to_vec()).or_insert(t).clone()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::new_ising;
    use crate::oracle::joint_distribution;
    use crate::sampler::{sample_exact, Provenance};
    use crate::MrfError;

    fn rows(n: usize, data: Vec<u8>) -> Estimator {
        Estimator::empirical(SampleMatrix::new(n, 2, data, Provenance::Exact, 0).unwrap())
    }

    #[test]
    fn empty_set_has_probability_one() {
        let e = rows(2, vec![0, 1, 1, 1]);
        assert_eq!(e.prob(&[], &[]).unwrap(), 1.0);
    }

    #[test]
    fn identical_rows() {
        let e = rows(3, [0, 1, 1].repeat(10));
        assert_eq!(e.prob(&[2, 0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(e.prob(&[2, 0], &[0, 0]).unwrap(), 0.0);
        assert_eq!(e.corr(0, 2).unwrap(), 0.0);
    }

    #[test]
    fn single_row_conditional() {
        let e = rows(2, vec![1, 0]);
        assert_eq!(e.cond_prob(0, 1, &[1], &[0]).unwrap(), 1.0);
        assert!(matches!(e.cond_prob(0, 1, &[1], &[1]), Err(MrfError::ZeroProbabilityConditioning)));
    }

    #[test]
    fn exact_source_is_bitwise_oracle() {
        let dist = joint_distribution(&new_ising(4, &[(0, 1, 0.7), (1, 2, -0.4), (2, 3, 1.1)]).unwrap()).unwrap();
        let e = Estimator::exact(dist.clone());
        for vars in [vec![0], vec![1, 3], vec![0, 2, 3], vec![0, 1, 2, 3]] {
            assert_eq!(e.marginal_table(&vars).probs(), dist.marginal_table(&vars).probs());
        }
        assert_eq!(e.corr(0, 3).unwrap(), crate::oracle::correlation_distance(&dist, 0, 3).unwrap());
    }

    #[test]
    fn exact_source_markov_chain() {
        let e = Estimator::exact(joint_distribution(&new_ising(3, &[(0, 1, 0.8), (1, 2, 0.8)]).unwrap()).unwrap());
        let a = e.cond_prob(0, 0, &[1, 2], &[0, 0]).unwrap();
        let b = e.cond_prob(0, 0, &[1, 2], &[0, 1]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn empirical_two_spin() {
        let dist = joint_distribution(&new_ising(2, &[(0, 1, 1.0)]).unwrap()).unwrap();
        let e = Estimator::empirical(sample_exact(&dist, 200_000, 17).unwrap());
        assert!((e.cond_prob(0, 0, &[1], &[0]).unwrap() - 0.88080).abs() < 0.01);
        assert!((e.corr(0, 1).unwrap() - 1f64.tanh()).abs() < 0.01);
        let total: f64 = (0..2).map(|x| e.cond_prob(0, x, &[1], &[1]).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
