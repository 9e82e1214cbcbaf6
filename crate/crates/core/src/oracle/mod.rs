//! Exact inference by full state enumeration.
//!
//! [`joint_distribution`] materializes `P(σ) ∝ exp(Σ_a Ψ_a(σ_a))` over all
//! `A^n` states. Everything else in this module (marginals, conditionals,
//! correlation distances, the non-degeneracy condition searches) reads that
//! table, so it is the ground truth the estimators and reconstruction
//! algorithms are checked against.

mod bounds;
mod conditions;
mod nonid;

use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;

pub use bounds::{hidden_condition_bounds, ising_condition_bounds, soft_constraint_feasible, ConditionBounds, EpsilonForm};
pub use conditions::{
    verify_hidden_conditions, verify_hidden_conditions_on, verify_thm2_conditions, verify_thm2_conditions_on,
    verify_thm3_conditions, verify_thm3_conditions_on, ConditionReport, Failure, Witness, GAP_TOLERANCE,
};
pub use nonid::{nonid_jacobian_det, nonid_jacobian_det_with_step, nonid_map, NONID_FD_STEP};

use crate::error::{MrfError, Result};
use crate::model::Model;
use crate::table::{self, MarginalTable, Marginals};

/// Default enumeration cap: `2^24` states.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 24;

/// Exact joint distribution over `{0..A}^n`, state index in mixed radix with
/// vertex 0 most significant.
pub struct DistTable {
    n: usize,
    alphabet: usize,
    probs: Vec<f64>,
    model: Option<Arc<Model>>,
    cache: DashMap<Vec<usize>, Arc<MarginalTable>>,
}

impl fmt::Debug for DistTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistTable").field("n", &self.n).field("alphabet", &self.alphabet).field("states", &self.probs.len()).finish()
    }
}

impl Clone for DistTable {
    fn clone(&self) -> Self {
        DistTable::from_parts(self.n, self.alphabet, self.probs.clone(), self.model.clone())
    }
}

/// Number of states `A^n`, or an error if it exceeds `cap`.
pub fn state_count(n: usize, alphabet: usize, cap: u64) -> Result<usize> {
    let states = (alphabet as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(MrfError::StateSpaceTooLarge { states, cap });
    }
    Ok(states as usize)
}

pub fn joint_distribution(model: &Model) -> Result<DistTable> {
    joint_distribution_with_cap(model, DEFAULT_ENUM_CAP)
}

pub fn joint_distribution_with_cap(model: &Model, cap: u64) -> Result<DistTable> {
    let n = model.n();
    let a = model.alphabet();
    let states = state_count(n, a, cap)?;

    const CHUNK: usize = 1 << 12;
    let mut log_w = vec![0.0f64; states];
    log_w.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, out)| {
        let mut state = crate::model::index_assignment(chunk * CHUNK, n, a);
        for slot in out.iter_mut() {
            *slot = model.log_weight(&state);
            // odometer increment, last vertex fastest
            for digit in state.iter_mut().rev() {
                *digit += 1;
                if (*digit as usize) < a {
                    break;
                }
                *digit = 0;
            }
        }
    });

    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(MrfError::InvalidConfig("model assigns zero weight to every state".into()));
    }
    log_w.par_iter_mut().for_each(|w| *w = (*w - max).exp());
    let z: f64 = log_w.iter().sum();
    log_w.par_iter_mut().for_each(|w| *w /= z);
    Ok(DistTable::from_parts(n, a, log_w, Some(Arc::new(model.clone()))))
}

impl DistTable {
    fn from_parts(n: usize, alphabet: usize, probs: Vec<f64>, model: Option<Arc<Model>>) -> Self {
        DistTable { n, alphabet, probs, model, cache: DashMap::new() }
    }

    /// Wraps an explicit normalized table (entries ≥ 0, summing to 1).
    pub fn from_probs(n: usize, alphabet: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = state_count(n, alphabet, u64::MAX)?;
        if probs.len() != expected {
            return Err(MrfError::InvalidQuery(format!("expected {expected} probabilities, got {}", probs.len())));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(MrfError::InvalidQuery("probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(MrfError::InvalidQuery(format!("probabilities sum to {total}")));
        }
        Ok(DistTable::from_parts(n, alphabet, probs, None))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Source model, when the table came from [`joint_distribution`].
    pub fn model(&self) -> Option<&Model> {
        self.model.as_deref()
    }

    pub fn prob_of_state(&self, state: &[u8]) -> f64 {
        self.probs[crate::model::assignment_index(state, self.alphabet)]
    }

    /// Marginal distribution of the sorted vertex list `keep`, relabelled `0..keep.len()`.
    pub fn marginalize(&self, keep: &[usize]) -> Result<DistTable> {
        if !keep.windows(2).all(|w| w[0] < w[1]) || keep.last().is_some_and(|&v| v >= self.n) {
            return Err(MrfError::InvalidQuery("marginalization set must be sorted, distinct and in range".into()));
        }
        let table = self.compute_table(keep);
        Ok(DistTable::from_parts(keep.len(), self.alphabet, table.probs().to_vec(), None))
    }

    fn compute_table(&self, vars: &[usize]) -> MarginalTable {
        let a = self.alphabet;
        let mut out = vec![0.0; a.pow(vars.len() as u32)];
        if vars.is_empty() {
            // P(empty event) = 1 by normalization
            return MarginalTable::new(Vec::new(), a, vec![1.0]);
        }
        if a == 2 {
            let shifts: Vec<usize> = vars.iter().map(|&v| self.n - 1 - v).collect();
            for (s, &p) in self.probs.iter().enumerate() {
                let idx = shifts.iter().fold(0, |acc, &sh| (acc << 1) | ((s >> sh) & 1));
                out[idx] += p;
            }
        } else {
            let strides: Vec<usize> = vars.iter().map(|&v| a.pow((self.n - 1 - v) as u32)).collect();
            for (s, &p) in self.probs.iter().enumerate() {
                let idx = strides.iter().fold(0, |acc, &st| acc * a + (s / st) % a);
                out[idx] += p;
            }
        }
        MarginalTable::new(vars.to_vec(), a, out)
    }
}

impl Marginals for DistTable {
    fn n(&self) -> usize {
        self.n
    }

    fn alphabet(&self) -> usize {
        self.alphabet
    }

    fn marginal_table(&self, vars: &[usize]) -> Arc<MarginalTable> {
        if let Some(t) = self.cache.get(vars) {
            return Arc::clone(&t);
        }
        let table = Arc::new(self.compute_table(vars));
        self.cache.entry(vars.to_vec()).or_insert(table).clone()
    }
}

/// `P(X(U) = x_U)`.
pub fn marginal(dist: &DistTable, vars: &[usize], assignment: &[u8]) -> Result<f64> {
    table::prob(dist, vars, assignment)
}

/// `P(X(v) = x_v | X(U) = x_U)`; errors when the conditioning event has probability 0.
pub fn conditional(dist: &DistTable, v: usize, x_v: u8, vars: &[usize], assignment: &[u8]) -> Result<f64> {
    table::cond_prob(dist, v, x_v, vars, assignment)
}

pub fn correlation_distance(dist: &DistTable, u: usize, v: usize) -> Result<f64> {
    table::correlation_distance(dist, u, v)
}
