use super::{ReconConfig, VertexReport};
use crate::table::{sorted_union, subsets_by_size, ConditionalView, Marginals};

/// `f(v; U) = min over W ⊆ pool∖({v} ∪ U), |W| ≤ d, and i ∈ U of the largest
/// gated gap |P(x_v | x_W, x_U) - P(x_v | x_W, x_U^i)|`, where `x_U^i` changes
/// only the symbol at `U[i]` and both conditioning masses must exceed δ/2.
///
/// An empty gated set contributes 0; `U = ∅` gives `+∞`.
pub fn score_f<M: Marginals + ?Sized>(est: &M, v: usize, u_set: &[usize], pool: &[usize], cfg: &ReconConfig) -> f64 {
    score(est, v, u_set, pool, cfg, None)
}

/// With `cut = Some(c)` the search stops as soon as the comparison with `c`
/// is decided; the return value is then only meaningful relative to `c`.
fn score<M: Marginals + ?Sized>(
    est: &M,
    v: usize,
    u_set: &[usize],
    pool: &[usize],
    cfg: &ReconConfig,
    cut: Option<f64>,
) -> f64 {
    let rest: Vec<usize> = pool.iter().copied().filter(|&w| w != v && !u_set.contains(&w)).collect();
    let gate = cfg.delta / 2.0;
    let mut best = f64::INFINITY;
    for w_set in subsets_by_size(&rest, 0, cfg.d) {
        let vars = sorted_union(&[&w_set, u_set, &[v]]);
        let view = ConditionalView::new(&est.marginal_table(&vars), v);
        for &ui in u_set {
            let pos = view.position(ui).expect("U is conditioned on");
            let gap = view.max_gated_gap(pos, gate, cut.unwrap_or(f64::INFINITY));
            best = best.min(gap);
            if cut.is_some_and(|c| best <= c) {
                return best;
            }
        }
    }
    best
}

/// The largest `U ⊆ pool∖{v}` with `|U| ≤ d` and finite `f(v; U) > ε/2`.
/// Several passing sets of the largest size are flagged as ambiguous and the
/// lexicographically smallest is returned; no passing set yields `∅`.
pub fn neighborhood_general<M: Marginals + ?Sized>(est: &M, v: usize, pool: &[usize], cfg: &ReconConfig) -> VertexReport {
    let candidates: Vec<usize> = pool.iter().copied().filter(|&u| u != v).collect();
    let cut = cfg.epsilon / 2.0;
    let mut tested = 0;
    for size in (1..=cfg.d.min(candidates.len())).rev() {
        let mut passing = Vec::new();
        for u_set in subsets_by_size(&candidates, size, size) {
            tested += 1;
            let f = score(est, v, &u_set, pool, cfg, Some(cut));
            if f.is_finite() && f > cut {
                passing.push(u_set);
            }
        }
        if let Some(first) = passing.first() {
            let ambiguous = passing.len() > 1;
            if ambiguous {
                log::debug!("vertex {v}: {} candidate neighborhoods of size {size} pass", passing.len());
            }
            return VertexReport {
                neighborhood: first.clone(),
                candidates_tested: tested,
                candidates_accepted: passing.len(),
                ambiguous,
                ..Default::default()
            };
        }
    }
    VertexReport { candidates_tested: tested, ..Default::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::new_ising;
    use crate::oracle::joint_distribution;

    #[test]
    fn empty_set_scores_infinity() {
        let dist = joint_distribution(&new_ising(2, &[(0, 1, 1.0)]).unwrap()).unwrap();
        assert_eq!(score_f(&dist, 0, &[], &[0, 1], &ReconConfig::new(1, 0.1, 0.1)), f64::INFINITY);
    }

    #[test]
    fn two_spin_score() {
        let dist = joint_distribution(&new_ising(2, &[(0, 1, 1.0)]).unwrap()).unwrap();
        let f = score_f(&dist, 0, &[1], &[0, 1], &ReconConfig::new(1, 0.1, 0.1));
        assert!((f - 1f64.tanh()).abs() < 1e-12);
        let r = neighborhood_general(&dist, 0, &[0, 1], &ReconConfig::new(1, 1.5, 0.1));
        assert_eq!(r.neighborhood, vec![1]);
    }

    #[test]
    fn screened_non_neighbor_scores_zero() {
        let dist = joint_distribution(&new_ising(3, &[(0, 1, 0.8), (1, 2, 0.8)]).unwrap()).unwrap();
        let f = score_f(&dist, 0, &[2], &[0, 1, 2], &ReconConfig::new(1, 0.1, 0.1));
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn independent_model_gives_empty_sets() {
        let dist = joint_distribution(&new_ising(3, &[]).unwrap()).unwrap();
        let r = neighborhood_general(&dist, 2, &[0, 1, 2], &ReconConfig::new(2, 0.1, 0.1));
        assert!(r.neighborhood.is_empty() && !r.ambiguous);
    }
}
