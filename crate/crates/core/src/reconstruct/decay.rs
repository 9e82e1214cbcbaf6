use super::{general::neighborhood_general, run_per_vertex, ReconConfig, ReconResult};
use crate::error::{MrfError, Result};
use crate::estimator::Estimator;
use crate::table::pair_correlation;

/// All pairwise `d̂_C(u, v)` as a symmetric `n × n` matrix (zero diagonal).
///
/// For sampled data each pair is a separate scan of its two columns, so the
/// pass costs `O(n² k)`.
pub fn correlation_matrix(est: &Estimator) -> Result<Vec<Vec<f64>>> {
    let n = crate::table::Marginals::n(est);
    let mut out = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in u + 1..n {
            let c = match est.samples() {
                Some(s) => {
                    let a = s.alphabet();
                    let mut counts = vec![0u64; a * a];
                    for row in s.rows() {
                        counts[row[u] as usize * a + row[v] as usize] += 1;
                    }
                    let k = s.k() as f64;
                    let joint: Vec<f64> = counts.into_iter().map(|c| c as f64 / k).collect();
                    pair_correlation(&joint, a)
                }
                None => est.corr(u, v)?,
            };
            out[u][v] = c;
            out[v][u] = c;
        }
    }
    Ok(out)
}

/// `N_C(v) = {u : d̂_C(u, v) > κ/2}` for every `v`.
pub fn correlation_neighborhoods(corr: &[Vec<f64>], kappa: f64) -> Vec<Vec<usize>> {
    corr.iter()
        .enumerate()
        .map(|(v, row)| row.iter().enumerate().filter(|&(u, &c)| u != v && c > kappa / 2.0).map(|(u, _)| u).collect())
        .collect()
}

/// The general search with candidate sets `U` and `W` drawn from `N_C(v)`.
pub fn reconstruct_decay(est: &Estimator, cfg: &ReconConfig) -> Result<ReconResult> {
    cfg.validate()?;
    let kappa = cfg.kappa.ok_or_else(|| MrfError::InvalidConfig("the decay algorithm needs kappa".into()))?;
    let corr = correlation_matrix(est)?;
    let pools = correlation_neighborhoods(&corr, kappa);
    for (v, pool) in pools.iter().enumerate() {
        if pool.len() > cfg.decay_cap {
            return Err(MrfError::CorrelationNeighborhoodTooLarge { vertex: v, size: pool.len(), cap: cfg.decay_cap });
        }
    }
    if pools.iter().all(Vec::is_empty) && corr.len() > 1 {
        log::warn!("kappa = {kappa} exceeds every correlation; all correlation neighborhoods are empty");
    }
    Ok(run_per_vertex(corr.len(), cfg, |v| {
        let mut report = neighborhood_general(est, v, &pools[v], cfg);
        report.correlation_neighborhood = Some(pools[v].clone());
        report
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ising_on_graph, Graph};
    use crate::oracle::joint_distribution;
    use crate::sampler::sample_exact;

    #[test]
    fn empirical_and_exact_correlations_agree() {
        let dist = joint_distribution(&ising_on_graph(&Graph::path(3), 0.7)).unwrap();
        let exact = correlation_matrix(&Estimator::exact(dist.clone())).unwrap();
        let sampled = correlation_matrix(&Estimator::empirical(sample_exact(&dist, 100_000, 3).unwrap())).unwrap();
        for u in 0..3 {
            for v in 0..3 {
                assert!((exact[u][v] - sampled[u][v]).abs() < 0.02);
                assert_eq!(exact[u][v], exact[v][u]);
            }
        }
    }

    #[test]
    fn huge_kappa_gives_empty_graph() {
        let est = Estimator::exact(joint_distribution(&ising_on_graph(&Graph::cycle(4), 0.3)).unwrap());
        let r = reconstruct_decay(&est, &ReconConfig::new(2, 0.01, 0.01).with_kappa(5.0)).unwrap();
        assert_eq!(r.graph.edge_count(), 0);
    }

    #[test]
    fn missing_kappa_and_cap_are_errors() {
        let est = Estimator::exact(joint_distribution(&ising_on_graph(&Graph::complete(5), 0.3)).unwrap());
        assert!(reconstruct_decay(&est, &ReconConfig::new(2, 0.1, 0.1)).is_err());
        let mut cfg = ReconConfig::new(2, 0.1, 0.1).with_kappa(0.01);
        cfg.decay_cap = 2;
        assert!(matches!(reconstruct_decay(&est, &cfg), Err(MrfError::CorrelationNeighborhoodTooLarge { .. })));
    }
}
