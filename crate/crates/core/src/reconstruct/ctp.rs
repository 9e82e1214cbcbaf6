use super::{ReconConfig, VertexReport};
use crate::table::{sorted_union, subsets_by_size, ConditionalView, Marginals};

/// Smallest `U ⊆ V∖{v}` (by size, then lexicographically) such that for every
/// `w ∉ U ∪ {v}` and every pair of assignments differing only at `w` whose
/// masses both exceed δ/2, the conditional gap of `v` is below ε/2.
pub fn neighborhood_ctp<M: Marginals + ?Sized>(est: &M, v: usize, cfg: &ReconConfig) -> VertexReport {
    let n = est.n();
    let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
    let (gate, cut) = (cfg.delta / 2.0, cfg.epsilon / 2.0);
    let mut tested = 0;
    for u_set in subsets_by_size(&others, 0, cfg.d) {
        tested += 1;
        let accepted = others.iter().filter(|w| !u_set.contains(w)).all(|&w| {
            let vars = sorted_union(&[&u_set, &[w, v]]);
            let view = ConditionalView::new(&est.marginal_table(&vars), v);
            let pos = view.position(w).expect("w is conditioned on");
            let mut ok = true;
            view.for_each_gated_gap(pos, gate, |_, _, _, gap, _| {
                ok = gap < cut;
                ok
            });
            ok
        });
        if accepted {
            return VertexReport { neighborhood: u_set, candidates_tested: tested, candidates_accepted: 1, ..Default::default() };
        }
    }
    log::debug!("no candidate neighborhood accepted for vertex {v}");
    VertexReport { candidates_tested: tested, failed: true, ..Default::default() }
}
