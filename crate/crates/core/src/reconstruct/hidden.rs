use serde::Serialize;

use crate::error::{MrfError, Result};
use crate::model::Graph;
use crate::table::subsets_by_size;

/// Overlap resolution gives up beyond this many candidate cliques.
const MAX_CANDIDATE_CLIQUES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HiddenRecovery {
    #[serde(serialize_with = "serialize_edges")]
    pub graph: Graph,
    /// Observed vertices adjacent to each added vertex; added vertex `j` has index `n + j`.
    pub hidden: Vec<Vec<usize>>,
    /// True when the maximal cliques overlapped and a disjoint subfamily had to be chosen.
    pub resolved_overlap: bool,
}

fn serialize_edges<S: serde::Serializer>(g: &Graph, s: S) -> std::result::Result<S::Ok, S::Error> {
    g.edges().serialize(s)
}

fn maximal_cliques(g: &Graph) -> Vec<Vec<usize>> {
    let pg = g.to_petgraph();
    let mut out: Vec<Vec<usize>> = petgraph::algo::maximal_cliques(&pg)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            c.sort_unstable();
            c
        })
        .filter(|c| c.len() >= 3)
        .collect();
    out.sort();
    out
}

fn contract(g: &Graph, cliques: &[Vec<usize>]) -> Graph {
    let mut out = g.clone();
    for clique in cliques {
        for (i, &u) in clique.iter().enumerate() {
            for &v in &clique[i + 1..] {
                out.remove_edge(u, v);
            }
        }
        let h = out.add_vertex();
        for &u in clique {
            out.add_edge(u, h).expect("fresh vertex has no edges");
        }
    }
    out
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| !b.contains(x))
}

fn without_clique_edges(g: &Graph, cliques: &[&Vec<usize>]) -> Graph {
    let mut out = g.clone();
    for clique in cliques {
        for (i, &u) in clique.iter().enumerate() {
            for &v in &clique[i + 1..] {
                out.remove_edge(u, v);
            }
        }
    }
    out
}

/// Replaces every maximal clique of size at least 3 by a fresh vertex
/// adjacent to the clique's members, deleting the clique's internal edges.
///
/// A hidden vertex's neighbors form a clique in the observed graph, but edges
/// between those neighbors and their other neighbors can close extra
/// triangles, so maximal cliques may overlap. In that case the hidden cliques
/// are taken to be the family of pairwise-disjoint cliques (sizes 3 to
/// `dprime`, each inside some maximal clique) whose removal leaves no triangle
/// while deleting the fewest edges. No such family, or several tied ones, is
/// an error.
pub fn recover_hidden(gstar: &Graph, dprime: usize) -> Result<HiddenRecovery> {
    let maximal = maximal_cliques(gstar);
    let overlapping = maximal.iter().enumerate().any(|(i, a)| maximal[i + 1..].iter().any(|b| !disjoint(a, b)));
    if !overlapping {
        for c in maximal.iter().filter(|c| c.len() > dprime) {
            log::warn!("clique {c:?} is larger than the degree bound {dprime}");
        }
        return Ok(HiddenRecovery { graph: contract(gstar, &maximal), hidden: maximal, resolved_overlap: false });
    }

    let mut candidates: Vec<Vec<usize>> = maximal.iter().flat_map(|c| subsets_by_size(c, 3, dprime.min(c.len()))).collect();
    candidates.sort();
    candidates.dedup();
    if candidates.len() > MAX_CANDIDATE_CLIQUES {
        return Err(MrfError::HiddenRecovery(format!(
            "{} overlapping candidate cliques; too many to resolve",
            candidates.len()
        )));
    }

    struct Search<'a> {
        g: &'a Graph,
        candidates: &'a [Vec<usize>],
        best: Option<(usize, Vec<Vec<usize>>)>,
        ties: usize,
    }
    impl Search<'_> {
        fn visit(&mut self, start: usize, chosen: &mut Vec<usize>, removed: usize) {
            if let Some((b, _)) = &self.best {
                if removed > *b {
                    return;
                }
            }
            if !chosen.is_empty() {
                let family: Vec<&Vec<usize>> = chosen.iter().map(|&i| &self.candidates[i]).collect();
                if !without_clique_edges(self.g, &family).has_triangle() {
                    match &self.best {
                        Some((b, _)) if *b == removed => self.ties += 1,
                        _ => {
                            self.best = Some((removed, family.into_iter().cloned().collect()));
                            self.ties = 0;
                        }
                    }
                    // adding cliques only removes more edges
                    return;
                }
            }
            for i in start..self.candidates.len() {
                let c = &self.candidates[i];
                if chosen.iter().all(|&j| disjoint(&self.candidates[j], c)) {
                    chosen.push(i);
                    self.visit(i + 1, chosen, removed + c.len() * (c.len() - 1) / 2);
                    chosen.pop();
                }
            }
        }
    }
    let mut search = Search { g: gstar, candidates: &candidates, best: None, ties: 0 };
    search.visit(0, &mut Vec::new(), 0);
    match search.best {
        None => Err(MrfError::HiddenRecovery(format!(
            "overlapping maximal cliques {maximal:?} admit no disjoint triangle cover"
        ))),
        Some(_) if search.ties > 0 => Err(MrfError::HiddenRecovery(format!(
            "overlapping maximal cliques {maximal:?} admit several equally small disjoint triangle covers"
        ))),
        Some((_, family)) => Ok(HiddenRecovery { graph: contract(gstar, &family), hidden: family, resolved_overlap: true }),
    }
}

/// The graph seen on the observed vertices when the vertices in `hidden` are
/// unobserved: the induced subgraph on the rest (relabelled in order) plus a
/// clique on the neighbors of each hidden vertex. Returns the graph and the
/// kept vertex list.
pub fn observed_graph(g: &Graph, hidden: &[usize]) -> Result<(Graph, Vec<usize>)> {
    if let Some(&h) = hidden.iter().find(|&&h| h >= g.n()) {
        return Err(MrfError::VertexOutOfRange { vertex: h, n: g.n() });
    }
    let keep: Vec<usize> = (0..g.n()).filter(|v| !hidden.contains(v)).collect();
    let mut out = g.induced(&keep);
    for &h in hidden {
        let nbrs: Vec<usize> = g.neighbors(h).iter().filter_map(|u| keep.binary_search(u).ok()).collect();
        for (i, &u) in nbrs.iter().enumerate() {
            for &v in &nbrs[i + 1..] {
                if !out.has_edge(u, v) {
                    out.add_edge(u, v)?;
                }
            }
        }
    }
    Ok((out, keep))
}
