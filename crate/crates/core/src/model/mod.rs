//! Graphs and clique-factorized Markov random fields.
//!
//! A [`Model`] assigns to every state `x ∈ {0..A}^n` the unnormalized weight
//! `exp(Σ_a Ψ_a(x_a))`, one term per [`Potential`]. Tables are indexed in
//! mixed radix with the first clique vertex most significant.

mod graph;
mod io;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use graph::{random_bounded_graph, Graph};
pub use io::ModelFile;

use crate::error::{MrfError, Result};

/// Spin value of an Ising symbol: `0 ↦ +1`, `1 ↦ -1`.
#[inline]
pub fn spin(symbol: u8) -> f64 {
    if symbol == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Mixed-radix index of `assignment` (first entry most significant).
#[inline]
pub fn assignment_index(assignment: &[u8], alphabet: usize) -> usize {
    assignment.iter().fold(0, |acc, &x| acc * alphabet + x as usize)
}

/// Inverse of [`assignment_index`] for an assignment of length `len`.
pub fn index_assignment(mut index: usize, len: usize, alphabet: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % alphabet) as u8;
        index /= alphabet;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub clique: Vec<usize>,
    pub table: Vec<f64>,
}

impl Potential {
    pub fn new(clique: Vec<usize>, table: Vec<f64>) -> Self {
        Potential { clique, table }
    }

    /// `Ψ(x_u, x_v) = β·s(x_u)·s(x_v)`.
    pub fn ising(u: usize, v: usize, beta: f64) -> Self {
        let table = (0..4u8).map(|i| beta * spin(i >> 1) * spin(i & 1)).collect();
        Potential { clique: vec![u, v], table }
    }

    pub fn value(&self, state: &[u8], alphabet: usize) -> f64 {
        let idx = self.clique.iter().fold(0, |acc, &v| acc * alphabet + state[v] as usize);
        self.table[idx]
    }

    pub fn has_hard_constraint(&self) -> bool {
        self.table.iter().any(|&t| t == f64::NEG_INFINITY)
    }

    fn check(&self, n: usize, alphabet: usize) -> Result<()> {
        let fail = |reason: String| MrfError::InvalidPotential { clique: self.clique.clone(), reason };
        if self.clique.is_empty() {
            return Err(fail("empty clique".into()));
        }
        for (i, &v) in self.clique.iter().enumerate() {
            if v >= n {
                return Err(fail(format!("vertex {v} out of range")));
            }
            if self.clique[..i].contains(&v) {
                return Err(fail(format!("vertex {v} repeated")));
            }
        }
        let expected = alphabet.checked_pow(self.clique.len() as u32).ok_or_else(|| fail("table too large".into()))?;
        if self.table.len() != expected {
            return Err(fail(format!("table has {} entries, expected {expected}", self.table.len())));
        }
        if self.table.iter().any(|t| t.is_nan() || *t == f64::INFINITY) {
            return Err(fail("table entries must be finite or -inf".into()));
        }
        Ok(())
    }
}

/// An invariant violation reported by [`Model::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NotAClique { potential: usize, clique: Vec<usize> },
    UncoveredEdge(usize, usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotAClique { clique, .. } => {
                let list: Vec<String> = clique.iter().map(ToString::to_string).collect();
                write!(f, "potential clique not in graph: ({})", list.join(","))
            }
            Violation::UncoveredEdge(u, v) => write!(f, "uncovered edge: ({u},{v})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    graph: Graph,
    alphabet: usize,
    potentials: Vec<Potential>,
}

impl Model {
    /// Builds a model whose graph is the union of the potentials' cliques.
    pub fn new(n: usize, alphabet: usize, potentials: Vec<Potential>) -> Result<Self> {
        let mut graph = Graph::empty(n);
        for p in &potentials {
            p.check(n, alphabet)?;
            for (i, &u) in p.clique.iter().enumerate() {
                for &v in &p.clique[i + 1..] {
                    if !graph.has_edge(u, v) {
                        graph.add_edge(u, v)?;
                    }
                }
            }
        }
        Model::with_graph(graph, alphabet, potentials)
    }

    /// Builds a model over an explicit graph. Structural checks (ranges, table
    /// sizes) are enforced here; graph consistency is reported by [`Model::validate`].
    pub fn with_graph(graph: Graph, alphabet: usize, potentials: Vec<Potential>) -> Result<Self> {
        if !(2..=256).contains(&alphabet) {
            return Err(MrfError::InvalidAlphabet(alphabet));
        }
        for p in &potentials {
            p.check(graph.n(), alphabet)?;
        }
        Ok(Model { graph, alphabet, potentials })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    /// `Σ_a Ψ_a(x_a)`; `-inf` for forbidden states.
    pub fn log_weight(&self, state: &[u8]) -> f64 {
        self.potentials.iter().map(|p| p.value(state, self.alphabet)).sum()
    }

    /// For each vertex, the indices of the potentials whose clique contains it.
    pub fn potentials_by_vertex(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n()];
        for (i, p) in self.potentials.iter().enumerate() {
            for &v in &p.clique {
                out[v].push(i);
            }
        }
        out
    }

    pub fn has_hard_constraints(&self) -> bool {
        self.potentials.iter().any(Potential::has_hard_constraint)
    }

    /// Ising couplings `(u, v, β)` if every potential is an exact Ising pair table.
    pub fn ising_couplings(&self) -> Option<Vec<(usize, usize, f64)>> {
        if self.alphabet != 2 {
            return None;
        }
        self.potentials
            .iter()
            .map(|p| {
                if p.clique.len() != 2 {
                    return None;
                }
                let beta = p.table[0];
                (Potential::ising(p.clique[0], p.clique[1], beta).table == p.table).then_some((
                    p.clique[0],
                    p.clique[1],
                    beta,
                ))
            })
            .collect()
    }

    /// Lists invariant violations; empty iff the model is well formed.
    ///
    /// Hard constraints are legal but logged as a warning, since the
    /// non-degeneracy conditions used by reconstruction can fail for them.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, p) in self.potentials.iter().enumerate() {
            if !self.graph.is_clique(&p.clique) {
                out.push(Violation::NotAClique { potential: i, clique: p.clique.clone() });
            }
        }
        for (u, v) in self.graph.edges() {
            let covered = self.potentials.iter().any(|p| p.clique.len() >= 2 && p.clique.contains(&u) && p.clique.contains(&v));
            if !covered {
                out.push(Violation::UncoveredEdge(u, v));
            }
        }
        if self.has_hard_constraints() {
            log::warn!("model has hard constraints (-inf potentials); reconstruction guarantees may not apply");
        }
        out
    }
}

/// Ising model without external field on `n` spins.
pub fn new_ising(n: usize, couplings: &[(usize, usize, f64)]) -> Result<Model> {
    let edges: Vec<_> = couplings.iter().map(|&(u, v, _)| (u, v)).collect();
    let graph = Graph::from_edges(n, &edges)?;
    let potentials = couplings.iter().map(|&(u, v, b)| Potential::ising(u, v, b)).collect();
    Model::with_graph(graph, 2, potentials)
}

/// Ising model on `graph` with the same coupling on every edge.
pub fn ising_on_graph(graph: &Graph, beta: f64) -> Model {
    let couplings: Vec<_> = graph.edges().into_iter().map(|(u, v)| (u, v, beta)).collect();
    new_ising(graph.n(), &couplings).expect("graph edges are valid couplings")
}

/// Ising model on `random_bounded_graph(n, d, seed)` with coupling magnitudes
/// uniform in `[beta_min, beta_max]`; signs are uniform unless `ferromagnetic`.
pub fn random_ising(n: usize, d: usize, beta_min: f64, beta_max: f64, ferromagnetic: bool, seed: u64) -> Model {
    use rand::{Rng, SeedableRng};
    let graph = random_bounded_graph(n, d, seed);
    // offset so couplings are not correlated with the edge shuffle
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let couplings: Vec<_> = graph
        .edges()
        .into_iter()
        .map(|(u, v)| {
            let magnitude = if beta_max > beta_min { rng.gen_range(beta_min..beta_max) } else { beta_min };
            let sign = if ferromagnetic || rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (u, v, sign * magnitude)
        })
        .collect();
    new_ising(n, &couplings).expect("random graph edges are valid couplings")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ising_pair_table() {
        let m = new_ising(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(m.alphabet(), 2);
        assert_eq!(m.graph().edges(), vec![(0, 1)]);
        assert_eq!(m.potentials()[0].table, vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(m.ising_couplings(), Some(vec![(0, 1, 1.0)]));
    }

    #[test]
    fn empty_ising_is_valid() {
        let m = new_ising(3, &[]).unwrap();
        assert_eq!(m.graph().edge_count(), 0);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn ising_errors() {
        assert!(matches!(new_ising(3, &[(0, 1, 1.0), (1, 0, 0.5)]), Err(MrfError::DuplicateEdge(0, 1))));
        assert!(matches!(new_ising(3, &[(0, 3, 1.0)]), Err(MrfError::VertexOutOfRange { .. })));
    }

    #[test]
    fn validate_chain_is_clean() {
        let m = new_ising(3, &[(0, 1, 0.8), (1, 2, 0.8)]).unwrap();
        assert!(m.validate().is_empty());
    }

    #[test]
    fn validate_reports_non_clique_potential() {
        let path = Graph::path(3);
        let potentials = vec![Potential::ising(0, 1, 1.0), Potential::ising(1, 2, 1.0), Potential::ising(0, 2, 1.0)];
        let m = Model::with_graph(path, 2, potentials).unwrap();
        let msgs: Vec<String> = m.validate().iter().map(ToString::to_string).collect();
        assert_eq!(msgs, vec!["potential clique not in graph: (0,2)"]);
    }

    #[test]
    fn validate_reports_uncovered_edge() {
        let m = Model::with_graph(Graph::path(3), 2, vec![Potential::ising(0, 1, 1.0)]).unwrap();
        assert_eq!(m.validate(), vec![Violation::UncoveredEdge(1, 2)]);
        assert!(m.validate()[0].to_string().starts_with("uncovered edge"));
    }

    #[test]
    fn structural_errors_rejected() {
        assert!(matches!(Model::new(2, 1, vec![]), Err(MrfError::InvalidAlphabet(1))));
        let short = Potential::new(vec![0, 1], vec![0.0; 3]);
        assert!(matches!(Model::new(2, 2, vec![short]), Err(MrfError::InvalidPotential { .. })));
        let repeated = Potential::new(vec![0, 0], vec![0.0; 4]);
        assert!(Model::new(2, 2, vec![repeated]).is_err());
    }

    #[test]
    fn random_ising_respects_ranges() {
        let m = random_ising(8, 3, 0.3, 1.0, false, 5);
        assert!(m.graph().max_degree() <= 3);
        for (_, _, b) in m.ising_couplings().unwrap() {
            assert!((0.3..1.0).contains(&b.abs()));
        }
        assert_eq!(m, random_ising(8, 3, 0.3, 1.0, false, 5));
        let ferro = random_ising(8, 3, 0.3, 1.0, true, 5);
        assert!(ferro.ising_couplings().unwrap().iter().all(|c| c.2 > 0.0));
    }

    #[test]
    fn assignment_index_round_trip() {
        assert_eq!(assignment_index(&[1, 0, 2], 3), 9 + 2);
        assert_eq!(index_assignment(11, 3, 3), vec![1, 0, 2]);
    }
}
