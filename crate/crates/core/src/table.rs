//! Marginal tables and the probability-provider interface shared by the exact
//! oracle and the empirical estimator.

use std::sync::Arc;

use itertools::Itertools;

use crate::error::{MrfError, Result};

/// Joint probabilities of a sorted vertex set, mixed-radix indexed with the
/// smallest vertex most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTable {
    vars: Vec<usize>,
    alphabet: usize,
    probs: Vec<f64>,
}

impl MarginalTable {
    pub fn new(vars: Vec<usize>, alphabet: usize, probs: Vec<f64>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(probs.len(), alphabet.pow(vars.len() as u32));
        MarginalTable { vars, alphabet, probs }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    /// `A^(len-1-pos)`: index offset of one unit in the digit at `pos`.
    pub fn stride(&self, pos: usize) -> usize {
        self.alphabet.pow((self.vars.len() - 1 - pos) as u32)
    }
}

/// Anything that can produce marginal tables over vertex subsets.
pub trait Marginals: Sync {
    fn n(&self) -> usize;

    fn alphabet(&self) -> usize;

    /// Table over `vars`, which must be sorted and distinct.
    fn marginal_table(&self, vars: &[usize]) -> Arc<MarginalTable>;
}

fn check_query(n: usize, alphabet: usize, vars: &[usize], assignment: &[u8]) -> Result<()> {
    if vars.len() != assignment.len() {
        return Err(MrfError::InvalidQuery(format!(
            "{} vertices but {} symbols",
            vars.len(),
            assignment.len()
        )));
    }
    for (i, &v) in vars.iter().enumerate() {
        if v >= n {
            return Err(MrfError::VertexOutOfRange { vertex: v, n });
        }
        if vars[..i].contains(&v) {
            return Err(MrfError::InvalidQuery(format!("vertex {v} repeated")));
        }
    }
    if let Some(&x) = assignment.iter().find(|&&x| x as usize >= alphabet) {
        return Err(MrfError::InvalidQuery(format!("symbol {x} outside alphabet of size {alphabet}")));
    }
    Ok(())
}

/// `P(X(U) = x_U)`.
pub fn prob<M: Marginals + ?Sized>(m: &M, vars: &[usize], assignment: &[u8]) -> Result<f64> {
    check_query(m.n(), m.alphabet(), vars, assignment)?;
    let mut pairs: Vec<(usize, u8)> = vars.iter().copied().zip(assignment.iter().copied()).collect();
    pairs.sort_unstable();
    let sorted: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let table = m.marginal_table(&sorted);
    let idx = pairs.iter().fold(0, |acc, p| acc * m.alphabet() + p.1 as usize);
    Ok(table.probs[idx])
}

/// `joint / mass`, refusing to condition on a zero-probability event.
#[inline]
pub fn conditional_ratio(joint: f64, mass: f64) -> Result<f64> {
    if mass > 0.0 {
        Ok(joint / mass)
    } else {
        Err(MrfError::ZeroProbabilityConditioning)
    }
}

/// `P(X(v) = x_v | X(U) = x_U)`.
pub fn cond_prob<M: Marginals + ?Sized>(m: &M, v: usize, x_v: u8, vars: &[usize], assignment: &[u8]) -> Result<f64> {
    if vars.contains(&v) {
        return Err(MrfError::InvalidQuery(format!("target vertex {v} is in the conditioning set")));
    }
    let mass = prob(m, vars, assignment)?;
    let mut joint_vars = vars.to_vec();
    joint_vars.push(v);
    let mut joint_assignment = assignment.to_vec();
    joint_assignment.push(x_v);
    let joint = prob(m, &joint_vars, &joint_assignment)?;
    conditional_ratio(joint, mass)
}

/// `d_C(u, v) = Σ |P(x_u, x_v) - P(x_u) P(x_v)|`.
pub fn correlation_distance<M: Marginals + ?Sized>(m: &M, u: usize, v: usize) -> Result<f64> {
    if u == v {
        return Err(MrfError::InvalidQuery("correlation of a vertex with itself".into()));
    }
    for x in [u, v] {
        if x >= m.n() {
            return Err(MrfError::VertexOutOfRange { vertex: x, n: m.n() });
        }
    }
    let (a, b) = (u.min(v), u.max(v));
    let table = m.marginal_table(&[a, b]);
    Ok(pair_correlation(table.probs(), m.alphabet()))
}

/// `d_C` of a row-major `A × A` joint table.
pub fn pair_correlation(joint: &[f64], alphabet: usize) -> f64 {
    let mut row = vec![0.0; alphabet];
    let mut col = vec![0.0; alphabet];
    for x in 0..alphabet {
        for y in 0..alphabet {
            let p = joint[x * alphabet + y];
            row[x] += p;
            col[y] += p;
        }
    }
    let mut total = 0.0;
    for x in 0..alphabet {
        for y in 0..alphabet {
            total += (joint[x * alphabet + y] - row[x] * col[y]).abs();
        }
    }
    total
}

/// A table split into a target vertex and its conditioning set: conditioning
/// masses and conditional distributions of the target.
#[derive(Clone, Debug)]
pub struct ConditionalView {
    cond_vars: Vec<usize>,
    alphabet: usize,
    mass: Vec<f64>,
    cond: Vec<f64>,
}

impl ConditionalView {
    pub fn new(table: &MarginalTable, target: usize) -> Self {
        let a = table.alphabet;
        let pos = table.position(target).expect("target must be in the table");
        let stride = table.stride(pos);
        let cond_vars: Vec<usize> = table.vars.iter().copied().filter(|&v| v != target).collect();
        let cells = table.probs.len() / a;
        let mut mass = vec![0.0; cells];
        let mut joint = vec![0.0; cells * a];
        for (t, &p) in table.probs.iter().enumerate() {
            let x = (t / stride) % a;
            let c = (t / (stride * a)) * stride + t % stride;
            joint[c * a + x] = p;
        }
        for c in 0..cells {
            mass[c] = joint[c * a..(c + 1) * a].iter().sum();
        }
        let cond = joint
            .chunks(a)
            .zip(&mass)
            .flat_map(|(row, &m)| row.iter().map(move |&j| if m > 0.0 { j / m } else { 0.0 }))
            .collect();
        ConditionalView { cond_vars, alphabet: a, mass, cond }
    }

    pub fn cond_vars(&self) -> &[usize] {
        &self.cond_vars
    }

    pub fn cells(&self) -> usize {
        self.mass.len()
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.cond_vars.binary_search(&v).ok()
    }

    pub fn stride(&self, pos: usize) -> usize {
        self.alphabet.pow((self.cond_vars.len() - 1 - pos) as u32)
    }

    pub fn mass(&self, cell: usize) -> f64 {
        self.mass[cell]
    }

    pub fn cond(&self, cell: usize, x: usize) -> f64 {
        self.cond[cell * self.alphabet + x]
    }

    pub fn digit(&self, cell: usize, pos: usize) -> usize {
        (cell / self.stride(pos)) % self.alphabet
    }

    /// Visits every pair of conditioning cells that differ only at `pos`
    /// (`a < b` there), with both masses above `gate`, and every target symbol.
    /// The visitor gets `(cell_a, b, x, gap, min_mass)` and returns `false` to stop.
    pub fn for_each_gated_gap(&self, pos: usize, gate: f64, mut visit: impl FnMut(usize, usize, usize, f64, f64) -> bool) {
        let a_size = self.alphabet;
        let stride = self.stride(pos);
        for c1 in 0..self.cells() {
            let a = (c1 / stride) % a_size;
            let m1 = self.mass[c1];
            if m1 <= gate {
                continue;
            }
            for b in a + 1..a_size {
                let c2 = c1 + (b - a) * stride;
                let m2 = self.mass[c2];
                if m2 <= gate {
                    continue;
                }
                let mass = m1.min(m2);
                for x in 0..a_size {
                    let gap = (self.cond(c1, x) - self.cond(c2, x)).abs();
                    if !visit(c1, b, x, gap, mass) {
                        return;
                    }
                }
            }
        }
    }

    /// Largest gated gap at `pos` (0 when nothing passes the gate). Stops early
    /// once a gap exceeds `stop_above`.
    pub fn max_gated_gap(&self, pos: usize, gate: f64, stop_above: f64) -> f64 {
        let mut best = 0.0f64;
        self.for_each_gated_gap(pos, gate, |_, _, _, gap, _| {
            best = best.max(gap);
            best <= stop_above
        });
        best
    }
}

/// Sorted union of vertex lists.
pub fn sorted_union(parts: &[&[usize]]) -> Vec<usize> {
    let mut out: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// All subsets of `pool` with size in `min..=max`, ordered by size, then lexicographically.
pub fn subsets_by_size(pool: &[usize], min: usize, max: usize) -> Vec<Vec<usize>> {
    (min..=max.min(pool.len())).flat_map(|size| pool.iter().copied().combinations(size)).collect()
}
