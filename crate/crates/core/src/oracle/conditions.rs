//! Exhaustive witness searches for the non-degeneracy conditions.
//!
//! Each condition has the form "for every tuple there is an assignment whose
//! conditional gap exceeds ε while the conditioning masses exceed δ". Per
//! tuple we keep the Pareto frontier of achievable `(gap, mass)` pairs, then
//! report `epsilon_star` as the max-min gap over tuples and `delta_star` as
//! the max-min mass among witnesses reaching that gap. Every tuple therefore
//! has a witness with `gap ≥ epsilon_star` and `mass ≥ delta_star`.

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{Graph, Model};
use crate::table::{sorted_union, subsets_by_size, ConditionalView, Marginals};
use crate::error::Result;

use super::joint_distribution;

/// Gaps at or below this are treated as exact zeros from floating-point noise.
pub const GAP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// Target vertex of the conditional probabilities.
    pub v: usize,
    /// Hidden-vertex condition only: the vertex whose neighbors `v` and `w` are.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<usize>,
    #[serde(rename = "U")]
    pub u: Vec<usize>,
    /// The vertex whose symbol is switched between the two conditioning events.
    pub w: usize,
    #[serde(rename = "W")]
    pub w_set: Vec<usize>,
    /// `(vertex, symbol)` for the first conditioning event.
    pub assignment: Vec<(usize, u8)>,
    /// Symbol of `w` in the second conditioning event.
    pub alternative: u8,
    pub x_v: u8,
    pub gap: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub v: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<usize>,
    #[serde(rename = "U")]
    pub u: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[serde(rename = "W")]
    pub w_set: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub epsilon_star: f64,
    pub delta_star: f64,
    pub failures: Vec<Failure>,
    pub witnesses: Vec<Witness>,
}

impl ConditionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Non-dominated `(gap, mass)` points.
#[derive(Default)]
struct Frontier {
    points: Vec<Witness>,
}

impl Frontier {
    fn offer(&mut self, gap: f64, mass: f64, make: impl FnOnce() -> Witness) {
        if gap <= GAP_TOLERANCE || mass <= 0.0 {
            return;
        }
        if self.points.iter().any(|p| p.gap >= gap && p.mass >= mass) {
            return;
        }
        self.points.retain(|p| !(gap >= p.gap && mass >= p.mass));
        let mut w = make();
        w.gap = gap;
        w.mass = mass;
        self.points.push(w);
    }

    fn max_gap(&self) -> f64 {
        self.points.iter().map(|p| p.gap).fold(0.0, f64::max)
    }

    fn best_mass_with_gap(&self, eps: f64) -> Option<&Witness> {
        self.points.iter().filter(|p| p.gap >= eps).max_by(|a, b| a.mass.total_cmp(&b.mass))
    }
}

fn summarize(results: Vec<(Failure, Frontier)>) -> ConditionReport {
    if results.is_empty() {
        // vacuous: nothing to witness, every ε, δ ≤ 1 works
        return ConditionReport { holds: true, epsilon_star: 1.0, delta_star: 1.0, failures: vec![], witnesses: vec![] };
    }
    let mut failures = Vec::new();
    let mut frontiers = Vec::new();
    for (tuple, frontier) in results {
        if frontier.points.is_empty() {
            failures.push(tuple);
        } else {
            frontiers.push(frontier);
        }
    }
    if !failures.is_empty() {
        return ConditionReport { holds: false, epsilon_star: 0.0, delta_star: 0.0, failures, witnesses: vec![] };
    }
    let eps = frontiers.iter().map(Frontier::max_gap).fold(f64::INFINITY, f64::min);
    let witnesses: Vec<Witness> = frontiers
        .iter()
        .map(|f| f.best_mass_with_gap(eps).expect("every frontier reaches the minimum max-gap").clone())
        .collect();
    let delta = witnesses.iter().map(|w| w.mass).fold(f64::INFINITY, f64::min);
    ConditionReport { holds: eps > 0.0 && delta > 0.0, epsilon_star: eps, delta_star: delta, failures, witnesses }
}

fn decode(view: &ConditionalView, cell: usize, alphabet: usize) -> Vec<(usize, u8)> {
    let vars = view.cond_vars();
    let mut out = Vec::with_capacity(vars.len());
    let mut rem = cell;
    for &v in vars.iter().rev() {
        out.push((v, (rem % alphabet) as u8));
        rem /= alphabet;
    }
    out.reverse();
    out
}

/// Searches `view` (target `v`) for pairs differing at `w`, feeding the frontier.
fn scan_pairs(view: &ConditionalView, w: usize, alphabet: usize, frontier: &mut Frontier, template: &Witness) {
    let pos = view.position(w).expect("perturbed vertex is conditioned on");
    view.for_each_gated_gap(pos, 0.0, |c1, b, x, gap, mass| {
        frontier.offer(gap, mass, || Witness {
            assignment: decode(view, c1, alphabet),
            alternative: b as u8,
            x_v: x as u8,
            ..template.clone()
        });
        true
    });
}

/// Conditions (A)/(B) of the conditional two-point test: for every `v` and
/// every `U ⊆ V∖{v}` with `|U| ≤ d` and `N(v) ⊄ U`, some `w ∉ U ∪ {v}` and
/// assignment give `|P(x_v|x_U,x_w) - P(x_v|x_U,x_w')| > ε` with both
/// `P(x_U, x_w)` and `P(x_U, x_w')` above δ.
pub fn verify_thm2_conditions_on<M: Marginals>(m: &M, graph: &Graph, d: usize) -> ConditionReport {
    let n = m.n();
    let a = m.alphabet();
    let mut tuples = Vec::new();
    for v in 0..n {
        let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
        for u_set in subsets_by_size(&others, 0, d) {
            if !graph.neighbors(v).iter().all(|x| u_set.contains(x)) {
                tuples.push((v, u_set));
            }
        }
    }
    let results = tuples
        .into_par_iter()
        .map(|(v, u_set)| {
            let mut frontier = Frontier::default();
            for w in (0..n).filter(|&w| w != v && !u_set.contains(&w)) {
                let vars = sorted_union(&[&u_set, &[w, v]]);
                let view = ConditionalView::new(&m.marginal_table(&vars), v);
                let template = Witness {
                    v,
                    center: None,
                    u: u_set.clone(),
                    w,
                    w_set: vec![],
                    assignment: vec![],
                    alternative: 0,
                    x_v: 0,
                    gap: 0.0,
                    mass: 0.0,
                };
                scan_pairs(&view, w, a, &mut frontier, &template);
            }
            (Failure { v, center: None, u: u_set, w: None, w_set: vec![] }, frontier)
        })
        .collect();
    summarize(results)
}

/// Conditions (A)/(B) of the general test: for every `v`, neighbor `u_i` and
/// `W ⊆ V∖({v} ∪ N(v))` with `|W| ≤ d`, some assignment gives
/// `|P(x_v|x_N) - P(x_v|x_N^i)| > ε` with `P(x_N, x_W)` and `P(x_N^i, x_W)` above δ.
pub fn verify_thm3_conditions_on<M: Marginals>(m: &M, graph: &Graph, d: usize) -> ConditionReport {
    let n = m.n();
    let a = m.alphabet();
    let mut tuples = Vec::new();
    for v in 0..n {
        let nbrs: Vec<usize> = graph.neighbors(v).iter().copied().collect();
        if nbrs.is_empty() {
            continue;
        }
        let rest: Vec<usize> = (0..n).filter(|&u| u != v && !nbrs.contains(&u)).collect();
        for w_set in subsets_by_size(&rest, 0, d) {
            for &ui in &nbrs {
                tuples.push((v, nbrs.clone(), ui, w_set.clone()));
            }
        }
    }
    let results = tuples
        .into_par_iter()
        .map(|(v, nbrs, ui, w_set)| {
            let mut frontier = Frontier::default();
            let cond_view = ConditionalView::new(&m.marginal_table(&sorted_union(&[&nbrs, &[v]])), v);
            let mass_vars = sorted_union(&[&nbrs, &w_set]);
            let mass_table = m.marginal_table(&mass_vars);
            // index of (x_N cell, x_W cell) in the mass table
            let wn = a.pow(w_set.len() as u32);
            let mut index = vec![0usize; cond_view.cells() * wn];
            for (t, _) in mass_table.probs().iter().enumerate() {
                let (mut cn, mut cw) = (0, 0);
                for (p, var) in mass_vars.iter().enumerate() {
                    let digit = (t / mass_table.stride(p)) % a;
                    if nbrs.contains(var) {
                        cn = cn * a + digit;
                    } else {
                        cw = cw * a + digit;
                    }
                }
                index[cn * wn + cw] = t;
            }
            let pos = cond_view.position(ui).expect("u_i is a neighbor");
            let probs = mass_table.probs();
            cond_view.for_each_gated_gap(pos, 0.0, |c1, b, _, _, _| {
                let c2 = c1 + (b - cond_view.digit(c1, pos)) * cond_view.stride(pos);
                let (gap, x_best) = (0..a)
                    .map(|x| ((cond_view.cond(c1, x) - cond_view.cond(c2, x)).abs(), x))
                    .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best });
                let (mass, cw_best) = (0..wn)
                    .map(|cw| (probs[index[c1 * wn + cw]].min(probs[index[c2 * wn + cw]]), cw))
                    .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best });
                frontier.offer(gap, mass, || {
                    let mut assignment = decode(&cond_view, c1, a);
                    let mut rem = cw_best;
                    let mut xw = Vec::with_capacity(w_set.len());
                    for &wv in w_set.iter().rev() {
                        xw.push((wv, (rem % a) as u8));
                        rem /= a;
                    }
                    xw.reverse();
                    assignment.extend(xw);
                    assignment.sort_unstable();
                    Witness {
                        v,
                        center: None,
                        u: nbrs.clone(),
                        w: ui,
                        w_set: w_set.clone(),
                        assignment,
                        alternative: b as u8,
                        x_v: x_best as u8,
                        gap: 0.0,
                        mass: 0.0,
                    }
                });
                true
            });
            (Failure { v, center: None, u: nbrs, w: Some(ui), w_set }, frontier)
        })
        .collect();
    summarize(results)
}

/// Condition for recovering hidden vertices: for every `v`, distinct
/// `v1, v2 ∈ N(v)`, `U = N(v) ∪ N(v1) ∖ {v, v1, v2}` and
/// `W ⊆ V ∖ (N(v) ∪ N(v1))` with `|W| ≤ 2d`, some assignment gives
/// `|P(x_v1|x_W,x_U,x_v2) - P(x_v1|x_W,x_U,x_v2')| > ε` with both conditioning masses above δ.
pub fn verify_hidden_conditions_on<M: Marginals>(m: &M, graph: &Graph, d: usize) -> ConditionReport {
    let n = m.n();
    let a = m.alphabet();
    let mut tuples = Vec::new();
    for v in 0..n {
        let nv: Vec<usize> = graph.neighbors(v).iter().copied().collect();
        for &v1 in &nv {
            let nv1: Vec<usize> = graph.neighbors(v1).iter().copied().collect();
            let joint = sorted_union(&[&nv, &nv1]);
            let rest: Vec<usize> = (0..n).filter(|u| !joint.contains(u)).collect();
            for &v2 in nv.iter().filter(|&&x| x != v1) {
                let u_set: Vec<usize> = joint.iter().copied().filter(|&x| x != v && x != v1 && x != v2).collect();
                for w_set in subsets_by_size(&rest, 0, 2 * d) {
                    tuples.push((v, v1, v2, u_set.clone(), w_set));
                }
            }
        }
    }
    let results = tuples
        .into_par_iter()
        .map(|(v, v1, v2, u_set, w_set)| {
            let mut frontier = Frontier::default();
            let vars = sorted_union(&[&u_set, &w_set, &[v1, v2]]);
            let view = ConditionalView::new(&m.marginal_table(&vars), v1);
            let template = Witness {
                v: v1,
                center: Some(v),
                u: u_set.clone(),
                w: v2,
                w_set: w_set.clone(),
                assignment: vec![],
                alternative: 0,
                x_v: 0,
                gap: 0.0,
                mass: 0.0,
            };
            scan_pairs(&view, v2, a, &mut frontier, &template);
            (Failure { v: v1, center: Some(v), u: u_set, w: Some(v2), w_set }, frontier)
        })
        .collect();
    summarize(results)
}

pub fn verify_thm2_conditions(model: &Model, d: usize) -> Result<ConditionReport> {
    Ok(verify_thm2_conditions_on(&joint_distribution(model)?, model.graph(), d))
}

pub fn verify_thm3_conditions(model: &Model, d: usize) -> Result<ConditionReport> {
    Ok(verify_thm3_conditions_on(&joint_distribution(model)?, model.graph(), d))
}

pub fn verify_hidden_conditions(model: &Model, d: usize) -> Result<ConditionReport> {
    Ok(verify_hidden_conditions_on(&joint_distribution(model)?, model.graph(), d))
}
