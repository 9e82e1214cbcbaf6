//! Closed-form lower bounds on the non-degeneracy constants.

use serde::Serialize;

use crate::error::{MrfError, Result};
use crate::model::Model;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionBounds {
    pub epsilon_lb: f64,
    pub delta_lb: f64,
}

/// Which expression to use for the Ising ε bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EpsilonForm {
    /// `tanh(2c) / (2e^{2C} + 2e^{-2C})`.
    #[default]
    Proof,
    /// `tanh(2c) / (2C² + 2C^{-2})`.
    Stated,
}

fn check_range(c: f64, big_c: f64) -> Result<()> {
    if !(c > 0.0 && c < big_c && big_c.is_finite()) {
        return Err(MrfError::InvalidConfig(format!("need 0 < c < C, got c={c}, C={big_c}")));
    }
    Ok(())
}

fn delta_lb(big_c: f64, d: usize) -> f64 {
    (-4.0 * d as f64 * big_c).exp() / 4f64.powi(d as i32)
}

/// Bounds for Ising models with `c < |β_ij| < C` on graphs of degree at most `d`.
pub fn ising_condition_bounds(c: f64, big_c: f64, d: usize, form: EpsilonForm) -> Result<ConditionBounds> {
    check_range(c, big_c)?;
    let denom = match form {
        EpsilonForm::Proof => 2.0 * (2.0 * big_c).exp() + 2.0 * (-2.0 * big_c).exp(),
        EpsilonForm::Stated => 2.0 * big_c * big_c + 2.0 / (big_c * big_c),
    };
    Ok(ConditionBounds { epsilon_lb: (2.0 * c).tanh() / denom, delta_lb: delta_lb(big_c, d) })
}

/// Bounds for the hidden-vertex condition on ferromagnetic Ising models.
pub fn hidden_condition_bounds(c: f64, big_c: f64, d: usize) -> Result<ConditionBounds> {
    check_range(c, big_c)?;
    if d < 3 {
        return Err(MrfError::InvalidConfig(format!("hidden-vertex bounds need d >= 3, got {d}")));
    }
    let denom = 32.0 * (2.0 * (d as f64 + 1.0) * big_c).exp() * (big_c * big_c + 1.0 / (big_c * big_c));
    Ok(ConditionBounds { epsilon_lb: (2.0 * c).tanh() / denom, delta_lb: delta_lb(big_c, d) })
}

/// True iff every pairwise potential has `‖Ψ‖_∞ ≤ K` and some four-point
/// combination `Ψ(a,b) + Ψ(a',b') - Ψ(a',b) - Ψ(a,b')` exceeds `gamma`.
/// Single-vertex potentials are ignored.
pub fn soft_constraint_feasible(model: &Model, k: f64, gamma: f64) -> Result<bool> {
    let a = model.alphabet();
    let mut ok = true;
    for p in model.potentials() {
        match p.clique.len() {
            1 => continue,
            2 => {}
            _ => return Err(MrfError::NonPairwisePotential(p.clique.clone())),
        }
        let t = |x: usize, y: usize| p.table[x * a + y];
        if p.table.iter().any(|v| v.abs() > k) {
            ok = false;
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        for x in 0..a {
            for y in 0..a {
                for x2 in 0..a {
                    for y2 in 0..a {
                        best = best.max(t(x, y) + t(x2, y2) - t(x2, y) - t(x, y2));
                    }
                }
            }
        }
        ok &= best > gamma;
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{new_ising, Potential};

    #[test]
    fn ising_bounds_instance() {
        let b = ising_condition_bounds(0.5, 1.0, 2, EpsilonForm::Proof).unwrap();
        let e2 = 1f64.exp().powi(2);
        assert!((b.epsilon_lb - 1f64.tanh() / (2.0 * e2 + 2.0 / e2)).abs() < 1e-15);
        assert!((b.epsilon_lb - 0.05061).abs() < 1e-5);
        assert!((b.delta_lb - 2.0966e-5).abs() < 1e-9);
        let s = ising_condition_bounds(0.5, 1.0, 2, EpsilonForm::Stated).unwrap();
        assert!((s.epsilon_lb - 1f64.tanh() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn ising_bounds_vanish_with_c() {
        let b = ising_condition_bounds(1e-9, 1.0, 2, EpsilonForm::Proof).unwrap();
        assert!(b.epsilon_lb < 1e-9);
        assert!(ising_condition_bounds(0.0, 1.0, 2, EpsilonForm::Proof).is_err());
        assert!(ising_condition_bounds(1.0, 0.5, 2, EpsilonForm::Proof).is_err());
    }

    #[test]
    fn hidden_bounds_instance_and_monotonicity() {
        let b = hidden_condition_bounds(0.5, 1.0, 3).unwrap();
        assert!((b.epsilon_lb - 3.99e-6).abs() < 1e-8);
        assert!((b.delta_lb - 9.60e-8).abs() < 1e-10);
        let bigger_c = hidden_condition_bounds(0.5, 1.2, 3).unwrap();
        let bigger_d = hidden_condition_bounds(0.5, 1.0, 4).unwrap();
        assert!(bigger_c.epsilon_lb < b.epsilon_lb && bigger_d.epsilon_lb < b.epsilon_lb);
        assert!(hidden_condition_bounds(0.5, 1.0, 2).is_err());
    }

    #[test]
    fn soft_constraints() {
        let ising = new_ising(2, &[(0, 1, 1.0)]).unwrap();
        assert!(soft_constraint_feasible(&ising, 1.0, 3.0).unwrap());
        assert!(!soft_constraint_feasible(&ising, 1.0, 4.0).unwrap());
        assert!(!soft_constraint_feasible(&ising, 0.5, 1.0).unwrap());
        let zero = new_ising(2, &[(0, 1, 0.0)]).unwrap();
        assert!(!soft_constraint_feasible(&zero, 1.0, 1e-9).unwrap());
        let triple = Model::new(3, 2, vec![Potential::new(vec![0, 1, 2], vec![0.0; 8])]).unwrap();
        assert!(matches!(soft_constraint_feasible(&triple, 1.0, 1.0), Err(MrfError::NonPairwisePotential(_))));
    }
}
