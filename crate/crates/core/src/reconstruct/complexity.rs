//! Sample-size requirements and information-theoretic lower bounds. All
//! logarithms are natural.

use serde::Serialize;

use super::ReconConfig;
use crate::error::{MrfError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleBound {
    pub samples: u64,
    /// Upper bound on the probability that reconstruction fails with this many samples.
    pub failure_probability: f64,
}

/// `ceil((81·m/(ε²δ⁴·2d) + C₁)·d·ln n)` with failure bound `2A^m/n^{C₁}`.
fn required(cfg: &ReconConfig, n: usize, alphabet: usize, m: usize) -> Result<SampleBound> {
    cfg.validate()?;
    let constant = 81.0 / (cfg.epsilon.powi(2) * cfg.delta.powi(4));
    required_samples_calibrated(constant, cfg, n, alphabet, m)
}

fn check(cfg: &ReconConfig, n: usize) -> Result<()> {
    if n < 2 {
        return Err(MrfError::InvalidConfig(format!("need at least 2 vertices, got {n}")));
    }
    if cfg.d == 0 {
        return Err(MrfError::InvalidConfig("degree bound must be at least 1".into()));
    }
    Ok(())
}

/// Samples sufficient for the conditional two-point algorithm.
pub fn required_samples_thm2(cfg: &ReconConfig, n: usize, alphabet: usize) -> Result<SampleBound> {
    required(cfg, n, alphabet, cfg.d + 2)
}

/// Samples sufficient for the score-based algorithm.
pub fn required_samples_thm3(cfg: &ReconConfig, n: usize, alphabet: usize) -> Result<SampleBound> {
    required(cfg, n, alphabet, 2 * cfg.d + 1)
}

/// The sample formula with `81/(ε²δ⁴)` replaced by `constant`; `m` is the
/// largest query size (`d + 2` or `2d + 1`).
pub fn required_samples_calibrated(constant: f64, cfg: &ReconConfig, n: usize, alphabet: usize, m: usize) -> Result<SampleBound> {
    check(cfg, n)?;
    let d = cfg.d as f64;
    let ln_n = (n as f64).ln();
    let k = ((constant * m as f64 / (2.0 * d) + cfg.c1) * d * ln_n).ceil();
    let failure = 2.0 * (alphabet as f64).powi(m as i32) / (n as f64).powf(cfg.c1);
    Ok(SampleBound { samples: k as u64, failure_probability: failure.min(1.0) })
}

/// The constant that makes the sample formula return `k`.
pub fn calibrated_constant(k: u64, cfg: &ReconConfig, n: usize, m: usize) -> Result<f64> {
    check(cfg, n)?;
    let d = cfg.d as f64;
    let per = k as f64 / (d * (n as f64).ln()) - cfg.c1;
    Ok((per * 2.0 * d / m as f64).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountBound {
    /// Lower bound on the log of the number of graphs with max degree `d`.
    pub log_count: f64,
    /// False when `n` is too small for the construction; `log_count` is then 0.
    pub valid: bool,
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `(m/4)·(ln C(m/2, d) - ln d!)` with `m = n` rounded down to even, valid for `m ≥ 2d + 4`.
pub fn graph_count_lower_bound(n: usize, d: usize) -> CountBound {
    let m = n - n % 2;
    if m < 2 * d + 4 {
        return CountBound { log_count: 0.0, valid: false };
    }
    let ln_fact: f64 = (1..=d).map(|i| (i as f64).ln()).sum();
    let value = m as f64 / 4.0 * (ln_binomial(m / 2, d) - ln_fact);
    CountBound { log_count: value.max(0.0), valid: true }
}

/// `max(0, 1 - A^{nk}/|G|)`: every estimator errs at least this often on some graph.
pub fn error_lower_bound(n: usize, d: usize, alphabet: usize, k: u64) -> f64 {
    let exponent = n as f64 * k as f64 * (alphabet as f64).ln() - graph_count_lower_bound(n, d).log_count;
    (1.0 - exponent.exp()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize, eps: f64, delta: f64) -> ReconConfig {
        ReconConfig::new(d, eps, delta)
    }

    #[test]
    fn pairwise_sample_count_instance() {
        let b = required_samples_thm2(&cfg(3, 0.1, 0.1), 100, 2).unwrap();
        let expected = ((81.0 * 5.0 / (0.01 * 1e-4 * 6.0) + 1.0) * 3.0 * 100f64.ln()).ceil();
        assert_eq!(b.samples, expected as u64);
        assert!((b.samples as f64 / 9.326e8 - 1.0).abs() < 1e-3);
        assert!((b.failure_probability - 2.0 * 32.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn score_sample_count_instance() {
        let b = required_samples_thm3(&cfg(1, 0.1, 0.1), 100, 2).unwrap();
        // 81·3/(1e-6·2) = 1.215e8
        let expected = ((1.215e8 + 1.0) * 100f64.ln()).ceil();
        assert_eq!(b.samples, expected as u64);
        assert!((b.samples as f64 / 5.5953e8 - 1.0).abs() < 1e-4);
        assert_eq!(b.samples, required_samples_thm2(&cfg(1, 0.1, 0.1), 100, 2).unwrap().samples);
    }

    #[test]
    fn monotonicity() {
        let base = required_samples_thm2(&cfg(2, 0.2, 0.2), 50, 2).unwrap().samples;
        assert!(required_samples_thm2(&cfg(2, 0.3, 0.2), 50, 2).unwrap().samples < base);
        assert!(required_samples_thm2(&cfg(2, 0.2, 0.3), 50, 2).unwrap().samples < base);
        for d in 1..5 {
            let c = cfg(d, 0.2, 0.2);
            assert!(required_samples_thm3(&c, 50, 2).unwrap().samples >= required_samples_thm2(&c, 50, 2).unwrap().samples);
        }
        assert!(required_samples_thm2(&cfg(0, 0.2, 0.2), 50, 2).is_err());
        assert!(required_samples_thm2(&cfg(1, 0.2, 0.2), 1, 2).is_err());
    }

    #[test]
    fn calibration_round_trip() {
        let c = cfg(2, 0.3, 0.2);
        let k = required_samples_calibrated(500.0, &c, 16, 2, 4).unwrap().samples;
        let back = calibrated_constant(k, &c, 16, 4).unwrap();
        assert!((back - 500.0).abs() / 500.0 < 1e-3);
    }

    #[test]
    fn count_bound_instances() {
        let b = graph_count_lower_bound(8, 2);
        assert!(b.valid);
        assert!((b.log_count - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert_eq!(graph_count_lower_bound(9, 2), b);
        assert!(!graph_count_lower_bound(4, 1).valid);
        assert_eq!(graph_count_lower_bound(4, 1).log_count, 0.0);
    }

    #[test]
    fn error_bound_instances() {
        assert!((error_lower_bound(8, 2, 2, 0) - (1.0 - (-2.0 * 3f64.ln()).exp())).abs() < 1e-12);
        assert!((error_lower_bound(8, 2, 2, 0) - 0.889).abs() < 1e-3);
        assert_eq!(error_lower_bound(8, 2, 2, 1_000_000), 0.0);
        assert_eq!(error_lower_bound(8, 2, 2, 1), 0.0);
    }
}
