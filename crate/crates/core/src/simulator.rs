//! Wealth recursion `V(k+1) = (1 + K.X(k)) V(k)` and the theory-vs-data experiments.

use std::io::Write;

use serde::Serialize;

use crate::distributions::{empirical_from_samples, standard_normal_noise, ModelSpec, SampleSet};
use crate::error::{KellyError, Result};
use crate::growth::{dot, ExtendedReal};
use crate::optimizer::{optimize_scalar, theoretical_kelly, OptimizerConfig};
use crate::sum::CompensatedSum;

/// Wealth after each bet, `V(0)` first. Ruin absorbs at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthPath {
    pub values: Vec<f64>,
    pub ruined: bool,
}

impl WealthPath {
    pub fn bets(&self) -> usize {
        self.values.len() - 1
    }

    /// `(1/N) log(V(N)/V(0))`; `NegInfinity` once ruined.
    pub fn realized_growth(&self) -> ExtendedReal {
        let n = self.bets();
        if self.ruined {
            return ExtendedReal::NegInfinity;
        }
        if n == 0 {
            return ExtendedReal::ZERO;
        }
        let v0 = self.values[0];
        let vn = self.values[n];
        ExtendedReal::Finite((vn / v0).ln() / n as f64)
    }
}

/// Runs the recursion over `returns`, a flat buffer of `k.len()`-dimensional
/// return vectors.
///
/// A multiplier of exactly 0 ruins the path; a negative one is a
/// [`KellyError::SurvivalViolated`] at that step.
pub fn wealth_path(returns: &[f64], k: &[f64], v0: f64) -> Result<WealthPath> {
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(KellyError::domain(format!("initial wealth must be positive, got {v0}")));
    }
    let d = k.len();
    if d == 0 || !returns.len().is_multiple_of(d) {
        return Err(KellyError::DimensionMismatch { expected: d, got: returns.len() });
    }
    let mut values = Vec::with_capacity(returns.len() / d + 1);
    values.push(v0);
    let mut v = v0;
    let mut ruined = false;
    for (step, x) in returns.chunks_exact(d).enumerate() {
        let kx = dot(k, x);
        if kx < -1.0 {
            return Err(KellyError::SurvivalViolated { step, multiplier: 1.0 + kx });
        }
        if kx == -1.0 || ruined {
            ruined = true;
            v = 0.0;
        } else {
            v *= 1.0 + kx;
        }
        values.push(v);
    }
    Ok(WealthPath { values, ruined })
}

/// `(1/N) sum log(1 + K.X(k))`, the per-bet log growth without forming the path.
pub fn mean_log_return(returns: &[f64], k: &[f64]) -> Result<ExtendedReal> {
    let d = k.len();
    if d == 0 || !returns.len().is_multiple_of(d) || returns.is_empty() {
        return Err(KellyError::DimensionMismatch { expected: d, got: returns.len() });
    }
    let mut acc = CompensatedSum::new();
    for x in returns.chunks_exact(d) {
        let kx = dot(k, x);
        if kx <= -1.0 {
            return Ok(ExtendedReal::NegInfinity);
        }
        acc.add(kx.ln_1p());
    }
    Ok(ExtendedReal::Finite(acc.total() / (returns.len() / d) as f64))
}

/// Theory-trusting vs data-trusting bettor facing the same future.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub spec: String,
    pub seed: u64,
    pub k_theory: f64,
    pub k_empirical: f64,
    pub m: usize,
    pub n_future: usize,
    pub realized_growth_theory: ExtendedReal,
    pub realized_growth_empirical: ExtendedReal,
    pub bad_sample_seen: bool,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Seed for the future-returns stream, distinct from the estimation stream.
fn future_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Estimates a fraction from `m` model draws, compares it with the model's own
/// Kelly fraction, and runs both on one shared sequence of `n_future` fresh
/// returns.
///
/// `bad_sample_seen` reports whether the toy model's loss atom `-x0` appeared
/// among the estimation samples; it is always false for other models.
pub fn run_comparison(
    spec: &ModelSpec,
    m: usize,
    n_future: usize,
    seed: u64,
    cfg: &OptimizerConfig,
) -> Result<ComparisonReport> {
    if m == 0 || n_future == 0 {
        return Err(KellyError::domain("m and n_future must be at least 1"));
    }
    let estimation = spec.sample(m, seed)?;
    let k_theory = theoretical_kelly(spec, cfg)?.k();
    let k_empirical = optimize_scalar(&empirical_from_samples(&estimation)?, cfg)?.k();
    let bad_sample_seen = match *spec {
        ModelSpec::ToyBernoulli { x0, .. } => estimation.flat_values().iter().any(|&x| x == -x0),
        _ => false,
    };

    let future = spec.sample(n_future, future_seed(seed))?;
    // A bettor whose multiplier reaches or passes 0 is bankrupt: -inf growth, not an error.
    let realized_growth_theory = mean_log_return(future.flat_values(), &[k_theory])?;
    let realized_growth_empirical = mean_log_return(future.flat_values(), &[k_empirical])?;

    Ok(ComparisonReport {
        spec: spec.to_string(),
        seed,
        k_theory,
        k_empirical,
        m,
        n_future,
        realized_growth_theory,
        realized_growth_empirical,
        bad_sample_seen,
    })
}

/// Inclusive grid `from, from + step, ..., to`.
pub fn mu_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() || to < from {
        return Err(KellyError::domain(format!("bad grid from {from} to {to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| from + i as f64 * step).collect())
}

/// Empirical Kelly fraction of `N(mu, sigma)` samples for each `mu`.
///
/// One noise vector `Z` is drawn from `seed` and shared across the grid
/// (samples are `mu + sigma Z`), so the curve reflects `mu` alone rather
/// than the luck of each draw's extremes.
pub fn sweep_kelly_vs_mu(
    mu_grid: &[f64],
    sigma: f64,
    m: usize,
    seed: u64,
    cfg: &OptimizerConfig,
) -> Result<Vec<(f64, f64)>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(KellyError::domain(format!("sigma must be positive, got {sigma}")));
    }
    if m == 0 {
        return Err(KellyError::domain("m must be at least 1"));
    }
    let noise = standard_normal_noise(m, seed);
    mu_grid
        .iter()
        .map(|&mu| {
            let samples = SampleSet::scalar(noise.iter().map(|z| mu + sigma * z).collect())?;
            let k = optimize_scalar(&empirical_from_samples(&samples)?, cfg)?.k();
            Ok((mu, k))
        })
        .collect()
}

/// Writes `mu,k_hat` rows with a header.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu", "k_hat"]).map_err(|e| KellyError::Io(e.to_string()))?;
    for (mu, k) in rows {
        w.write_record([mu.to_string(), k.to_string()]).map_err(|e| KellyError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{rng_from_seed, DiscreteDistribution};
    use crate::growth::feasible_interval;
    use crate::optimizer::coin_closed_form;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn recursion_arithmetic() {
        let p = wealth_path(&[1.0, 1.0], &[0.5], 1.0).unwrap();
        assert_eq!(p.values, vec![1.0, 1.5, 2.25]);
        assert!(!p.ruined);
        assert!((p.realized_growth().finite().unwrap() - 1.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn total_loss_ruins() {
        let p = wealth_path(&[-1.0], &[1.0], 1.0).unwrap();
        assert_eq!(p.values, vec![1.0, 0.0]);
        assert!(p.ruined);
        assert_eq!(p.realized_growth(), ExtendedReal::NegInfinity);
        let q = wealth_path(&[-1.0, 2.0, 3.0], &[1.0], 5.0).unwrap();
        assert_eq!(q.values, vec![5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn negative_multiplier_is_an_error() {
        assert_eq!(
            wealth_path(&[0.5, -2.0], &[1.0], 1.0).unwrap_err(),
            KellyError::SurvivalViolated { step: 1, multiplier: -1.0 }
        );
        assert!(matches!(wealth_path(&[-2.0], &[1.0], 1.0), Err(KellyError::SurvivalViolated { step: 0, .. })));
    }

    #[test]
    fn wealth_path_preconditions() {
        assert!(wealth_path(&[1.0], &[0.5], 0.0).is_err());
        assert!(wealth_path(&[1.0, 2.0, 3.0], &[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn vector_path() {
        let p = wealth_path(&[1.0, -1.0, 0.5, 0.5], &[0.5, 0.25], 2.0).unwrap();
        assert_eq!(p.values, vec![2.0, 2.5, 3.4375]);
    }

    #[test]
    fn toy_practitioner_bets_the_farm() {
        let spec = ModelSpec::ToyBernoulli { epsilon: 1e-6, x0: 100.0 };
        let r = run_comparison(&spec, 50, 200, 11, &OptimizerConfig::default()).unwrap();
        assert!(!r.bad_sample_seen);
        assert_eq!(r.k_empirical, 1.0);
        assert!((r.k_theory - (1.0 - 1e-6 * 101.0) / 100.0).abs() < 1e-15);
        assert!(r.realized_growth_empirical > r.realized_growth_theory);
    }

    #[test]
    fn overbetting_ruins_instead_of_erroring() {
        // 50 clean samples push the data bettor to the cap; the future holds -x0.
        let spec = ModelSpec::ToyBernoulli { epsilon: 0.001, x0: 100.0 };
        let r = run_comparison(&spec, 50, 2000, 3, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.k_empirical, 1.0);
        assert_eq!(r.realized_growth_empirical, ExtendedReal::NegInfinity);
        assert!(r.realized_growth_theory.finite().is_some());
        assert!(r.to_json().contains("\"realized_growth_empirical\":\"-inf\""));
    }

    #[test]
    fn toy_bad_sample_detected() {
        let spec = ModelSpec::ToyBernoulli { epsilon: 0.009, x0: 100.0 };
        let r = run_comparison(&spec, 2000, 10, 3, &OptimizerConfig::default()).unwrap();
        assert!(r.bad_sample_seen);
        assert!(r.k_empirical < 0.01);
    }

    #[test]
    fn normal_theory_refuses_to_bet() {
        let spec = ModelSpec::NormalReturns { mu: 4.0, sigma: 1.0 };
        let r = run_comparison(&spec, 100_000, 1000, 42, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.k_theory, 0.0);
        assert!((r.k_empirical - 0.9).abs() < 0.1, "{r:?}");
        assert_eq!(r.realized_growth_theory, ExtendedReal::ZERO);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["k_theory"], 0.0);
        assert_eq!(json["bad_sample_seen"], false);
    }

    #[test]
    fn coin_estimate_is_consistent() {
        let spec = ModelSpec::BernoulliCoin { p: 0.75 };
        let err = |m| (run_comparison(&spec, m, 10, 9, &OptimizerConfig::default()).unwrap().k_empirical - 0.5f64).abs();
        let (e3, e5, e6) = (err(1_000), err(100_000), err(1_000_000));
        assert!(e6 <= 0.01);
        assert!(e5 < 0.01);
        assert!(e3 < 0.1);
        assert_eq!(coin_closed_form(0.75).unwrap(), 0.5);
    }

    #[test]
    fn grid_spacing() {
        let g = mu_grid(0.0, 4.0, 0.25).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[4], 1.0);
        assert_eq!(*g.last().unwrap(), 4.0);
        assert!(mu_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn small_sweep_csv() {
        let rows = sweep_kelly_vs_mu(&[0.0, 4.0], 1.0, 20_000, 5, &OptimizerConfig::default()).unwrap();
        assert!(rows[0].1.abs() <= 0.05);
        assert!(rows[1].1 > 0.8);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mu,k_hat\n0,"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn interior_paths_stay_positive_and_log_consistent(p in 0.05f64..0.95, x0 in 0.5f64..50.0, t in 0.01f64..0.99, seed in any::<u64>()) {
            let dist = DiscreteDistribution::scalar(&[(1.0, p), (-x0, 1.0 - p)]).unwrap();
            let interval = feasible_interval(&dist, 10.0).unwrap();
            let k = interval.lo + t * interval.width();
            let mut rng = rng_from_seed(seed);
            let n = 200;
            let returns: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < p { 1.0 } else { -x0 }).collect();
            let path = wealth_path(&returns, &[k], 1.0).unwrap();
            prop_assert!(path.values.iter().all(|v| *v > 0.0));
            let a = path.realized_growth().finite().unwrap();
            let b = mean_log_return(&returns, &[k]).unwrap().finite().unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}
