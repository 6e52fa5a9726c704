//! Maximizers of the expected log-growth and the closed-form fractions.
//!
//! [`optimize_scalar`] runs a golden-section search over the feasible
//! interval and finishes with a derivative-sign bisection, since function
//! values alone cannot resolve a flat optimum below roughly `sqrt(eps)`.
//! [`optimize_vector`] is projected gradient ascent on the box
//! `[-cap, cap]^d`, started from `K = 0`, with Barzilai-Borwein trial steps
//! and Armijo backtracking that rejects any step leaving the survival region.

use serde::{Deserialize, Serialize};

use crate::constraints::Interval;
use crate::distributions::{from_spec, DiscreteDistribution, ModelSpec};
use crate::error::{KellyError, Result};
use crate::growth::{
    derivative_scalar, feasible_interval, log_growth_gradient, log_growth_scalar, log_growth_unchecked,
    ExtendedReal, FractionVector,
};

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const ARMIJO: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Box bound `|K_i| <= cap`. 1.0 means no leverage.
    pub cap: f64,
    pub tol_k: f64,
    pub tol_g: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { cap: 1.0, tol_k: 1e-10, tol_g: 1e-12, max_iterations: 10_000 }
    }
}

impl OptimizerConfig {
    pub fn with_cap(cap: f64) -> Self {
        Self { cap, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cap > 0.0 && self.cap.is_finite()) {
            return Err(KellyError::domain(format!("cap must be positive and finite, got {}", self.cap)));
        }
        if !(self.tol_k > 0.0) || !(self.tol_g > 0.0) {
            return Err(KellyError::domain("tolerances must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(KellyError::domain("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Which constraint, if any, holds the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveBound {
    Cap,
    Survival,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub k_star: FractionVector,
    pub g_star: ExtendedReal,
    pub iterations: usize,
    pub converged: bool,
    pub active_bound: Option<ActiveBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

impl OptimizationResult {
    /// First coordinate of `k_star`; the fraction for scalar problems.
    pub fn k(&self) -> f64 {
        self.k_star[0]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

/// Prefers larger growth, then smaller `|k|`.
fn better(a: (f64, ExtendedReal), b: (f64, ExtendedReal)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0.abs() < b.0.abs())
}

/// Maximizes `g` over `feasible_interval(dist, cap)`.
pub fn optimize_scalar(dist: &DiscreteDistribution, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    if !dist.is_scalar() {
        return Err(KellyError::DimensionMismatch { expected: 1, got: dist.dim() });
    }
    let interval = feasible_interval(dist, cfg.cap)?;
    let g = |k: f64| log_growth_scalar(dist, k);

    if interval.is_degenerate() {
        let k = interval.lo + 0.0;
        return Ok(OptimizationResult {
            k_star: FractionVector::scalar(k)?,
            g_star: g(k),
            iterations: 0,
            converged: true,
            active_bound: Some(ActiveBound::Survival),
            rationale: None,
        });
    }

    // Golden-section bracketing. Ties keep the side holding the smaller |k|.
    let (mut a, mut b) = (interval.lo, interval.hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    let mut iterations = 0;
    while b - a > cfg.tol_k && iterations < cfg.max_iterations {
        iterations += 1;
        let keep_left = gc > gd || (gc == gd && c.abs() <= d.abs());
        if keep_left {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
        if c >= d {
            break;
        }
    }
    let converged = iterations < cfg.max_iterations;

    let (polished, polish_iters) = polish_by_derivative(dist, interval, a, b);
    iterations += polish_iters;

    let mut best = (polished, g(polished));
    let mut candidates = vec![interval.lo, interval.hi];
    if interval.contains(0.0) {
        candidates.push(0.0);
    }
    for k in candidates {
        let cand = (k, g(k));
        if better(cand, best) {
            best = cand;
        }
    }
    let (k, g_star) = best;
    let k = k + 0.0;

    let active = if k == interval.lo || k == interval.hi {
        if k.abs() == cfg.cap {
            ActiveBound::Cap
        } else {
            ActiveBound::Survival
        }
    } else {
        ActiveBound::Interior
    };

    Ok(OptimizationResult {
        k_star: FractionVector::scalar(k)?,
        g_star,
        iterations,
        converged,
        active_bound: Some(active),
        rationale: None,
    })
}

/// Bisection on the sign of `g'` inside `[a, b]`, first widening the bracket
/// to the interval ends if the derivative says the maximum lies outside it.
/// `g'` is `+inf` at a lower survival end and `-inf` at an upper one.
fn polish_by_derivative(dist: &DiscreteDistribution, interval: Interval, a: f64, b: f64) -> (f64, usize) {
    let slope = |k: f64| -> f64 {
        derivative_scalar(dist, k).unwrap_or(if k <= interval.lo { f64::INFINITY } else { f64::NEG_INFINITY })
    };
    let (mut lo, mut hi) = (a, b);
    if slope(lo) < 0.0 {
        hi = lo;
        lo = interval.lo;
    } else if slope(hi) > 0.0 {
        lo = hi;
        hi = interval.hi;
    }
    if slope(hi) >= 0.0 {
        return (hi, 0);
    }
    if slope(lo) <= 0.0 {
        return (lo, 0);
    }
    let mut iters = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || iters >= 200 {
            break;
        }
        iters += 1;
        let s = slope(mid);
        if s > 0.0 {
            lo = mid;
        } else if s < 0.0 {
            hi = mid;
        } else {
            return (mid, iters);
        }
    }
    (0.5 * (lo + hi), iters)
}

fn project(k: &mut [f64], cap: f64) {
    for v in k {
        *v = v.clamp(-cap, cap);
    }
}

/// Projected gradient ascent over `[-cap, cap]^d`, starting at `K = 0`.
pub fn optimize_vector(dist: &DiscreteDistribution, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    let dim = dist.dim();
    let mut k = vec![0.0; dim];
    let mut g = 0.0;
    let mut grad = log_growth_gradient(dist, &k)?;
    let mut alpha = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        iterations += 1;

        let mut accepted = None;
        let mut step = alpha;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial: Vec<f64> = k.iter().zip(&grad).map(|(x, d)| x + step * d).collect();
            project(&mut trial, cfg.cap);
            let ascent: f64 = grad.iter().zip(trial.iter().zip(&k)).map(|(d, (t, x))| d * (t - x)).sum();
            if let ExtendedReal::Finite(gt) = log_growth_unchecked(dist, &trial) {
                if gt >= g + ARMIJO * ascent {
                    accepted = Some((trial, gt));
                    break;
                }
            }
            step *= BACKTRACK;
        }
        let Some((next, g_next)) = accepted else {
            converged = true;
            break;
        };

        let s: Vec<f64> = next.iter().zip(&k).map(|(a, b)| a - b).collect();
        let step_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let improvement = g_next - g;
        let grad_next = log_growth_gradient(dist, &next)?;

        // Barzilai-Borwein: alpha = s.s / -(s.y); concavity makes -(s.y) >= 0.
        let sy: f64 = s.iter().zip(grad_next.iter().zip(&grad)).map(|(si, (a, b))| si * (a - b)).sum();
        let ss = step_norm * step_norm;
        alpha = if sy < 0.0 { (ss / -sy).clamp(1e-12, 1e12) } else { (2.0 * step).min(1e12) };

        k = next;
        g = g_next;
        grad = grad_next;

        if step_norm < cfg.tol_k || (improvement < cfg.tol_g && step_norm < cfg.tol_k.sqrt()) {
            converged = true;
            break;
        }
    }

    let active = if k.iter().any(|v| v.abs() == cfg.cap) { ActiveBound::Cap } else { ActiveBound::Interior };
    let k_star = FractionVector::new(k.iter().map(|v| v + 0.0).collect())?;
    let g_star = log_growth_unchecked(dist, &k_star);
    Ok(OptimizationResult {
        k_star,
        g_star,
        iterations,
        converged,
        active_bound: Some(active),
        rationale: None,
    })
}

/// Kelly fraction for an even-money coin with heads probability `p`: `2p - 1`.
pub fn coin_closed_form(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(KellyError::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(2.0 * p - 1.0)
}

/// `max(2 p_hat - 1, 0)`.
pub fn empirical_coin_fraction(p_hat: f64) -> Result<f64> {
    Ok(coin_closed_form(p_hat)?.max(0.0))
}

/// Optimum of `(1 - eps) log(1 + K) + eps log(1 - K x0)`:
/// `K* = (1 - eps (1 + x0)) / x0`, which lies in `(0, 1/x0)`.
pub fn toy_closed_form(epsilon: f64, x0: f64) -> Result<f64> {
    ModelSpec::ToyBernoulli { epsilon, x0 }.validate()?;
    Ok((1.0 - epsilon * (1.0 + x0)) / x0)
}

/// Probability of at least one bad draw in `budget` samples: `1 - (1 - eps)^M`.
pub fn p_bad(epsilon: f64, budget: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(KellyError::domain(format!("probability {epsilon} outside [0, 1]")));
    }
    if budget == 0 || epsilon == 0.0 {
        return Ok(0.0);
    }
    if epsilon == 1.0 {
        return Ok(1.0);
    }
    Ok(-(budget as f64 * (-epsilon).ln_1p()).exp_m1())
}

/// Continuous-time limit `mu / sigma^2`.
pub fn merton_fraction(mu_hat: f64, sigma_hat: f64) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(KellyError::domain(format!("sigma must be positive, got {sigma_hat}")));
    }
    Ok(mu_hat / (sigma_hat * sigma_hat))
}

/// The fraction a bettor who trusts the model would choose.
///
/// A normal model has support unbounded on both sides, so the only fraction
/// with `1 + K x >= 0` everywhere is `K = 0`, whatever the mean and variance.
pub fn theoretical_kelly(spec: &ModelSpec, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    spec.validate()?;
    let closed = |k: f64, dist: DiscreteDistribution| -> Result<OptimizationResult> {
        let clamped = k.clamp(-cfg.cap, cfg.cap);
        let active = if clamped != k || clamped.abs() == cfg.cap { ActiveBound::Cap } else { ActiveBound::Interior };
        Ok(OptimizationResult {
            k_star: FractionVector::scalar(clamped)?,
            g_star: log_growth_scalar(&dist, clamped),
            iterations: 0,
            converged: true,
            active_bound: Some(active),
            rationale: Some("closed form".into()),
        })
    };
    match *spec {
        ModelSpec::NormalReturns { .. } => Ok(OptimizationResult {
            k_star: FractionVector::scalar(0.0)?,
            g_star: ExtendedReal::ZERO,
            iterations: 0,
            converged: true,
            active_bound: Some(ActiveBound::Survival),
            rationale: Some("unbounded support".into()),
        }),
        ModelSpec::BernoulliCoin { p } => closed(coin_closed_form(p)?, from_spec(spec)?),
        ModelSpec::ToyBernoulli { epsilon, x0 } => closed(toy_closed_form(epsilon, x0)?, from_spec(spec)?),
        ModelSpec::Pathological { .. } => {
            let mut r = optimize_scalar(&from_spec(spec)?, cfg)?;
            r.rationale = Some("numeric optimum of the truncated model".into());
            Ok(r)
        }
    }
}
