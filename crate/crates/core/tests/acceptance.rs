//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use kelly_core::constraints::{confinement_interval, kelly_feasible, support_function, SupportSet};
use kelly_core::distributions::{
    empirical_from_samples, from_spec, pathological_theta, rng_from_seed, DiscreteDistribution, KellyRng,
    ModelSpec, SampleSet,
};
use kelly_core::growth::{log_growth, log_growth_gradient};
use kelly_core::ingest::{moment_matched_ticks, returns_from_prices, summary_stats};
use kelly_core::optimizer::{optimize_scalar, optimize_vector, p_bad, theoretical_kelly, OptimizerConfig};
use kelly_core::simulator::{mu_grid, sweep_kelly_vs_mu};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_dist(rng: &mut KellyRng, dim: usize, max_atoms: usize) -> DiscreteDistribution {
    let n = rng.random_range(1..=max_atoms);
    let atoms: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..3.0)).collect())
        .collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut probs: Vec<f64> = w.iter().map(|x| x / total).collect();
    let s: f64 = probs.iter().sum();
    probs[0] += 1.0 - s;
    DiscreteDistribution::new(atoms, probs).unwrap()
}

/// 1. optimize_scalar on coins matches 2p - 1 within 1e-7, in under a second.
fn coin_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..=8 {
        let p = 0.55 + 0.05 * i as f64;
        let d = from_spec(&ModelSpec::BernoulliCoin { p }).unwrap();
        let k = optimize_scalar(&d, &OptimizerConfig::default()).unwrap().k();
        worst = worst.max((k - (2.0 * p - 1.0)).abs());
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-7, || format!("max error {worst:e}"))?;
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("max |k - (2p-1)| = {worst:.2e}, {elapsed:?}"))
}

/// 2. Toy model: optimizer matches (1 - eps(1+x0))/x0 within 1e-7, and 0 < K* < 1/x0.
///    Grid pairs outside the model's domain eps < 1/(1+x0) must be rejected.
fn toy_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut valid = 0;
    let mut rejected = 0;
    for eps in [1e-4, 1e-3, 5e-3] {
        for x0 in [10.0, 100.0, 1000.0] {
            let spec = ModelSpec::ToyBernoulli { epsilon: eps, x0 };
            if eps >= 1.0 / (1.0 + x0) {
                check(from_spec(&spec).is_err(), || format!("({eps}, {x0}) should be rejected"))?;
                rejected += 1;
                continue;
            }
            valid += 1;
            let closed = (1.0 - eps * (1.0 + x0)) / x0;
            let k = optimize_scalar(&from_spec(&spec).unwrap(), &OptimizerConfig::default()).unwrap().k();
            worst = worst.max((k - closed).abs());
            check(0.0 < k && k < 1.0 / x0, || format!("K* = {k} outside (0, 1/{x0})"))?;
        }
    }
    check(worst <= 1e-7, || format!("max error {worst:e}"))?;
    Ok(format!("{valid} valid pairs, max error {worst:.2e}; {rejected} out-of-domain pairs rejected"))
}

/// 3. p_bad(0.001, 50) and p_bad(0.0001, 50).
fn p_bad_values() -> Outcome {
    let a = p_bad(0.001, 50).unwrap();
    let b = p_bad(0.0001, 50).unwrap();
    check((a - 0.04879).abs() <= 1e-4, || format!("p_bad(0.001, 50) = {a}"))?;
    check((b - 0.004988).abs() <= 1e-5, || format!("p_bad(0.0001, 50) = {b}"))?;
    Ok(format!("{a:.5} (~0.05), {b:.6} (~0.005)"))
}

/// 4. Mean sweep at sigma = 1, m = 1e5, step 0.25, shared noise.
fn mean_sweep() -> Outcome {
    let start = Instant::now();
    let grid = mu_grid(0.0, 4.0, 0.25).unwrap();
    let rows = sweep_kelly_vs_mu(&grid, 1.0, 100_000, 42, &OptimizerConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let at = |mu: f64| rows.iter().find(|r| r.0 == mu).unwrap().1;
    let (k1, k4) = (at(1.0), at(4.0));
    check(rows.len() == 17, || format!("{} rows", rows.len()))?;
    check((0.10..=0.30).contains(&k1), || format!("k_hat(1) = {k1}"))?;
    check((0.80..=1.00).contains(&k4), || format!("k_hat(4) = {k4}"))?;
    for w in rows.windows(2) {
        check(w[1].1 >= w[0].1 - 0.02, || format!("drop from {:?} to {:?}", w[0], w[1]))?;
    }
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("k_hat(1) = {k1:.4}, k_hat(4) = {k4:.4}, monotone within 0.02, {elapsed:?}"))
}

/// 5. Converged optima satisfy h(-K*) <= 1 + 1e-9 and survival at every atom.
fn theorem_compliance() -> Outcome {
    let mut rng = rng_from_seed(5);
    let cfg = OptimizerConfig::default();
    let mut worst_h = f64::NEG_INFINITY;
    for trial in 0..500 {
        let dim = 1 + trial % 3;
        let dist = random_dist(&mut rng, dim, 50);
        let r = optimize_vector(&dist, &cfg).unwrap();
        check(r.converged, || format!("trial {trial} did not converge"))?;
        let neg: Vec<f64> = r.k_star.iter().map(|v| -v).collect();
        let h = support_function(&SupportSet::from_distribution(&dist), &neg).unwrap();
        worst_h = worst_h.max(h);
        check(h <= 1.0 + 1e-9, || format!("trial {trial}: h(-K*) = {h}"))?;
        for (x, _) in dist.iter() {
            let m = 1.0 + r.k_star.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            check(m >= 0.0, || format!("trial {trial}: survival margin {m}"))?;
        }
    }
    Ok(format!("500 distributions, max h(-K*) = {worst_h:.6}"))
}

fn random_set(rng: &mut KellyRng, dim: usize) -> SupportSet {
    let center = |rng: &mut KellyRng| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    match rng.random_range(0..3) {
        0 => SupportSet::hypercube(center(rng), (0..dim).map(|_| rng.random_range(0.1..2.0)).collect()).unwrap(),
        1 => SupportSet::hypersphere(center(rng), rng.random_range(0.1..2.0)).unwrap(),
        _ => {
            let n = rng.random_range(1..15);
            SupportSet::atom_hull((0..n).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect())
                .unwrap()
        }
    }
}

/// Rejection-samples a feasible point from the box [-3, 3]^d.
fn feasible_point(rng: &mut KellyRng, set: &SupportSet) -> Vec<f64> {
    loop {
        let k: Vec<f64> = (0..set.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
        if kelly_feasible(set, &k).unwrap() {
            return k;
        }
    }
}

/// 6. Convexity of the feasible set and nesting of sphere sets.
fn feasible_geometry() -> Outcome {
    let mut rng = rng_from_seed(6);
    for i in 0..1000 {
        let set = random_set(&mut rng, 1 + i % 3);
        let a = feasible_point(&mut rng, &set);
        let b = feasible_point(&mut rng, &set);
        let lambda: f64 = rng.random();
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let h = support_function(&set, &neg).unwrap();
        check(h <= 1.0 + 1e-12, || format!("combination {i} has h = {h} for {set:?}"))?;
    }
    for i in 0..1000 {
        let dim = 1 + i % 3;
        let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r1: f64 = rng.random_range(0.1..3.0);
        let r2 = r1 + rng.random_range(0.0..3.0);
        let small = SupportSet::hypersphere(center.clone(), r1).unwrap();
        let big = SupportSet::hypersphere(center, r2).unwrap();
        let k = feasible_point(&mut rng, &big);
        check(kelly_feasible(&small, &k).unwrap(), || format!("{k:?} in K_{r2} but not K_{r1}"))?;
    }
    Ok("1000 convex combinations feasible; 1000 points of larger-radius sets lie in the smaller-radius set".into())
}

/// 7. Analytic gradient vs central differences (step 1e-6). Relative error is
///    |analytic - fd| / max(|analytic|, |fd|, 1).
fn gradient_check() -> Outcome {
    let mut rng = rng_from_seed(7);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    while points < 200 {
        let dim = 1 + points % 3;
        let dist = random_dist(&mut rng, dim, 30);
        let dir: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        // scale so every atom keeps 1 + k.x >= 0.2
        let worst_dot = dist
            .iter()
            .map(|(x, _)| dir.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(0.0f64, f64::min);
        let scale = if worst_dot < 0.0 { 0.8 / -worst_dot } else { 1.0 } * rng.random_range(0.0..1.0);
        let k: Vec<f64> = dir.iter().map(|v| v * scale).collect();
        let analytic = log_growth_gradient(&dist, &k).unwrap();
        for j in 0..dim {
            let mut up = k.clone();
            let mut down = k.clone();
            up[j] += h;
            down[j] -= h;
            let gu = log_growth(&dist, &up).unwrap().finite().unwrap();
            let gd = log_growth(&dist, &down).unwrap().finite().unwrap();
            let fd = (gu - gd) / (2.0 * h);
            let rel = (analytic[j] - fd).abs() / analytic[j].abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
        }
        points += 1;
    }
    check(worst <= 1e-6, || format!("max relative error {worst:e}"))?;
    Ok(format!("200 points, max relative error {worst:.2e}"))
}

/// Renormalized partial sum of the pathological model at K = k_ref, computed
/// from its closed-form terms log(1 + K x_k) = -k.
fn pathological_oracle(n: usize) -> f64 {
    let theta = pathological_theta();
    let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let weight = 1.0 / (2.0 * theta) + (1..=n).map(|k| 1.0 / ((k * k) as f64 * theta)).sum::<f64>();
    (1.5f64.ln() / (2.0 * theta) - harmonic / theta) / weight
}

/// 8. Truncated growth of the pathological model at K = 0.5 decreases
///    strictly in n and falls below -2 by n = 100.
fn pathological_divergence() -> Outcome {
    let g = |n: usize| {
        let d = from_spec(&ModelSpec::Pathological { k_ref: 0.5, n_terms: n }).unwrap();
        log_growth(&d, &[0.5]).unwrap().finite().unwrap()
    };
    let values: Vec<f64> = (1..=100).map(g).collect();
    for n in 2..=100 {
        let (prev, cur) = (values[n - 2], values[n - 1]);
        check(cur < prev, || format!("g_{n} = {cur} not below g_{} = {prev}", n - 1))?;
    }
    for n in 1..=30 {
        let (got, want) = (values[n - 1], pathological_oracle(n));
        check((got - want).abs() <= 1e-6, || format!("g_{n} = {got}, oracle {want}"))?;
    }
    let g100 = values[99];
    check(g100 < -2.0, || format!("g_100 = {g100}"))?;
    let theta = 0.5 + PI * PI / 6.0;
    Ok(format!(
        "strictly decreasing for n in 2..=100, g_30 matches oracle, g_100 = {g100:.4} (oracle {:.4}, theta = {theta:.5})",
        pathological_oracle(100)
    ))
}

/// 9. Synthetic ticks matched to sigma = 1.405e-4 and mu/sigma^2 ~ 0.825:
///    empirical optimum within 0.02 of the sample Merton fraction.
fn high_frequency() -> Outcome {
    let (ticks, drift) = moment_matched_ticks(100.0, 1.405e-4, 110_000, 2015, 0.825).unwrap();
    let returns = returns_from_prices(&ticks).unwrap();
    let stats = summary_stats(&returns).unwrap();
    let merton = stats.mu_hat / (stats.sigma_hat * stats.sigma_hat);
    let dist = empirical_from_samples(&SampleSet::scalar(returns).unwrap()).unwrap();
    let k = optimize_scalar(&dist, &OptimizerConfig::default()).unwrap().k();
    check(ticks.len() == 110_000, || format!("{} ticks", ticks.len()))?;
    check((merton - 0.825).abs() < 0.01, || format!("sample ratio {merton}"))?;
    check((k - merton).abs() <= 0.02, || format!("k_hat = {k}, mu/sigma^2 = {merton}"))?;
    Ok(format!(
        "k_hat = {k:.4}, mu_hat/sigma_hat^2 = {merton:.4} (mu_hat = {:.3e}, sigma_hat = {:.4e}, drift {drift:.3e})",
        stats.mu_hat, stats.sigma_hat
    ))
}

/// 10. A normal model always gives K* = 0.
fn normal_no_bet() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut count = 0;
    for mu in [-2.0, 0.0, 0.5, 1.0, 4.0, 10.0, 100.0] {
        for sigma in [0.01, 0.25, 1.0, 3.0] {
            let k = theoretical_kelly(&ModelSpec::NormalReturns { mu, sigma }, &cfg).unwrap().k();
            check(k == 0.0, || format!("N({mu}, {sigma}) gave {k}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} (mu, sigma) pairs incl. mu/sigma = 4, all K* = 0"))
}

/// 11. Doubly unbounded support confines K to {0}.
fn confinement_degeneracy() -> Outcome {
    let c = confinement_interval(f64::NEG_INFINITY, f64::INFINITY).unwrap();
    check(c.lo == 0.0 && c.hi == 0.0, || format!("{c:?}"))?;
    Ok(format!("[{}, {}]", c.lo, c.hi))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC1  coin closed form", coin_equivalence),
        ("AC2  toy closed form and confinement", toy_equivalence),
        ("AC3  bad-sample probability", p_bad_values),
        ("AC4  Kelly fraction vs mean sweep", mean_sweep),
        ("AC5  support-function compliance", theorem_compliance),
        ("AC6  feasible-set convexity and nesting", feasible_geometry),
        ("AC7  gradient vs finite differences", gradient_check),
        ("AC8  pathological divergence", pathological_divergence),
        ("AC9  high-frequency moment matching", high_frequency),
        ("AC10 normal model never bets", normal_no_bet),
        ("AC11 unbounded confinement", confinement_degeneracy),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
