//! Support functions and the admissible-fraction test `h(-K) <= 1`.
//!
//! For a support set `X` the support function is `h(y) = sup_{x in X} y.x`.
//! A fraction vector `K` can only be optimal if `h(-K) <= 1`, i.e. no
//! outcome in the support sends wealth below zero. The set of such `K` is
//! closed and convex (an intersection of half-spaces, one per support point).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDistribution;
use crate::error::{KellyError, Result};
use crate::growth::dot;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(KellyError::domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }
}

/// Geometric description of a (convex hull of a) support set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportSet {
    Interval { x_min: f64, x_max: f64 },
    /// `|x_i - center_i| <= half_widths_i`.
    Hypercube { center: Vec<f64>, half_widths: Vec<f64> },
    /// `|x - center|_2 <= radius`.
    Hypersphere { center: Vec<f64>, radius: f64 },
    /// Finite point set; its support function equals that of its convex hull.
    AtomHull { points: Vec<Vec<f64>> },
}

impl SupportSet {
    pub fn interval(x_min: f64, x_max: f64) -> Result<Self> {
        let s = SupportSet::Interval { x_min, x_max };
        s.validate()?;
        Ok(s)
    }

    pub fn hypercube(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        let s = SupportSet::Hypercube { center, half_widths };
        s.validate()?;
        Ok(s)
    }

    pub fn hypersphere(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = SupportSet::Hypersphere { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn atom_hull(points: Vec<Vec<f64>>) -> Result<Self> {
        let s = SupportSet::AtomHull { points };
        s.validate()?;
        Ok(s)
    }

    /// Hull of the atoms that carry positive probability.
    pub fn from_distribution(dist: &DiscreteDistribution) -> Self {
        SupportSet::AtomHull { points: dist.support().map(<[f64]>::to_vec).collect() }
    }

    /// The `2^d` vertices of a hypercube as an [`SupportSet::AtomHull`].
    pub fn hypercube_vertices(center: &[f64], half_widths: &[f64]) -> Result<Self> {
        if center.len() != half_widths.len() {
            return Err(KellyError::DimensionMismatch { expected: center.len(), got: half_widths.len() });
        }
        let d = center.len();
        let points = (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|j| if mask >> j & 1 == 1 { center[j] + half_widths[j] } else { center[j] - half_widths[j] })
                    .collect()
            })
            .collect();
        Self::atom_hull(points)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            SupportSet::Interval { x_min, x_max } => {
                if !(x_min.is_finite() && x_max.is_finite() && x_min <= x_max) {
                    return Err(KellyError::domain(format!("interval needs finite x_min <= x_max, got [{x_min}, {x_max}]")));
                }
            }
            SupportSet::Hypercube { center, half_widths } => {
                if center.is_empty() {
                    return Err(KellyError::domain("hypercube needs dimension >= 1"));
                }
                if center.len() != half_widths.len() {
                    return Err(KellyError::DimensionMismatch { expected: center.len(), got: half_widths.len() });
                }
                if !finite(center) || half_widths.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                    return Err(KellyError::domain("hypercube needs a finite center and positive half-widths"));
                }
            }
            SupportSet::Hypersphere { center, radius } => {
                if center.is_empty() {
                    return Err(KellyError::domain("hypersphere needs dimension >= 1"));
                }
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(KellyError::domain("hypersphere needs a finite center and positive radius"));
                }
            }
            SupportSet::AtomHull { points } => {
                let d = points
                    .first()
                    .map(Vec::len)
                    .ok_or_else(|| KellyError::domain("atom hull needs at least one point"))?;
                if d == 0 {
                    return Err(KellyError::domain("atom hull points need dimension >= 1"));
                }
                for p in points {
                    if p.len() != d {
                        return Err(KellyError::DimensionMismatch { expected: d, got: p.len() });
                    }
                    if !finite(p) {
                        return Err(KellyError::domain("atom hull points must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SupportSet::Interval { .. } => 1,
            SupportSet::Hypercube { center, .. } | SupportSet::Hypersphere { center, .. } => center.len(),
            SupportSet::AtomHull { points } => points.first().map_or(0, Vec::len),
        }
    }
}

/// `h(y) = sup_{x in set} y.x`. Every variant is bounded, so the value is finite.
pub fn support_function(set: &SupportSet, y: &[f64]) -> Result<f64> {
    if y.len() != set.dim() {
        return Err(KellyError::DimensionMismatch { expected: set.dim(), got: y.len() });
    }
    let h = match set {
        SupportSet::Interval { x_min, x_max } => (y[0] * x_min).max(y[0] * x_max),
        SupportSet::Hypercube { center, half_widths } => {
            y.iter().zip(half_widths).map(|(yi, di)| yi.abs() * di).sum::<f64>() + dot(y, center)
        }
        SupportSet::Hypersphere { center, radius } => {
            radius * y.iter().map(|v| v * v).sum::<f64>().sqrt() + dot(y, center)
        }
        SupportSet::AtomHull { points } => {
            points.iter().map(|x| dot(y, x)).fold(f64::NEG_INFINITY, f64::max)
        }
    };
    Ok(h)
}

/// `h(-k) <= 1`, boundary included.
pub fn kelly_feasible(set: &SupportSet, k: &[f64]) -> Result<bool> {
    let neg: Vec<f64> = k.iter().map(|v| -v).collect();
    Ok(support_function(set, &neg)? <= 1.0)
}

/// Scalar confinement `[-1/x_max, -1/x_min]` for `x_min < 0 < x_max`.
///
/// Infinite extremes are allowed: `x_max = +inf` pins the lower end at 0 and
/// `x_min = -inf` pins the upper end at 0, so a support unbounded in both
/// directions admits only `K = 0`.
pub fn confinement_interval(x_min: f64, x_max: f64) -> Result<Interval> {
    if x_min.is_nan() || x_max.is_nan() || !(x_min < 0.0) || !(x_max > 0.0) {
        return Err(KellyError::domain(format!("confinement needs x_min < 0 < x_max, got ({x_min}, {x_max})")));
    }
    let lo = if x_max == f64::INFINITY { 0.0 } else { -1.0 / x_max };
    let hi = if x_min == f64::NEG_INFINITY { 0.0 } else { -1.0 / x_min };
    Interval::new(lo, hi)
}

/// One vertex of a sphere-constraint boundary polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub k: [f64; 2],
}

/// Boundary of `{K : r|K| - K.x0 <= 1}` in the plane, sampled at `n_points`
/// angles `theta_j = 2 pi j / n_points`. Along direction `u(theta)` the
/// boundary sits at radius `1 / (r - u.x0)`, which is finite only when
/// `r > |x0|`.
pub fn sphere_constraint_boundary(x0: [f64; 2], r: f64, n_points: usize) -> Result<Vec<BoundaryPoint>> {
    let center_norm = x0[0].hypot(x0[1]);
    if !(r.is_finite() && r > center_norm) {
        return Err(KellyError::UnboundedBoundary { radius: r, center_norm });
    }
    if n_points < 3 {
        return Err(KellyError::domain(format!("boundary needs at least 3 points, got {n_points}")));
    }
    let step = std::f64::consts::TAU / n_points as f64;
    Ok((0..n_points)
        .map(|j| {
            let theta = j as f64 * step;
            let (s, c) = theta.sin_cos();
            let rho = 1.0 / (r - (c * x0[0] + s * x0[1]));
            BoundaryPoint { theta, k: [rho * c, rho * s] }
        })
        .collect())
}

/// Writes `theta,k1,k2` rows with a header.
pub fn write_boundary_csv<W: Write>(out: W, points: &[BoundaryPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "k1", "k2"]).map_err(|e| KellyError::Io(e.to_string()))?;
    for p in points {
        w.write_record([p.theta.to_string(), p.k[0].to_string(), p.k[1].to_string()])
            .map_err(|e| KellyError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
