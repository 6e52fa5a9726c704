//! Expected log-growth `g(K) = sum_i p_i log(1 + K.x_i)` and its gradient.
//!
//! Any atom with positive probability and `1 + K.x <= 0` makes the whole
//! objective [`ExtendedReal::NegInfinity`]. Sums are compensated and run in
//! atom index order.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constraints::Interval;
use crate::distributions::{scalar_extremes, DiscreteDistribution};
use crate::error::{KellyError, Result};
use crate::sum::CompensatedSum;

/// A real number or negative infinity. Never NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    NegInfinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    /// Maps `f64::NEG_INFINITY` to [`ExtendedReal::NegInfinity`]; rejects NaN and `+inf`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_finite() {
            Some(ExtendedReal::Finite(x))
        } else if x == f64::NEG_INFINITY {
            Some(ExtendedReal::NegInfinity)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn is_neg_infinity(self) -> bool {
        matches!(self, ExtendedReal::NegInfinity)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::NegInfinity => None,
        }
    }

    /// Lossy view as `f64`, with `NegInfinity` as `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }

    /// Extended sum: `NegInfinity` absorbs.
    pub fn add(self, other: ExtendedReal) -> ExtendedReal {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::NegInfinity,
        }
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedReal::NegInfinity, ExtendedReal::NegInfinity) => Ordering::Equal,
            (ExtendedReal::NegInfinity, _) => Ordering::Less,
            (_, ExtendedReal::NegInfinity) => Ordering::Greater,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => {
                a.partial_cmp(b).expect("ExtendedReal is never NaN")
            }
        }
    }
}

impl From<f64> for ExtendedReal {
    /// Panics on NaN or `+inf`.
    fn from(x: f64) -> Self {
        ExtendedReal::from_f64(x).unwrap_or_else(|| panic!("{x} is not an extended real"))
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// JSON form: a number, or the string `"-inf"`.
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => s.serialize_f64(*x),
            ExtendedReal::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => ExtendedReal::from_f64(x)
                .ok_or_else(|| serde::de::Error::custom(format!("{x} is not an extended real"))),
            Repr::Text(t) if t == "-inf" => Ok(ExtendedReal::NegInfinity),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"-inf\", got {t:?}"))),
        }
    }
}

/// Betting fractions, one per return coordinate. All entries finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FractionVector(Vec<f64>);

impl FractionVector {
    pub fn new(k: Vec<f64>) -> Result<Self> {
        if k.is_empty() {
            return Err(KellyError::domain("fraction vector must have at least one coordinate"));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(KellyError::domain("fraction coordinates must be finite"));
        }
        Ok(Self(k))
    }

    pub fn scalar(k: f64) -> Result<Self> {
        Self::new(vec![k])
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Deref for FractionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(dist: &DiscreteDistribution, k: &[f64]) -> Result<()> {
    if dist.dim() != k.len() {
        return Err(KellyError::DimensionMismatch { expected: dist.dim(), got: k.len() });
    }
    Ok(())
}

/// `g(K) = sum_i p_i log(1 + K.x_i)`, or `NegInfinity` if some supported atom
/// has `1 + K.x_i <= 0`.
pub fn log_growth(dist: &DiscreteDistribution, k: &[f64]) -> Result<ExtendedReal> {
    check_dim(dist, k)?;
    Ok(log_growth_unchecked(dist, k))
}

pub(crate) fn log_growth_unchecked(dist: &DiscreteDistribution, k: &[f64]) -> ExtendedReal {
    let mut acc = CompensatedSum::new();
    for (x, p) in dist.iter() {
        if p == 0.0 {
            continue;
        }
        let kx = dot(k, x);
        if kx <= -1.0 {
            return ExtendedReal::NegInfinity;
        }
        acc.add(p * kx.ln_1p());
    }
    ExtendedReal::Finite(acc.total())
}

/// Scalar specialization of [`log_growth`]; `dist` must be one-dimensional.
pub(crate) fn log_growth_scalar(dist: &DiscreteDistribution, k: f64) -> ExtendedReal {
    debug_assert!(dist.is_scalar());
    let mut acc = CompensatedSum::new();
    for (&x, &p) in dist.flat_atoms().iter().zip(dist.probs()) {
        if p == 0.0 {
            continue;
        }
        let kx = k * x;
        if kx <= -1.0 {
            return ExtendedReal::NegInfinity;
        }
        acc.add(p * kx.ln_1p());
    }
    ExtendedReal::Finite(acc.total())
}

/// `dg/dK = sum_i p_i x_i / (1 + K.x_i)`, defined only in the strict interior.
pub fn log_growth_gradient(dist: &DiscreteDistribution, k: &[f64]) -> Result<Vec<f64>> {
    check_dim(dist, k)?;
    let d = dist.dim();
    let mut acc = vec![CompensatedSum::new(); d];
    for (i, (x, p)) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let kx = dot(k, x);
        if kx <= -1.0 {
            return Err(KellyError::Boundary { atom: i, margin: 1.0 + kx });
        }
        let w = p / (1.0 + kx);
        for (a, xj) in acc.iter_mut().zip(x) {
            a.add(w * xj);
        }
    }
    Ok(acc.iter().map(CompensatedSum::total).collect())
}

/// Scalar derivative; `None` at or beyond the survival boundary.
pub(crate) fn derivative_scalar(dist: &DiscreteDistribution, k: f64) -> Option<f64> {
    let mut acc = CompensatedSum::new();
    for (&x, &p) in dist.flat_atoms().iter().zip(dist.probs()) {
        if p == 0.0 {
            continue;
        }
        let kx = k * x;
        if kx <= -1.0 {
            return None;
        }
        acc.add(p * x / (1.0 + kx));
    }
    Some(acc.total())
}

/// Survival interval intersected with the box `[-cap, cap]`:
/// `[max(-1/X_max, -cap), min(-1/X_min, cap)]`, where a one-signed support
/// leaves the corresponding side bounded by the cap alone.
pub fn feasible_interval(dist: &DiscreteDistribution, cap: f64) -> Result<Interval> {
    if !(cap > 0.0) {
        return Err(KellyError::domain(format!("cap must be positive, got {cap}")));
    }
    let (x_min, x_max) = scalar_extremes(dist)?;
    let lo = if x_max > 0.0 { (-1.0 / x_max).max(-cap) } else { -cap };
    let hi = if x_min < 0.0 { (-1.0 / x_min).min(cap) } else { cap };
    Interval::new(lo, hi)
}
