//! Discrete return distributions, named models and seeded samplers.
//!
//! Every distribution the optimizer sees is a finite set of atoms with
//! probabilities. Empirical PMFs come from [`empirical_from_samples`]; the
//! named theoretical models come from [`from_spec`]. The normal model has no
//! finite-atom form and is only reachable through [`gaussian_samples`].
//!
//! All randomness goes through [`KellyRng`] (ChaCha8 seeded from a `u64`), so
//! a fixed seed reproduces every experiment.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KellyError, Result};
use crate::sum::compensated_sum;

/// The one pseudo-random generator used throughout the crate.
pub type KellyRng = ChaCha8Rng;

/// Tolerance on `sum(probs) == 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;

pub fn rng_from_seed(seed: u64) -> KellyRng {
    KellyRng::seed_from_u64(seed)
}

/// Finite set of `d`-dimensional atoms with probabilities.
///
/// Atoms are stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    dim: usize,
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from explicit atoms, validating every invariant.
    pub fn new(atoms: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(Vec::len)
            .ok_or_else(|| KellyError::domain("distribution needs at least one atom"))?;
        let mut flat = Vec::with_capacity(dim * atoms.len());
        for a in &atoms {
            if a.len() != dim {
                return Err(KellyError::DimensionMismatch { expected: dim, got: a.len() });
            }
            flat.extend_from_slice(a);
        }
        Self::from_flat(dim, flat, probs)
    }

    /// Scalar distribution from `(value, prob)` pairs.
    pub fn scalar(pairs: &[(f64, f64)]) -> Result<Self> {
        let atoms = pairs.iter().map(|&(x, _)| x).collect();
        let probs = pairs.iter().map(|&(_, p)| p).collect();
        Self::from_flat(1, atoms, probs)
    }

    pub fn from_flat(dim: usize, atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(KellyError::domain("atom dimension must be at least 1"));
        }
        if probs.is_empty() {
            return Err(KellyError::domain("distribution needs at least one atom"));
        }
        if atoms.len() != dim * probs.len() {
            return Err(KellyError::domain(format!(
                "{} atom coordinates do not match {} probabilities of dimension {}",
                atoms.len(),
                probs.len(),
                dim
            )));
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(KellyError::domain("atoms must be finite"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(KellyError::domain("probabilities must be finite and nonnegative"));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(KellyError::domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { dim, atoms, probs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.dim == 1
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Flat atom buffer; for scalar distributions this is the atom values.
    pub fn flat_atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// `(atom, prob)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.atoms.chunks_exact(self.dim).zip(self.probs.iter().copied())
    }

    /// Atoms carrying positive probability.
    pub fn support(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.iter().filter(|(_, p)| *p > 0.0).map(|(a, _)| a)
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| compensated_sum(self.iter().map(|(a, p)| p * a[j])))
            .collect()
    }

    /// Draws `m` i.i.d. atoms.
    pub fn sample(&self, m: usize, rng: &mut KellyRng) -> Result<SampleSet> {
        if m == 0 {
            return Err(KellyError::domain("sample count must be at least 1"));
        }
        let index = WeightedIndex::new(&self.probs)
            .map_err(|e| KellyError::domain(format!("cannot sample: {e}")))?;
        let mut values = Vec::with_capacity(m * self.dim);
        for _ in 0..m {
            values.extend_from_slice(self.atom(index.sample(rng)));
        }
        SampleSet::from_flat(self.dim, values, None)
    }
}

/// Observed sample points, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    values: Vec<f64>,
    seed: Option<u64>,
}

impl SampleSet {
    /// Dimension is taken from the first point; mixed dimensions are rejected.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| KellyError::domain("sample set is empty"))?;
        let mut flat = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.len() != dim {
                return Err(KellyError::DimensionMismatch { expected: dim, got: p.len() });
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat, None)
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(1, values, None)
    }

    pub fn from_flat(dim: usize, values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(KellyError::domain("sample dimension must be at least 1"));
        }
        if values.is_empty() {
            return Err(KellyError::domain("sample set is empty"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(KellyError::domain("sample buffer is not a whole number of points"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(KellyError::domain("samples must be finite"));
        }
        Ok(Self { dim, values, seed })
    }

    /// Reads one sample per row, `d` comma-separated fields. Lines starting
    /// with `#` are skipped, which covers an optional header.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(source);
        let mut dim = None;
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| KellyError::Parse { row, message: e.to_string() })?;
            let d = *dim.get_or_insert(record.len());
            if record.len() != d {
                return Err(KellyError::Parse {
                    row,
                    message: format!("expected {d} fields, found {}", record.len()),
                });
            }
            for field in record.iter() {
                let x: f64 = field.parse().map_err(|_| KellyError::Parse {
                    row,
                    message: format!("not a number: {field:?}"),
                })?;
                if !x.is_finite() {
                    return Err(KellyError::Parse { row, message: format!("non-finite value {field:?}") });
                }
                values.push(x);
            }
        }
        Self::from_flat(dim.unwrap_or(1), values, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn flat_values(&self) -> &[f64] {
        &self.values
    }
}

/// Named theoretical return models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Even-money coin: `+1` with probability `p`, `-1` otherwise.
    BernoulliCoin { p: f64 },
    /// Win `1` with probability `1 - epsilon`, lose `x0` with probability `epsilon`.
    ToyBernoulli { epsilon: f64, x0: f64 },
    NormalReturns { mu: f64, sigma: f64 },
    /// Distribution with infinitely bad growth at `k_ref`, truncated to `n_terms` tail atoms.
    Pathological { k_ref: f64, n_terms: usize },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::BernoulliCoin { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(KellyError::domain(format!("coin probability {p} outside [0, 1]")));
                }
            }
            ModelSpec::ToyBernoulli { epsilon, x0 } => {
                if !(x0 > 0.0 && x0.is_finite()) {
                    return Err(KellyError::domain(format!("toy loss magnitude x0 = {x0} must be positive")));
                }
                if !(epsilon > 0.0 && epsilon < 1.0 / (1.0 + x0)) {
                    return Err(KellyError::domain(format!(
                        "toy loss probability {epsilon} outside (0, 1/(1+x0)) = (0, {})",
                        1.0 / (1.0 + x0)
                    )));
                }
            }
            ModelSpec::NormalReturns { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(KellyError::domain(format!("normal model needs finite mu and sigma > 0, got ({mu}, {sigma})")));
                }
            }
            ModelSpec::Pathological { k_ref, n_terms } => {
                if !(k_ref > 0.0 && k_ref < 1.0) {
                    return Err(KellyError::domain(format!("pathological reference fraction {k_ref} outside (0, 1)")));
                }
                if n_terms == 0 {
                    return Err(KellyError::domain("pathological truncation needs at least one term"));
                }
            }
        }
        Ok(())
    }

    /// Draws `m` returns from the model.
    pub fn sample(&self, m: usize, seed: u64) -> Result<SampleSet> {
        self.validate()?;
        match *self {
            ModelSpec::NormalReturns { mu, sigma } => gaussian_samples(mu, sigma, m, seed),
            _ => {
                let mut rng = rng_from_seed(seed);
                let mut s = from_spec(self)?.sample(m, &mut rng)?;
                s.seed = Some(seed);
                Ok(s)
            }
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::BernoulliCoin { p } => write!(f, "coin:{p}"),
            ModelSpec::ToyBernoulli { epsilon, x0 } => write!(f, "toy:{epsilon},{x0}"),
            ModelSpec::NormalReturns { mu, sigma } => write!(f, "normal:{mu},{sigma}"),
            ModelSpec::Pathological { k_ref, n_terms } => write!(f, "pathological:{k_ref},{n_terms}"),
        }
    }
}

/// Parses `name:param1,param2`, e.g. `coin:0.75`, `toy:0.001,100`,
/// `normal:4,1`, `pathological:0.5,100`.
impl FromStr for ModelSpec {
    type Err = KellyError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<&str> = params.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        let float = |i: usize| -> Result<f64> {
            nums.get(i)
                .ok_or_else(|| KellyError::domain(format!("model {name:?} is missing parameter {}", i + 1)))?
                .parse::<f64>()
                .map_err(|_| KellyError::domain(format!("bad parameter {:?} in model {s:?}", nums[i])))
        };
        let arity = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(KellyError::domain(format!("model {name:?} takes {n} parameter(s), got {}", nums.len())))
            }
        };
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "coin" | "bernoulli" => {
                arity(1)?;
                ModelSpec::BernoulliCoin { p: float(0)? }
            }
            "toy" => {
                arity(2)?;
                ModelSpec::ToyBernoulli { epsilon: float(0)?, x0: float(1)? }
            }
            "normal" | "gaussian" => {
                arity(2)?;
                ModelSpec::NormalReturns { mu: float(0)?, sigma: float(1)? }
            }
            "pathological" => {
                arity(2)?;
                let n = nums[1]
                    .parse::<usize>()
                    .map_err(|_| KellyError::domain(format!("bad term count {:?}", nums[1])))?;
                ModelSpec::Pathological { k_ref: float(0)?, n_terms: n }
            }
            other => return Err(KellyError::domain(format!("unknown model {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `theta = 1/2 + sum 1/k^2 = 1/2 + pi^2/6`, the normalizer of the pathological model.
pub fn pathological_theta() -> f64 {
    0.5 + PI * PI / 6.0
}

/// Exact-value merge of samples into a PMF with weights `multiplicity / m`.
///
/// Atoms come out in lexicographic order, so the result does not depend on
/// sample order.
pub fn empirical_from_samples(samples: &SampleSet) -> Result<DiscreteDistribution> {
    let m = samples.len();
    if m == 0 {
        return Err(KellyError::domain("sample set is empty"));
    }
    let dim = samples.dim();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&a, &b| lex_cmp(samples.point(a), samples.point(b)));

    let mut atoms = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut last: Option<&[f64]> = None;
    for &i in &order {
        let p = samples.point(i);
        match last {
            Some(prev) if prev == p => *counts.last_mut().expect("nonempty") += 1,
            _ => {
                // -0.0 + 0.0 == +0.0: both signed zeros merge into one canonical atom.
                atoms.extend(p.iter().map(|x| x + 0.0));
                counts.push(1);
                last = Some(p);
            }
        }
    }
    let inv = 1.0 / m as f64;
    let probs = counts.into_iter().map(|c| c as f64 * inv).collect();
    DiscreteDistribution::from_flat(dim, atoms, probs)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.partial_cmp(y).expect("finite samples"))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Finite-atom form of a named model.
pub fn from_spec(spec: &ModelSpec) -> Result<DiscreteDistribution> {
    spec.validate()?;
    match *spec {
        ModelSpec::BernoulliCoin { p } => DiscreteDistribution::scalar(&[(1.0, p), (-1.0, 1.0 - p)]),
        ModelSpec::ToyBernoulli { epsilon, x0 } => {
            DiscreteDistribution::scalar(&[(1.0, 1.0 - epsilon), (-x0, epsilon)])
        }
        ModelSpec::NormalReturns { .. } => Err(KellyError::ContinuousModel(spec.to_string())),
        ModelSpec::Pathological { k_ref, n_terms } => {
            let theta = pathological_theta();
            let mut atoms = Vec::with_capacity(n_terms + 1);
            let mut weights = Vec::with_capacity(n_terms + 1);
            atoms.push(1.0);
            weights.push(1.0 / (2.0 * theta));
            for k in 1..=n_terms {
                let k = k as f64;
                let mut x = (-k).exp_m1() / k_ref;
                // Past k ~ 37 the gap e^-k drops below one ulp and x rounds onto -1/k_ref.
                // Keep the atom on the first double with k_ref * x > -1.
                while k_ref * x <= -1.0 {
                    x = x.next_up();
                }
                atoms.push(x);
                weights.push(1.0 / (k * k * theta));
            }
            // Truncation: renormalize the retained weights.
            let total = compensated_sum(weights.iter().copied());
            let probs = weights.into_iter().map(|w| w / total).collect();
            DiscreteDistribution::from_flat(1, atoms, probs)
        }
    }
}

/// Standard normal noise vector of length `m` from `seed`.
pub fn standard_normal_noise(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `m` unclipped draws from `N(mu, sigma)`, computed as `mu + sigma * Z`
/// with `Z` from [`standard_normal_noise`].
pub fn gaussian_samples(mu: f64, sigma: f64, m: usize, seed: u64) -> Result<SampleSet> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(KellyError::domain(format!("sigma must be positive, got {sigma}")));
    }
    if !mu.is_finite() {
        return Err(KellyError::domain(format!("mu must be finite, got {mu}")));
    }
    if m == 0 {
        return Err(KellyError::domain("sample count must be at least 1"));
    }
    let values = standard_normal_noise(m, seed).into_iter().map(|z| mu + sigma * z).collect();
    SampleSet::from_flat(1, values, Some(seed))
}

/// Coordinate-wise `(min, max)` over atoms with positive probability.
pub fn support_extremes(dist: &DiscreteDistribution) -> (Vec<f64>, Vec<f64>) {
    let d = dist.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for a in dist.support() {
        for j in 0..d {
            lo[j] = lo[j].min(a[j]);
            hi[j] = hi[j].max(a[j]);
        }
    }
    (lo, hi)
}

/// Scalar convenience for [`support_extremes`].
pub fn scalar_extremes(dist: &DiscreteDistribution) -> Result<(f64, f64)> {
    if !dist.is_scalar() {
        return Err(KellyError::DimensionMismatch { expected: 1, got: dist.dim() });
    }
    let (lo, hi) = support_extremes(dist);
    Ok((lo[0], hi[0]))
}
