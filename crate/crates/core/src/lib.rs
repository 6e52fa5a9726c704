//! Log-optimal (Kelly) bet sizing.
//!
//! The crate evaluates the expected log-growth `g(K) = E[log(1 + K.X)]` over
//! finite-atom return distributions, maximizes it subject to the survival
//! requirement `1 + K.x >= 0`, and exposes the support-function feasibility
//! test `h(-K) <= 1` that every optimal fraction must satisfy.
//!
//! Modules:
//! - [`distributions`]: empirical PMFs, named models, seeded samplers.
//! - [`growth`]: the log-growth objective, its gradient, extended reals.
//! - [`constraints`]: support functions and admissible-fraction geometry.
//! - [`optimizer`]: scalar golden-section and projected-gradient solvers plus closed forms.
//! - [`simulator`]: wealth recursion, theory-vs-data comparisons, the mean sweep.
//! - [`ingest`]: tick prices to returns and summary statistics.
//! - [`cli`]: the `kelly` command-line front end.

pub mod cli;
pub mod constraints;
pub mod distributions;
pub mod error;
pub mod growth;
pub mod ingest;
pub mod optimizer;
pub mod simulator;
mod sum;

pub use constraints::{Interval, SupportSet};
pub use distributions::{DiscreteDistribution, ModelSpec, SampleSet};
pub use error::{KellyError, Result};
pub use growth::{ExtendedReal, FractionVector};
pub use optimizer::{ActiveBound, OptimizationResult, OptimizerConfig};
