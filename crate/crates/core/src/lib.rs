//! Optimality-gap estimation and statistical upper bounds for risk-averse
//! sample average approximation.
//!
//! Risk measures are handled in minimization form `ρ(Y) = min_u E[r(Y, u)]`.
//! A candidate `x̂` is assessed by fitting the threshold `u` on a fresh sample
//! and plugging it into the candidate term, which makes the gap estimator
//! biased upward, so risk-neutral bound procedures apply.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod bounds;
pub mod error;
pub mod gap;
pub mod oracle;
pub mod problems;
pub mod risk;
pub mod sampling;
pub mod scalar;
pub mod stats;
pub mod study;

pub use bounds::{BoundReport, Procedure, ReplicationPlan};
pub use error::{Error, Result};
pub use gap::{GapEstimate, GapMode};
pub use oracle::{Estimator, ExactSolution};
pub use problems::{Decision, DecisionSpace, ProblemInstance};
pub use risk::{RiskSpec, SpectralMeasure, UCertificate};
pub use sampling::{FiniteDistribution, Sample, StreamKey};
pub use scalar::Scalar;

pub type RiskSpec64 = RiskSpec<f64>;
pub type SpectralMeasure64 = SpectralMeasure<f64>;
pub type UCertificate64 = UCertificate<f64>;
pub type FiniteDistribution64 = FiniteDistribution<f64>;
pub type Sample64 = Sample<f64>;
pub type Decision64 = Decision<f64>;
pub type ProblemInstance64 = ProblemInstance<f64>;
pub type GapEstimate64 = GapEstimate<f64>;
pub type BoundReport64 = BoundReport<f64>;
pub type ExactSolution64 = ExactSolution<f64>;

pub type RiskSpec32 = RiskSpec<f32>;
pub type ProblemInstance32 = ProblemInstance<f32>;
pub type GapEstimate32 = GapEstimate<f32>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
