//! Carbon-aware design-space exploration for DNN inference accelerators.
//!
//! The toolkit couples four models and two search engines:
//!
//! - [`carbon`]: embodied carbon of a die from fab parameters, a
//!   negative-binomial yield model, and wasted wafer silicon.
//! - [`approxmul`]: gate-level approximate multipliers — construction,
//!   pruning and precision scaling, exhaustive error characterization, and
//!   an NSGA-II search for the (area, MRED) Pareto front.
//! - [`perf`]: an analytical tiling model that maps convolutional and fully
//!   connected layers onto a spatial PE array and predicts cycles, frame
//!   rate, and die area.
//! - [`accuracy`]: estimated top-1 accuracy drop of a network when built on
//!   an approximate multiplier.
//! - [`optimizer`]: minimizes the carbon-delay product `embodied x latency`
//!   under frame-rate and accuracy constraints, by genetic search or
//!   exhaustive scan.
//!
//! Numeric models ([`carbon`], [`accuracy`], and the CDP objective) are
//! generic over the float type via [`scalar::Scalar`]; the aliases below fix
//! the crate-default `f64` instantiations. The netlist and cycle machinery
//! is integer-based and has no scalar parameter.
//!
//! Everything is deterministic: searches take explicit seeds, iteration
//! orders are fixed, and repeated runs produce byte-identical artifacts
//! modulo the run manifest.

pub mod accuracy;
pub mod approxmul;
pub mod carbon;
pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod optimizer;
pub mod perf;
pub mod scalar;

pub use error::{Error, Result};

/// Crate-default (`f64`) technology-node parameters.
pub type TechNode = carbon::TechNodeParams<f64>;
/// Crate-default (`f64`) embodied-carbon breakdown.
pub type CarbonBreakdown = carbon::CarbonResult<f64>;
/// Crate-default (`f64`) accuracy estimator.
pub type Accuracy = accuracy::AccuracyModel<f64>;
