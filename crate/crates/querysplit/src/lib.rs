//! Interference-aware experiment splits from search-query reports.
//!
//! Paid-search A/B tests cannot randomize on anonymized searchers, and
//! randomizing on individual products lets treatment and control ads meet
//! in the same auctions, so spillover contaminates naive product splits.
//! This crate builds the query–product interference graph from publisher
//! query reports, projects it onto products with a damped min/max weight
//! function, partitions the product graph into balanced low-leakage
//! clusters, randomizes clusters into arms with stratification and spend
//! matching, and analyzes outcomes with difference-in-differences under
//! cluster-robust inference. A simulator with known ground truth
//! demonstrates the bias of product-level splits under spillover.
//!
//! Pipeline stages (each is a module and a CLI subcommand):
//!
//! 1. [`ingest`] — query reports → bipartite query–product graph.
//! 2. [`project`] — bipartite graph → weighted product graph.
//! 3. [`partition`] — balanced k-way clusters, leakage-vs-k sweep.
//! 4. [`design`] — stratified, spend-matched cluster randomization.
//! 5. [`infer`] — DID estimation and simulation-based power analysis.
//! 6. [`simulate`] — synthetic markets and the design-comparison
//!    meta-experiment.
//!
//! The numeric core is generic over the floating-point type via
//! [`scalar::Scalar`]; the aliases below fix the `f64` instantiations the
//! CLI uses.

pub mod cli;
pub mod design;
pub mod error;
pub mod infer;
pub mod ingest;
pub mod partition;
pub mod project;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Product graph with `f64` weights (the pipeline default).
pub type ProductGraph64 = project::ProductGraph<f64>;
/// Product graph with `f32` weights.
pub type ProductGraph32 = project::ProductGraph<f32>;
/// Partition of an `f64`-weighted product graph.
pub type Partition64 = partition::Partition<f64>;
/// Leakage-vs-k curve for `f64` partitions.
pub type LeakageCurve64 = partition::LeakageCurve<f64>;
/// DID result at `f64` precision.
pub type DidResult64 = infer::DidResult<f64>;
