//! Skew random walk market models: statistics, simulation, calibration,
//! and complete-market lattice pricing.
//!
//! The crate is organized around one modelling pipeline:
//!
//! 1. [`skew_stats`] — closed-form skew-normal and skew-Brownian-motion
//!    statistics plus exact samplers for their laws.
//! 2. [`skew_walk`] — the discrete skew random walk, its ensemble moment
//!    diagnostics, and the cadlag embedding into continuous time.
//! 3. [`market_data`] — CSV price-series loading, log-return
//!    computation, and deterministic result serialization.
//! 4. [`calibration`] — recovering walk parameters from return series:
//!    ensemble-search fits, rolling-window estimates, and constrained
//!    least squares given a fixed skewness.
//! 5. [`imspt_lattice`] — the two-driver quadrinomial pricing lattice
//!    for three correlated assets sharing one skewness parameter, with
//!    risk-neutral branch weights, hedging deltas, and European pricing.
//! 6. [`baseline_trees`] — classical one-driver binomial benchmarks the
//!    lattice is compared against.
//!
//! Shared scalar routines (normal CDF, Owen's T, quadrature, small dense
//! solves, KS statistics) live in [`numerics`]; every fallible operation
//! returns [`error::Error`].

pub mod baseline_trees;
pub mod calibration;
pub mod error;
pub mod imspt_lattice;
pub mod market_data;
pub mod numerics;
pub mod skew_stats;
pub mod skew_walk;

pub use calibration::{CalibrationResult, RollingCalibration};
pub use error::{Error, Result};
pub use baseline_trees::{BaselineTree, TreePricing};
pub use imspt_lattice::{
    AssetSpec, BranchProbabilities, HedgingDeltas, LatticeNode, MarketSpec, MartingaleReport,
    OptionKind, PriceSurface, PricingResult, RainbowPayoff,
};
pub use skew_stats::{SbmMoments, SkewParams};
pub use skew_walk::{EnsembleMomentReport, SrwPath, ZeroOccurrenceStats};
