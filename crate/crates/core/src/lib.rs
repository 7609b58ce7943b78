//! Simulation and verification workbench for normal approximation of
//! partial sums of weakly dependent stationary sequences.
//!
//! The crate is organized around the experiment pipeline:
//!
//! * [`innovations`] — deterministic, index-addressable innovation streams
//!   and the coupled (primed) copies used by the dependence diagnostics;
//! * [`processes`] — stationary Bernoulli-shift families (linear, dyadic
//!   map, iterated random functions, GARCH, Volterra, blocked m-dependent)
//!   as path generators;
//! * [`dependence`] — coupling-coefficient estimation and decay
//!   classification;
//! * [`variance`] — autocovariance tables, long-run and finite-n variance
//!   identities;
//! * [`blocks`] — m-dependent approximation, block decomposition and the
//!   conditional-variance identities;
//! * [`distances`] — empirical distribution distances (uniform, integrated,
//!   nonuniform, functional/moment gaps, tails) with exact small-case
//!   oracles;
//! * [`rates`] — convergence-rate sweeps and log-log slope fits;
//! * [`runner`] — config-driven deterministic experiment orchestration.

pub mod blocks;
pub mod dependence;
pub mod distances;
pub mod gaussian;
pub mod innovations;
pub mod processes;
pub mod rates;
pub mod runner;
pub mod stats;
pub mod variance;
