//! Numerical laboratory for martingales driven by an uncertain volatility.
//!
//! The model object is `M_t = ∫₀ᵗ σ_s dW_s` where the volatility process
//! `σ` is adapted but unknown beyond a band `σ_low ≤ σ_s ≤ σ_high`. Instead
//! of one probability measure there is a whole family (one per admissible
//! volatility control), and the natural summary of a payoff `X` is the
//! worst/best-case pair
//!
//! ```text
//!   lower(X) = inf over controls of E[X],   upper(X) = sup over controls of E[X].
//! ```
//!
//! This crate simulates such martingales, estimates the sublinear
//! upper/lower expectations over finite strategy families, builds level
//! occupation densities (local time) with two independent estimators,
//! checks the pathwise change-of-variable identity for convex functions,
//! and cross-validates the Monte Carlo answers against a nonlinear-heat
//! finite-difference oracle. Every statistic is bitwise reproducible for a
//! fixed seed, independent of thread count.
//!
//! Module map:
//!
//! * [`model`] — volatility band, time grids, volatility control strategies;
//! * [`path`] — Euler path engine (materialized or streaming), exact
//!   quadratic-variation compensator, refinement ladders;
//! * [`calculus`] — stochastic integrals of simple/state-dependent
//!   integrands, norms, truncation diagnostics;
//! * [`local_time`] — level-crossing (Tanaka-type) and occupation-time
//!   estimators of local time, level regularity checks;
//! * [`expectation`] — upper/lower expectation over strategy families,
//!   sublinearity axioms;
//! * [`gheat`] — finite-difference solver for the nonlinear heat equation
//!   that prices payoffs under volatility uncertainty (reference oracle);
//! * [`verify`] — the named-check registry behind `gmlab verify`;
//! * [`config`], [`report`] — TOML run configuration and atomic JSON/CSV
//!   artifact writers.

pub mod calculus;
pub mod config;
pub mod error;
pub mod expectation;
pub mod gheat;
pub mod local_time;
pub mod model;
pub mod path;
pub mod report;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    default_strategy_family, make_uniform_grid, ControlStrategy, FeedbackRule, StrategyFamily,
    TimeGrid, VolatilityBand,
};
pub use path::{simulate_paths, PathBundle, PathSet, PathView, SimPlan};

/// Version stamp written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
