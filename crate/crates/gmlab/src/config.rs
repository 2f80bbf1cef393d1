//! Run configuration: one TOML-serializable struct that pins everything a
//! run depends on, so an echoed config plus a seed reproduces any output
//! byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{default_strategy_family_with_pivot, StrategyFamily, VolatilityBand};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GMLAB_OUT";

fn d_sigma_low() -> f64 {
    0.5
}
fn d_sigma_high() -> f64 {
    1.0
}
fn d_horizon() -> f64 {
    1.0
}
fn d_steps() -> usize {
    4096
}
fn d_steps_ladder() -> Vec<usize> {
    vec![1024, 4096, 16384]
}
fn d_family_size() -> usize {
    5
}
fn d_family_pivot() -> f64 {
    0.0
}
fn d_n_paths() -> usize {
    20_000
}
fn d_seed() -> u64 {
    42
}
fn d_true() -> bool {
    true
}
fn d_level_spacing_factor() -> f64 {
    0.02
}
fn d_level_span_factor() -> f64 {
    4.0
}
fn d_epsilon_ladder() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}
fn d_checks() -> Vec<String> {
    vec!["all".into()]
}
fn d_workers() -> usize {
    0
}

fn d_exact_rel() -> f64 {
    1e-9
}
fn d_mc_sigmas() -> f64 {
    3.0
}
fn d_occupation_rel() -> f64 {
    0.05
}
fn d_growth_fraction() -> f64 {
    0.05
}
fn d_tanaka_residual() -> f64 {
    0.02
}
fn d_tail_fraction() -> f64 {
    0.1
}
fn d_pde_tol() -> f64 {
    0.01
}
fn d_slope_margin() -> f64 {
    0.5
}

/// Pass/fail thresholds for the verification checks. Exact identities use
/// `exact_rel`; Monte Carlo comparisons use `mc_sigmas` standard errors
/// plus any stated absolute tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "d_exact_rel")]
    pub exact_rel: f64,
    #[serde(default = "d_mc_sigmas")]
    pub mc_sigmas: f64,
    #[serde(default = "d_occupation_rel")]
    pub occupation_rel: f64,
    #[serde(default = "d_growth_fraction")]
    pub growth_fraction: f64,
    #[serde(default = "d_tanaka_residual")]
    pub tanaka_residual: f64,
    #[serde(default = "d_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default = "d_pde_tol")]
    pub pde_tol: f64,
    /// Fitted regularity exponent must exceed `n − slope_margin`.
    #[serde(default = "d_slope_margin")]
    pub slope_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact_rel: d_exact_rel(),
            mc_sigmas: d_mc_sigmas(),
            occupation_rel: d_occupation_rel(),
            growth_fraction: d_growth_fraction(),
            tanaka_residual: d_tanaka_residual(),
            tail_fraction: d_tail_fraction(),
            pde_tol: d_pde_tol(),
            slope_margin: d_slope_margin(),
        }
    }
}

/// Full run configuration with defaults for every field; any TOML subset
/// is accepted and command-line flags override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "d_sigma_low")]
    pub sigma_low: f64,
    #[serde(default = "d_sigma_high")]
    pub sigma_high: f64,
    #[serde(default = "d_horizon")]
    pub horizon: f64,
    #[serde(default = "d_steps")]
    pub steps: usize,
    /// Grid refinement ladder (each entry must divide the largest).
    #[serde(default = "d_steps_ladder")]
    pub steps_ladder: Vec<usize>,
    /// Number of constant strategies in the default family (≥ 2).
    #[serde(default = "d_family_size")]
    pub family_size: usize,
    /// Switch point of the regime strategies in the default family.
    #[serde(default = "d_family_pivot")]
    pub family_pivot: f64,
    #[serde(default = "d_n_paths")]
    pub n_paths: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// Reject (rather than clamp) strategies that leave the band.
    #[serde(default = "d_true")]
    pub strict_band: bool,
    /// Level spacing as a multiple of σ̄√T.
    #[serde(default = "d_level_spacing_factor")]
    pub level_spacing_factor: f64,
    /// Level span as a multiple of σ̄√T (levels cover ±span).
    #[serde(default = "d_level_span_factor")]
    pub level_span_factor: f64,
    /// Occupation window ladder (decreasing).
    #[serde(default = "d_epsilon_ladder")]
    pub epsilon_ladder: Vec<f64>,
    /// Check names for `verify`, or the single entry "all".
    #[serde(default = "d_checks")]
    pub checks: Vec<String>,
    /// Output directory; empty means `$GMLAB_OUT` or `./gmlab-out`.
    #[serde(default)]
    pub out_dir: String,
    /// Worker threads (0 = all available cores).
    #[serde(default = "d_workers")]
    pub workers: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Validate everything before any compute.
    pub fn validate(&self) -> Result<()> {
        self.band()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be ≥ 1".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be ≥ 1".into()));
        }
        if self.family_size < 2 {
            return Err(Error::Config("family_size must be ≥ 2".into()));
        }
        if self.steps_ladder.is_empty()
            || self.steps_ladder.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(
                "steps_ladder must be nonempty and strictly increasing".into(),
            ));
        }
        let finest = *self.steps_ladder.last().unwrap();
        if self.steps_ladder.iter().any(|&n| n == 0 || finest % n != 0) {
            return Err(Error::Config(
                "every steps_ladder entry must divide the largest entry".into(),
            ));
        }
        if self.epsilon_ladder.is_empty()
            || self
                .epsilon_ladder
                .windows(2)
                .any(|w| w[0] <= w[1])
            || self.epsilon_ladder.iter().any(|&e| !(e > 0.0))
        {
            return Err(Error::Config(
                "epsilon_ladder must be positive and strictly decreasing".into(),
            ));
        }
        if !(self.level_spacing_factor > 0.0 && self.level_span_factor > 0.0) {
            return Err(Error::Config("level grid factors must be positive".into()));
        }
        Ok(())
    }

    pub fn band(&self) -> Result<VolatilityBand> {
        VolatilityBand::new(self.sigma_low, self.sigma_high)
            .map_err(|e| Error::Config(format!("band: {e}")))
    }

    pub fn family(&self) -> Result<StrategyFamily> {
        default_strategy_family_with_pivot(self.band()?, self.family_size, self.family_pivot)
    }

    /// Resolved output directory: explicit field, else `$GMLAB_OUT`, else
    /// `./gmlab-out`.
    pub fn resolve_out_dir(&self) -> PathBuf {
        if !self.out_dir.is_empty() {
            return PathBuf::from(&self.out_dir);
        }
        if let Ok(env) = std::env::var(OUT_DIR_ENV) {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        PathBuf::from("gmlab-out")
    }
}
