//! Uncertainty model: volatility band, time grids, and the family of
//! adapted volatility strategies that stands in for the abstract family of
//! laws driving the upper expectation.
//!
//! The finite strategy family is an inner approximation: a Monte Carlo
//! supremum over it is a *lower* bound on the true upper expectation. The
//! nonlinear-heat PDE solver (`gheat`) provides the matching reference
//! value from the other side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::ControlStream;

/// Volatility band `[sigma_low, sigma_high]` with the derived degeneracy
/// constants `lambda = sigma_low²` and `Lambda = sigma_high²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityBand {
    pub sigma_low: f64,
    pub sigma_high: f64,
}

impl VolatilityBand {
    /// Requires `0 ≤ sigma_low ≤ sigma_high` and `sigma_high > 0`.
    pub fn new(sigma_low: f64, sigma_high: f64) -> Result<Self> {
        if !sigma_low.is_finite() || !sigma_high.is_finite() {
            return Err(Error::invalid("band endpoints must be finite"));
        }
        if sigma_low < 0.0 {
            return Err(Error::invalid(format!(
                "sigma_low must be >= 0, got {sigma_low}"
            )));
        }
        if sigma_high <= 0.0 {
            return Err(Error::invalid(format!(
                "sigma_high must be > 0, got {sigma_high}"
            )));
        }
        if sigma_low > sigma_high {
            return Err(Error::invalid(format!(
                "band is empty: sigma_low {sigma_low} > sigma_high {sigma_high}"
            )));
        }
        Ok(VolatilityBand {
            sigma_low,
            sigma_high,
        })
    }

    /// `lambda = sigma_low²`, the lower variance bound.
    pub fn lambda(&self) -> f64 {
        self.sigma_low * self.sigma_low
    }

    /// `Lambda = sigma_high²`, the upper variance bound.
    pub fn lambda_cap(&self) -> f64 {
        self.sigma_high * self.sigma_high
    }

    /// The generator `G(A) = ½(Λ·A⁺ − λ·A⁻)` of the nonlinear heat equation.
    pub fn g(&self, a: f64) -> f64 {
        0.5 * (self.lambda_cap() * a.max(0.0) - self.lambda() * (-a).max(0.0))
    }

    pub fn contains(&self, sigma: f64) -> bool {
        sigma >= self.sigma_low && sigma <= self.sigma_high
    }

    pub fn clamp(&self, sigma: f64) -> f64 {
        sigma.clamp(self.sigma_low, self.sigma_high)
    }
}

/// Uniform partition `0 = t_0 < t_1 < … < t_N = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub n_steps: usize,
    #[serde(skip)]
    nodes: Vec<f64>,
}

impl TimeGrid {
    fn build(horizon: f64, n_steps: usize) -> Self {
        let nodes = (0..=n_steps)
            .map(|j| horizon * j as f64 / n_steps as f64)
            .collect();
        TimeGrid {
            horizon,
            n_steps,
            nodes,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `t_j`.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// `t_{j+1} − t_j`; uniform, so this is `mesh()` for every `j`.
    #[inline]
    pub fn dt(&self, j: usize) -> f64 {
        self.nodes[j + 1] - self.nodes[j]
    }

    /// Mesh `μ` of the partition, `T/N`.
    pub fn mesh(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Locate `t` as a grid node within `mesh/100`, or report the mismatch.
    pub fn locate(&self, t: f64) -> Result<usize> {
        let approx = t / self.mesh();
        let j = approx.round() as i64;
        if j < 0 || j > self.n_steps as i64 {
            return Err(Error::GridMismatch(format!(
                "time {t} lies outside [0, {}]",
                self.horizon
            )));
        }
        let j = j as usize;
        if (self.nodes[j] - t).abs() > self.mesh() / 100.0 {
            return Err(Error::GridMismatch(format!(
                "time {t} is not a grid node (nearest node {}, mesh {})",
                self.nodes[j],
                self.mesh()
            )));
        }
        Ok(j)
    }
}

/// `make_uniform_grid(T, N)`: the uniform partition with `N + 1` nodes.
pub fn make_uniform_grid(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    if n_steps == 0 {
        return Err(Error::invalid("grid needs at least one step"));
    }
    Ok(TimeGrid::build(horizon, n_steps))
}

/// Feedback rules map `(t, M_t)` to a volatility; only current state is
/// consulted, so adaptedness holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FeedbackRule {
    /// `sigma_high` when `m ≥ pivot`, else `sigma_low`.
    BangBangUp { pivot: f64 },
    /// `sigma_low` when `m ≥ pivot`, else `sigma_high`.
    BangBangDown { pivot: f64 },
}

/// One adapted volatility control; each strategy realizes one law in the
/// family the upper expectation ranges over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlStrategy {
    Constant { sigma: f64 },
    /// Right-open schedule: `sigma_k` applies on `[time_k, time_{k+1})`,
    /// the last value up to the horizon. Times must start at 0 and strictly
    /// increase.
    PiecewiseDeterministic { times: Vec<f64>, sigmas: Vec<f64> },
    Feedback(FeedbackRule),
    /// Flips between the band endpoints at exponential times with the given
    /// intensity; `seed_offset` decorrelates several switching strategies
    /// within one family.
    RandomSwitching { intensity: f64, seed_offset: u64 },
}

impl ControlStrategy {
    /// Static validation (schedule shape, finiteness). Band membership of
    /// emitted values is enforced per step during simulation, where strict
    /// mode turns clamping into a domain error.
    pub fn validate(&self) -> Result<()> {
        match self {
            ControlStrategy::Constant { sigma } => {
                if !sigma.is_finite() {
                    return Err(Error::invalid("constant sigma must be finite"));
                }
            }
            ControlStrategy::PiecewiseDeterministic { times, sigmas } => {
                if times.is_empty() || times.len() != sigmas.len() {
                    return Err(Error::invalid(
                        "schedule needs matching, nonempty times and sigmas",
                    ));
                }
                if times[0] != 0.0 {
                    return Err(Error::invalid("schedule must start at time 0"));
                }
                if times.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("schedule times must strictly increase"));
                }
                if sigmas.iter().any(|s| !s.is_finite()) {
                    return Err(Error::invalid("schedule sigmas must be finite"));
                }
            }
            ControlStrategy::Feedback(rule) => {
                let (FeedbackRule::BangBangUp { pivot } | FeedbackRule::BangBangDown { pivot }) =
                    rule;
                if !pivot.is_finite() {
                    return Err(Error::invalid("feedback pivot must be finite"));
                }
            }
            ControlStrategy::RandomSwitching { intensity, .. } => {
                if !(*intensity >= 0.0) || !intensity.is_finite() {
                    return Err(Error::invalid("switch intensity must be >= 0 and finite"));
                }
            }
        }
        Ok(())
    }

    /// Per-path mutable state (only random switching carries any).
    pub(crate) fn init_state(&self, band: &VolatilityBand, seed: u64, path: u64) -> StrategyState {
        match self {
            ControlStrategy::RandomSwitching { seed_offset, .. } => StrategyState::Switching {
                current: band.sigma_high,
                noise: ControlStream::for_path(seed, *seed_offset, path),
            },
            _ => StrategyState::Stateless,
        }
    }

    /// Emitted volatility at `(t_j, M_{t_j})` before band enforcement.
    pub(crate) fn sigma_at(
        &self,
        t: f64,
        m: f64,
        dt: f64,
        band: &VolatilityBand,
        state: &mut StrategyState,
    ) -> f64 {
        match self {
            ControlStrategy::Constant { sigma } => *sigma,
            ControlStrategy::PiecewiseDeterministic { times, sigmas } => {
                // Last schedule entry with time <= t.
                let idx = match times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
                    Ok(i) => i,
                    Err(0) => 0,
                    Err(i) => i - 1,
                };
                sigmas[idx]
            }
            ControlStrategy::Feedback(FeedbackRule::BangBangUp { pivot }) => {
                if m >= *pivot {
                    band.sigma_high
                } else {
                    band.sigma_low
                }
            }
            ControlStrategy::Feedback(FeedbackRule::BangBangDown { pivot }) => {
                if m >= *pivot {
                    band.sigma_low
                } else {
                    band.sigma_high
                }
            }
            ControlStrategy::RandomSwitching { intensity, .. } => {
                let StrategyState::Switching { current, noise } = state else {
                    unreachable!("switching strategy initialized without state");
                };
                // Flip with the exponential-clock probability 1 − e^{−λΔt}.
                let p_flip = -(-intensity * dt).exp_m1();
                if noise.next_uniform() < p_flip {
                    *current = if *current == band.sigma_high {
                        band.sigma_low
                    } else {
                        band.sigma_high
                    };
                }
                *current
            }
        }
    }

    /// Canonical behavioral key used for family deduplication: strategies
    /// that emit identical volatilities under the given band collapse.
    fn dedup_key(&self, band: &VolatilityBand) -> String {
        let degenerate = band.sigma_low == band.sigma_high;
        match self {
            ControlStrategy::Constant { sigma } => format!("c:{}", sigma.to_bits()),
            ControlStrategy::PiecewiseDeterministic { times, sigmas } => {
                if sigmas.windows(2).all(|w| w[0] == w[1]) {
                    format!("c:{}", sigmas[0].to_bits())
                } else {
                    format!("p:{times:?}:{sigmas:?}")
                }
            }
            ControlStrategy::Feedback(rule) if degenerate => {
                let _ = rule;
                format!("c:{}", band.sigma_high.to_bits())
            }
            ControlStrategy::Feedback(FeedbackRule::BangBangUp { pivot }) => {
                format!("bu:{}", pivot.to_bits())
            }
            ControlStrategy::Feedback(FeedbackRule::BangBangDown { pivot }) => {
                format!("bd:{}", pivot.to_bits())
            }
            ControlStrategy::RandomSwitching { .. } if degenerate => {
                format!("c:{}", band.sigma_high.to_bits())
            }
            ControlStrategy::RandomSwitching {
                intensity,
                seed_offset,
            } => format!("rs:{}:{seed_offset}", intensity.to_bits()),
        }
    }
}

pub(crate) enum StrategyState {
    Stateless,
    Switching { current: f64, noise: ControlStream },
}

/// A labeled strategy inside a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledStrategy {
    pub label: String,
    pub strategy: ControlStrategy,
}

/// Ordered, deduplicated, uniquely-labeled collection of strategies. The
/// upper expectation is the maximum of per-strategy means over this family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFamily {
    pub label: String,
    pub band: VolatilityBand,
    strategies: Vec<LabeledStrategy>,
}

impl StrategyFamily {
    pub fn new(label: impl Into<String>, band: VolatilityBand) -> Self {
        StrategyFamily {
            label: label.into(),
            band,
            strategies: Vec::new(),
        }
    }

    /// Push a strategy unless a behavioral duplicate is already present.
    /// Labels must be unique; duplicates are an invalid-argument error.
    pub fn push(&mut self, label: impl Into<String>, strategy: ControlStrategy) -> Result<()> {
        strategy.validate()?;
        let label = label.into();
        let key = strategy.dedup_key(&self.band);
        if self
            .strategies
            .iter()
            .any(|s| s.strategy.dedup_key(&self.band) == key)
        {
            return Ok(()); // behavioral duplicate: silently deduplicated
        }
        if self.strategies.iter().any(|s| s.label == label) {
            return Err(Error::invalid(format!("duplicate strategy label {label:?}")));
        }
        self.strategies.push(LabeledStrategy { label, strategy });
        Ok(())
    }

    pub fn strategies(&self) -> &[LabeledStrategy] {
        &self.strategies
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&LabeledStrategy> {
        self.strategies.iter().find(|s| s.label == label)
    }
}

/// The default family: `k` equally spaced constants (band endpoints
/// included) plus the two bang-bang feedback strategies around `pivot = 0`,
/// behaviorally deduplicated (a degenerate band collapses to one strategy).
pub fn default_strategy_family(band: VolatilityBand, k: usize) -> Result<StrategyFamily> {
    default_strategy_family_with_pivot(band, k, 0.0)
}

pub fn default_strategy_family_with_pivot(
    band: VolatilityBand,
    k: usize,
    pivot: f64,
) -> Result<StrategyFamily> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "default family needs k >= 2 constants, got {k}"
        )));
    }
    if !pivot.is_finite() {
        return Err(Error::invalid("bang-bang pivot must be finite"));
    }
    let mut family = StrategyFamily::new(format!("default_k{k}"), band);
    for i in 0..k {
        // Convex blend hits both endpoints exactly (theta = 0 and 1).
        let theta = i as f64 / (k - 1) as f64;
        let sigma = band.clamp(band.sigma_low * (1.0 - theta) + band.sigma_high * theta);
        family.push(
            format!("const_{sigma:.6}"),
            ControlStrategy::Constant { sigma },
        )?;
    }
    family.push(
        "bang_up",
        ControlStrategy::Feedback(FeedbackRule::BangBangUp { pivot }),
    )?;
    family.push(
        "bang_down",
        ControlStrategy::Feedback(FeedbackRule::BangBangDown { pivot }),
    )?;
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_rejects_bad_endpoints() {
        assert!(VolatilityBand::new(-0.1, 1.0).is_err());
        assert!(VolatilityBand::new(0.5, 0.4).is_err());
        assert!(VolatilityBand::new(0.0, 0.0).is_err());
        assert!(VolatilityBand::new(f64::NAN, 1.0).is_err());
        assert!(VolatilityBand::new(0.0, 1.0).is_ok()); // lambda = 0 allowed
    }

    #[test]
    fn g_function_matches_definition() {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        assert_eq!(band.g(2.0), 0.5 * 1.0 * 2.0);
        assert_eq!(band.g(-2.0), 0.5 * 0.25 * -2.0);
        assert_eq!(band.g(0.0), 0.0);
    }

    #[test]
    fn uniform_grid_nodes() {
        let grid = make_uniform_grid(1.0, 4).unwrap();
        assert_eq!(grid.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid.mesh(), 0.25);

        let degenerate = make_uniform_grid(2.0, 1).unwrap();
        assert_eq!(degenerate.nodes(), &[0.0, 2.0]);

        let fine = make_uniform_grid(1.0, 4096).unwrap();
        assert_eq!(fine.mesh(), 1.0 / 4096.0);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(make_uniform_grid(0.0, 4).is_err());
        assert!(make_uniform_grid(-1.0, 4).is_err());
        assert!(make_uniform_grid(1.0, 0).is_err());
    }

    #[test]
    fn grid_refinement_nests() {
        let coarse = make_uniform_grid(1.0, 64).unwrap();
        let fine = make_uniform_grid(1.0, 128).unwrap();
        for j in 0..=64 {
            assert_eq!(coarse.node(j).to_bits(), fine.node(2 * j).to_bits());
        }
    }

    #[test]
    fn locate_snaps_and_rejects() {
        let grid = make_uniform_grid(1.0, 4).unwrap();
        assert_eq!(grid.locate(0.5).unwrap(), 2);
        assert_eq!(grid.locate(0.5 + 1e-6).unwrap(), 2);
        assert!(grid.locate(0.6).is_err());
        assert!(grid.locate(1.5).is_err());
    }

    #[test]
    fn default_family_endpoints_and_dedup() {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let fam = default_strategy_family(band, 2).unwrap();
        assert_eq!(fam.len(), 4); // two constants + two bang-bangs
        assert!(fam.get("const_0.500000").is_some());
        assert!(fam.get("const_1.000000").is_some());
        assert!(fam.get("bang_up").is_some());
        assert!(fam.get("bang_down").is_some());

        let fam3 = default_strategy_family(band, 3).unwrap();
        let sigmas: Vec<f64> = fam3
            .strategies()
            .iter()
            .filter_map(|s| match s.strategy {
                ControlStrategy::Constant { sigma } => Some(sigma),
                _ => None,
            })
            .collect();
        assert_eq!(sigmas, vec![0.5, 0.75, 1.0]);

        let degenerate = VolatilityBand::new(1.0, 1.0).unwrap();
        let fam1 = default_strategy_family(degenerate, 3).unwrap();
        assert_eq!(fam1.len(), 1); // everything collapses to Constant(1)
    }

    #[test]
    fn default_family_rejects_small_k() {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        assert!(default_strategy_family(band, 1).is_err());
    }

    #[test]
    fn family_size_matches_default_fixture() {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let fam = default_strategy_family(band, 5).unwrap();
        assert_eq!(fam.len(), 7); // 5 constants + 2 bang-bangs
    }

    #[test]
    fn piecewise_schedule_validation() {
        let ok = ControlStrategy::PiecewiseDeterministic {
            times: vec![0.0, 0.5],
            sigmas: vec![0.5, 1.0],
        };
        assert!(ok.validate().is_ok());

        let bad_start = ControlStrategy::PiecewiseDeterministic {
            times: vec![0.1, 0.5],
            sigmas: vec![0.5, 1.0],
        };
        assert!(bad_start.validate().is_err());

        let not_increasing = ControlStrategy::PiecewiseDeterministic {
            times: vec![0.0, 0.0],
            sigmas: vec![0.5, 1.0],
        };
        assert!(not_increasing.validate().is_err());
    }

    #[test]
    fn piecewise_lookup_is_right_open() {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let strat = ControlStrategy::PiecewiseDeterministic {
            times: vec![0.0, 0.5],
            sigmas: vec![0.5, 1.0],
        };
        let mut state = StrategyState::Stateless;
        assert_eq!(strat.sigma_at(0.0, 0.0, 0.1, &band, &mut state), 0.5);
        assert_eq!(strat.sigma_at(0.49, 0.0, 0.1, &band, &mut state), 0.5);
        assert_eq!(strat.sigma_at(0.5, 0.0, 0.1, &band, &mut state), 1.0);
        assert_eq!(strat.sigma_at(0.9, 0.0, 0.1, &band, &mut state), 1.0);
    }

    #[test]
    fn bang_bang_uses_closed_upper_branch() {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let up = ControlStrategy::Feedback(FeedbackRule::BangBangUp { pivot: 0.0 });
        let mut state = StrategyState::Stateless;
        assert_eq!(up.sigma_at(0.0, 0.0, 0.1, &band, &mut state), 1.0); // m = pivot
        assert_eq!(up.sigma_at(0.0, -0.1, 0.1, &band, &mut state), 0.5);
        let down = ControlStrategy::Feedback(FeedbackRule::BangBangDown { pivot: 0.0 });
        assert_eq!(down.sigma_at(0.0, 0.0, 0.1, &band, &mut state), 0.5);
        assert_eq!(down.sigma_at(0.0, -0.1, 0.1, &band, &mut state), 1.0);
    }
}
