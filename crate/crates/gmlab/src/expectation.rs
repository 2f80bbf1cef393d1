//! Upper and lower expectations over a strategy family.
//!
//! With volatility known only up to a band, a payoff has a *range* of fair
//! values — one per admissible volatility control. This module estimates
//! the two ends by Monte Carlo:
//!
//! ```text
//!   upper = max over family of E[X under strategy],
//!   lower = min over family of E[X under strategy]  (= −upper of −X).
//! ```
//!
//! Every strategy is simulated from the same seed, so all estimates share
//! one noise sample: positive homogeneity and family-growth monotonicity
//! then hold *exactly* at the estimator level, not just in the limit.
//!
//! The reported `upper` is a **lower bound** on the true worst-case value:
//! a finite family can only under-explore the volatility controls. The
//! nonlinear-heat solver in [`crate::gheat`] provides the matching
//! outside reference.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_time::tanaka_at_level;
use crate::model::{StrategyFamily, TimeGrid};
use crate::path::{PathSet, PathView, SimPlan};
use crate::stats::mean_se;

/// A scalar functional of one simulated path.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathFunctional {
    /// Constant payoff (ignores the path).
    Constant { value: f64 },
    /// `M_T`
    Linear,
    /// `M_T²`
    Square,
    /// `−M_T²`
    NegSquare,
    /// `|M_T|`
    Abs,
    /// `sin(M_T)`
    Sin,
    /// `(M_T − K)⁺`
    Call { strike: f64 },
    /// `I{lo ≤ M_T < hi}`
    Indicator { lo: f64, hi: f64 },
    /// Terminal level-crossing local time at a level.
    LocalTimeAt { level: f64 },
    /// `factor · X`
    Scaled {
        factor: f64,
        inner: Box<PathFunctional>,
    },
    /// `X + Y`
    Sum {
        a: Box<PathFunctional>,
        b: Box<PathFunctional>,
    },
}

/// Payoff names accepted on the command line.
pub const PAYOFF_NAMES: &str =
    "linear | square | neg_square | abs | sin | call:K | indicator:LO:HI";

impl PathFunctional {
    /// Parse a command-line payoff name (`call:K` and `indicator:LO:HI`
    /// carry parameters).
    pub fn parse(name: &str) -> Result<Self> {
        let usage =
            |n: &str| Error::usage(format!("unknown payoff {n:?}; valid: {PAYOFF_NAMES}"));
        let mut parts = name.split(':');
        let head = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::usage(format!("payoff parameter {s:?} is not a number")))
        };
        let payoff = match (head, args.as_slice()) {
            ("linear", []) => PathFunctional::Linear,
            ("square", []) => PathFunctional::Square,
            ("neg_square", []) => PathFunctional::NegSquare,
            ("abs", []) => PathFunctional::Abs,
            ("sin", []) => PathFunctional::Sin,
            ("call", [k]) => PathFunctional::Call { strike: num(k)? },
            ("indicator", [lo, hi]) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo >= hi {
                    return Err(Error::usage(format!(
                        "indicator needs LO < HI, got {lo} and {hi}"
                    )));
                }
                PathFunctional::Indicator { lo, hi }
            }
            _ => return Err(usage(name)),
        };
        Ok(payoff)
    }

    pub fn name(&self) -> String {
        match self {
            PathFunctional::Constant { value } => format!("constant:{value}"),
            PathFunctional::Linear => "linear".into(),
            PathFunctional::Square => "square".into(),
            PathFunctional::NegSquare => "neg_square".into(),
            PathFunctional::Abs => "abs".into(),
            PathFunctional::Sin => "sin".into(),
            PathFunctional::Call { strike } => format!("call:{strike}"),
            PathFunctional::Indicator { lo, hi } => format!("indicator:{lo}:{hi}"),
            PathFunctional::LocalTimeAt { level } => format!("local_time:{level}"),
            PathFunctional::Scaled { factor, inner } => format!("{factor}*({})", inner.name()),
            PathFunctional::Sum { a, b } => format!("({})+({})", a.name(), b.name()),
        }
    }

    pub fn evaluate(&self, view: PathView<'_>) -> f64 {
        match self {
            PathFunctional::Constant { value } => *value,
            PathFunctional::Linear => view.terminal(),
            PathFunctional::Square => {
                let t = view.terminal();
                t * t
            }
            PathFunctional::NegSquare => {
                let t = view.terminal();
                -(t * t)
            }
            PathFunctional::Abs => view.terminal().abs(),
            PathFunctional::Sin => view.terminal().sin(),
            PathFunctional::Call { strike } => (view.terminal() - strike).max(0.0),
            PathFunctional::Indicator { lo, hi } => {
                let t = view.terminal();
                (*lo <= t && t < *hi) as u8 as f64
            }
            PathFunctional::LocalTimeAt { level } => tanaka_at_level(view, *level),
            PathFunctional::Scaled { factor, inner } => factor * inner.evaluate(view),
            PathFunctional::Sum { a, b } => a.evaluate(view) + b.evaluate(view),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        PathFunctional::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn plus(self, other: PathFunctional) -> Self {
        PathFunctional::Sum {
            a: Box::new(self),
            b: Box::new(other),
        }
    }
}

/// Per-strategy Monte Carlo estimate.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyEstimate {
    pub label: String,
    pub mean: f64,
    pub se: f64,
    pub n_paths: usize,
}

/// Upper/lower expectation estimate for one payoff.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub payoff: String,
    /// Max per-strategy mean — a lower bound on the true upper expectation
    /// (the family is finite).
    pub upper: f64,
    /// Min per-strategy mean — an upper bound on the true lower expectation.
    pub lower: f64,
    pub argmax_label: String,
    pub argmin_label: String,
    pub per_strategy: Vec<StrategyEstimate>,
    pub seed: u64,
    pub note: String,
}

impl EstimateReport {
    /// Standard error of the strategy attaining the upper value.
    pub fn upper_se(&self) -> f64 {
        self.per_strategy
            .iter()
            .find(|s| s.label == self.argmax_label)
            .map(|s| s.se)
            .unwrap_or(f64::NAN)
    }

    pub fn lower_se(&self) -> f64 {
        self.per_strategy
            .iter()
            .find(|s| s.label == self.argmin_label)
            .map(|s| s.se)
            .unwrap_or(f64::NAN)
    }
}

fn assemble_report(
    payoff: &PathFunctional,
    per_strategy: Vec<StrategyEstimate>,
    seed: u64,
) -> EstimateReport {
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    let mut argmax = 0usize;
    let mut argmin = 0usize;
    for (i, s) in per_strategy.iter().enumerate() {
        if s.mean > upper {
            upper = s.mean;
            argmax = i;
        }
        if s.mean < lower {
            lower = s.mean;
            argmin = i;
        }
    }
    EstimateReport {
        payoff: payoff.name(),
        upper,
        lower,
        argmax_label: per_strategy[argmax].label.clone(),
        argmin_label: per_strategy[argmin].label.clone(),
        per_strategy,
        seed,
        note: "finite strategy family: upper is a lower bound on the worst-case value"
            .into(),
    }
}

/// Estimate several payoffs over one family with shared simulations (each
/// strategy's paths are generated once and every payoff is read off them).
pub fn upper_expectation_many(
    payoffs: &[PathFunctional],
    family: &StrategyFamily,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<EstimateReport>> {
    if payoffs.is_empty() {
        return Err(Error::invalid("need at least one payoff"));
    }
    if family.is_empty() {
        return Err(Error::invalid("strategy family is empty"));
    }
    // per_strategy[s][p] = estimate of payoff p under strategy s
    let mut estimates: Vec<Vec<StrategyEstimate>> = Vec::with_capacity(family.len());
    for strat in family.strategies() {
        let plan = SimPlan::new(
            family.band,
            strat.strategy.clone(),
            strat.label.clone(),
            grid.clone(),
            n_paths,
            seed,
            true,
        )?;
        let set = PathSet::Plan(plan);
        let rows: Vec<Vec<f64>> = set.map_paths(|_, view| {
            payoffs.iter().map(|p| p.evaluate(view)).collect()
        })?;
        for (i, row) in rows.iter().enumerate() {
            for (p, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::domain(format!(
                        "payoff {} is non-finite on path {i} under strategy {} \
                         (seed {seed}, {} steps)",
                        payoffs[p].name(),
                        strat.label,
                        grid.n_steps
                    )));
                }
            }
        }
        let mut per_payoff = Vec::with_capacity(payoffs.len());
        let mut scratch = vec![0.0; rows.len()];
        for p in 0..payoffs.len() {
            for (i, row) in rows.iter().enumerate() {
                scratch[i] = row[p];
            }
            let (mean, se) = mean_se(&scratch);
            per_payoff.push(StrategyEstimate {
                label: strat.label.clone(),
                mean,
                se,
                n_paths,
            });
        }
        estimates.push(per_payoff);
    }
    Ok(payoffs
        .iter()
        .enumerate()
        .map(|(p, payoff)| {
            let col: Vec<StrategyEstimate> =
                estimates.iter().map(|row| row[p].clone()).collect();
            assemble_report(payoff, col, seed)
        })
        .collect())
}

/// Estimate one payoff's upper/lower expectation over the family.
pub fn upper_expectation(
    payoff: &PathFunctional,
    family: &StrategyFamily,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<EstimateReport> {
    Ok(upper_expectation_many(
        std::slice::from_ref(payoff),
        family,
        grid,
        n_paths,
        seed,
    )?
    .pop()
    .unwrap())
}

/// Lower expectation `−upper(−X)`; equals the `lower` field of the upper
/// report (negation flips the family max to the min over shared samples).
pub fn lower_expectation(
    payoff: &PathFunctional,
    family: &StrategyFamily,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<f64> {
    Ok(upper_expectation(payoff, family, grid, n_paths, seed)?.lower)
}

/// One sublinearity axiom verdict.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomVerdict {
    pub axiom: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Allowed slack (0 = must hold exactly as computed).
    pub slack: f64,
    pub pass: bool,
}

/// Report of the sublinear-expectation axioms evaluated at the estimator
/// level on shared samples.
#[derive(Debug, Clone, Serialize)]
pub struct SublinearityReport {
    pub verdicts: Vec<AxiomVerdict>,
    pub passed: bool,
}

/// Check the four sublinearity axioms on two payoffs `X`, `Y`:
///
/// * monotonicity on the ordered pair `(min(X,Y-ordering unchecked))` —
///   caller supplies `X ≤ Y` pathwise; estimator means inherit the order
///   exactly (pairwise sums are monotone);
/// * constant preservation: `upper(c) = c`;
/// * sub-additivity: `upper(X+Y) ≤ upper(X) + upper(Y)` (exact per
///   strategy, so the family max obeys it up to rounding);
/// * positive homogeneity: `upper(λX) = λ·upper(X)` — bitwise for dyadic λ,
///   and to relative rounding otherwise.
pub fn sublinearity_check(
    x: &PathFunctional,
    y: &PathFunctional,
    family: &StrategyFamily,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<SublinearityReport> {
    let x_plus_y = x.clone().plus(y.clone());
    let two_x = x.clone().scaled(2.0);
    let lam = 1.75;
    let lam_x = x.clone().scaled(lam);
    let c = 2.5;
    let constant = PathFunctional::Constant { value: c };
    let payoffs = [
        x.clone(),
        y.clone(),
        x_plus_y,
        two_x,
        lam_x,
        constant,
    ];
    let reps = upper_expectation_many(&payoffs, family, grid, n_paths, seed)?;
    let (ux, uy, uxy, u2x, ulx, uc) = (
        reps[0].upper,
        reps[1].upper,
        reps[2].upper,
        reps[3].upper,
        reps[4].upper,
        reps[5].upper,
    );
    let scale = ux.abs().max(uy.abs()).max(1.0);
    let verdicts = vec![
        AxiomVerdict {
            axiom: format!("monotonicity: upper({}) ≤ upper({})", x.name(), y.name()),
            lhs: ux,
            rhs: uy,
            slack: 0.0,
            pass: ux <= uy,
        },
        AxiomVerdict {
            axiom: format!("constant preservation: upper({c}) = {c}"),
            lhs: uc,
            rhs: c,
            slack: 0.0,
            pass: uc == c,
        },
        AxiomVerdict {
            axiom: "sub-additivity: upper(X+Y) ≤ upper(X) + upper(Y)".into(),
            lhs: uxy,
            rhs: ux + uy,
            slack: 1e-12 * scale,
            pass: uxy <= ux + uy + 1e-12 * scale,
        },
        AxiomVerdict {
            axiom: "homogeneity (dyadic): upper(2X) = 2·upper(X)".into(),
            lhs: u2x,
            rhs: 2.0 * ux,
            slack: 0.0,
            pass: u2x == 2.0 * ux,
        },
        AxiomVerdict {
            axiom: format!("homogeneity: upper({lam}·X) = {lam}·upper(X)"),
            lhs: ulx,
            rhs: lam * ux,
            slack: 1e-12 * scale,
            pass: (ulx - lam * ux).abs() <= 1e-12 * scale,
        },
    ];
    let passed = verdicts.iter().all(|v| v.pass);
    Ok(SublinearityReport { verdicts, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_strategy_family, make_uniform_grid, VolatilityBand};

    fn family() -> StrategyFamily {
        default_strategy_family(VolatilityBand::new(0.5, 1.0).unwrap(), 3).unwrap()
    }

    #[test]
    fn payoff_parsing_round_trips() {
        assert!(matches!(
            PathFunctional::parse("square").unwrap(),
            PathFunctional::Square
        ));
        assert!(matches!(
            PathFunctional::parse("call:0.2").unwrap(),
            PathFunctional::Call { .. }
        ));
        assert!(matches!(
            PathFunctional::parse("indicator:-1:1").unwrap(),
            PathFunctional::Indicator { .. }
        ));
        let err = PathFunctional::parse("gamma").unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        assert!(err.to_string().contains("call:K"), "{err}");
        assert!(PathFunctional::parse("call:xyz").is_err());
        assert!(PathFunctional::parse("indicator:2:1").is_err());
    }

    #[test]
    fn martingale_payoff_brackets_zero() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let rep =
            upper_expectation(&PathFunctional::Linear, &family(), &grid, 20_000, 7).unwrap();
        assert!(rep.upper.abs() <= 4.0 * rep.upper_se(), "{rep:?}");
        assert!(rep.lower.abs() <= 4.0 * rep.lower_se());
        assert!(rep.upper >= rep.lower);
    }

    #[test]
    fn square_payoff_attains_band_extremes() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let rep =
            upper_expectation(&PathFunctional::Square, &family(), &grid, 20_000, 42).unwrap();
        assert!((rep.upper - 1.0).abs() < 0.03, "upper {}", rep.upper);
        assert!((rep.lower - 0.25).abs() < 0.01, "lower {}", rep.lower);
        assert_eq!(rep.argmax_label, "const_1.000000");
        assert_eq!(rep.argmin_label, "const_0.500000");
        // Lower expectation is the negated upper of the negated payoff.
        let neg =
            upper_expectation(&PathFunctional::NegSquare, &family(), &grid, 20_000, 42)
                .unwrap();
        assert_eq!((-neg.upper).to_bits(), rep.lower.to_bits());
    }

    #[test]
    fn abs_payoff_matches_half_normal_mean() {
        let grid = make_uniform_grid(1.0, 256).unwrap();
        let rep =
            upper_expectation(&PathFunctional::Abs, &family(), &grid, 40_000, 11).unwrap();
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!((rep.upper - want).abs() < 0.01, "{} vs {want}", rep.upper);
    }

    #[test]
    fn shared_noise_makes_reports_reproducible() {
        let grid = make_uniform_grid(1.0, 32).unwrap();
        let a = upper_expectation(&PathFunctional::Abs, &family(), &grid, 500, 3).unwrap();
        let b = upper_expectation(&PathFunctional::Abs, &family(), &grid, 500, 3).unwrap();
        assert_eq!(a.upper.to_bits(), b.upper.to_bits());
        assert_eq!(a.lower.to_bits(), b.lower.to_bits());
        let json_a = serde_json::to_string(&a).unwrap();
        let json_b = serde_json::to_string(&b).unwrap();
        assert_eq!(json_a, json_b);
    }

    #[test]
    fn non_finite_payoff_is_reported_with_context() {
        let grid = make_uniform_grid(1.0, 16).unwrap();
        // 1/M_T blows up on no path in practice, so force it with a payoff
        // that divides by (M_T − M_T).
        let bad = PathFunctional::Scaled {
            factor: f64::INFINITY,
            inner: Box::new(PathFunctional::Square),
        };
        let err = upper_expectation(&bad, &family(), &grid, 50, 1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
        assert!(err.to_string().contains("path"), "{err}");
    }

    #[test]
    fn growing_the_family_never_lowers_the_upper_estimate() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let small = default_strategy_family(band, 2).unwrap();
        let big = default_strategy_family(band, 5).unwrap();
        for payoff in [
            PathFunctional::Square,
            PathFunctional::Abs,
            PathFunctional::Call { strike: 0.2 },
        ] {
            let a = upper_expectation(&payoff, &small, &grid, 2000, 9).unwrap();
            let b = upper_expectation(&payoff, &big, &grid, 2000, 9).unwrap();
            assert!(b.upper >= a.upper, "{}: {} < {}", payoff.name(), b.upper, a.upper);
        }
    }

    #[test]
    fn sublinearity_axioms_hold_on_shared_samples() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        // X = (M_T − 0.2)⁺ ≤ |M_T| = Y pathwise.
        let x = PathFunctional::Call { strike: 0.2 };
        let y = PathFunctional::Abs;
        let rep = sublinearity_check(&x, &y, &family(), &grid, 4000, 5).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.verdicts.len(), 5);
    }

    #[test]
    fn cancelling_payoffs_have_zero_upper() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let x = PathFunctional::Linear;
        let y = PathFunctional::Linear.scaled(-1.0);
        let rep = upper_expectation(&x.plus(y), &family(), &grid, 1000, 2).unwrap();
        assert_eq!(rep.upper, 0.0);
        assert_eq!(rep.lower, 0.0);
    }

    #[test]
    fn local_time_payoff_tracks_abs_terminal() {
        let grid = make_uniform_grid(1.0, 1024).unwrap();
        let lt = PathFunctional::LocalTimeAt { level: 0.0 };
        let rep = upper_expectation(&lt, &family(), &grid, 8000, 13).unwrap();
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!((rep.upper - want).abs() < 0.03, "{} vs {want}", rep.upper);
        assert_eq!(rep.argmax_label, "const_1.000000");
    }
}
