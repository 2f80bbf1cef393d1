//! Stochastic integrals against simulated paths, the two integrand norms,
//! and convergence diagnostics.
//!
//! Integrals are left-point Riemann–Stieltjes sums
//!
//! ```text
//!   (∫ η dM)_{t_k} = Σ_{j<k} η_{t_j} · ΔM_j,
//! ```
//!
//! with η either a [`SimpleProcess`] (piecewise constant between declared
//! breakpoints, each piece evaluated from data available at its left
//! endpoint) or a [`StateIntegrand`] `f(M_t)` (a pointwise Borel function of
//! the current state with a declared linear-growth bound).
//!
//! The two norms differ in the clock: `m_norm` integrates `|η|^p dt`,
//! `mbar_norm` integrates `|η|^p d⟨M⟩`. Because `λΔt ≤ σ²Δt ≤ ΛΔt` holds
//! termwise on every step, the sandwich
//! `λ^{1/p}·m_norm ≤ mbar_norm ≤ Λ^{1/p}·m_norm` holds for every integrand
//! on every bundle (up to floating-point rounding in the final powers).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::TimeGrid;
use crate::path::{PathBundle, PathView};
use crate::stats::{mean_se, pairwise_sum};

/// Piecewise-constant integrand `η = Σ ξ_j · I_{[t_j, t_{j+1})}`.
///
/// `breakpoints` are the segment starts `0 ≤ t_0 < … < t_K ≤ T`; the last
/// segment extends to the horizon, and η is defined as 0 before `t_0`. The
/// piece value `ξ_j` is produced by `rule(node_index, t_j, path)` when the
/// segment begins; the rule must only use path data up to that node (left
/// endpoint) so that the process stays adapted.
#[derive(Clone)]
pub struct SimpleProcess {
    breakpoints: Vec<f64>,
    rule: Arc<dyn Fn(usize, f64, PathView<'_>) -> f64 + Send + Sync>,
}

impl SimpleProcess {
    pub fn new(
        breakpoints: Vec<f64>,
        rule: impl Fn(usize, f64, PathView<'_>) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::invalid("simple process needs at least one breakpoint"));
        }
        if breakpoints.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("breakpoints must be finite and nonnegative"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        Ok(SimpleProcess {
            breakpoints,
            rule: Arc::new(rule),
        })
    }

    /// The constant integrand `η ≡ c` from time 0.
    pub fn constant(c: f64) -> Self {
        SimpleProcess {
            breakpoints: vec![0.0],
            rule: Arc::new(move |_, _, _| c),
        }
    }

    /// Rebalanced at every given time, taking the current path value
    /// (`ξ_j = M_{t_j}`).
    pub fn current_state(breakpoints: Vec<f64>) -> Result<Self> {
        SimpleProcess::new(breakpoints, |node, _, view| view.m[node])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// Pointwise Borel function of the state with a declared growth bound
/// `|f(x)| ≤ C(1+|x|)`; the bound is checked on every sampled evaluation.
#[derive(Clone)]
pub struct StateIntegrand {
    pub growth_bound: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl StateIntegrand {
    pub fn new(
        growth_bound: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(growth_bound.is_finite() && growth_bound >= 0.0) {
            return Err(Error::invalid("growth bound must be finite and nonnegative"));
        }
        Ok(StateIntegrand {
            growth_bound,
            f: Arc::new(f),
        })
    }

    pub fn identity() -> Self {
        StateIntegrand::new(1.0, |x| x).unwrap()
    }

    /// `x ↦ sgn(x − a)` with the left-derivative convention `sgn(0) = −1`.
    pub fn sgn_shift(a: f64) -> Self {
        StateIntegrand::new(1.0, move |x| crate::local_time::sgn(x - a)).unwrap()
    }

    /// Evaluate with finiteness and growth-bound enforcement.
    #[inline]
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::domain(format!(
                "integrand returned non-finite value at x = {x}"
            )));
        }
        if v.abs() > self.growth_bound * (1.0 + x.abs()) {
            return Err(Error::domain(format!(
                "integrand violates its declared growth bound {} at x = {x} (|f(x)| = {})",
                self.growth_bound,
                v.abs()
            )));
        }
        Ok(v)
    }
}

/// Cumulative integral of a simple process along every path; row `i` holds
/// the running values at the grid nodes (length N+1, starting at 0).
///
/// Breakpoints must sit on grid nodes up to `mesh/100`; anything farther
/// off is rejected rather than silently snapped, since moving a breakpoint
/// re-times an adapted decision.
pub fn integrate_simple(eta: &SimpleProcess, bundle: &PathBundle) -> Result<Vec<Vec<f64>>> {
    let grid = &bundle.grid;
    let nodes: Vec<usize> = eta
        .breakpoints
        .iter()
        .map(|&t| grid.locate(t))
        .collect::<Result<_>>()?;
    let n = grid.n_steps;
    bundle
        .views()
        .map(|view| {
            let mut out = Vec::with_capacity(n + 1);
            out.push(0.0);
            let mut seg: usize = 0; // index into nodes of the segment in force; η=0 before nodes[0]
            let mut xi = 0.0;
            let mut acc = 0.0;
            for j in 0..n {
                while seg < nodes.len() && nodes[seg] == j {
                    let t = grid.node(j);
                    xi = (eta.rule)(j, t, view);
                    if !xi.is_finite() {
                        return Err(Error::domain(format!(
                            "simple-process value is non-finite at t = {t} on path {}",
                            view.index
                        )));
                    }
                    seg += 1;
                }
                let active = seg > 0;
                if active {
                    acc += xi * view.increments[j];
                }
                out.push(acc);
            }
            Ok(out)
        })
        .collect()
}

/// Per-path cumulative values of `∫ f(M_s) dM_s` at the grid nodes.
pub fn integrate_state(f: &StateIntegrand, bundle: &PathBundle) -> Result<Vec<Vec<f64>>> {
    bundle.views().map(|v| integrate_state_path(f, v)).collect()
}

/// Single-path kernel behind [`integrate_state`]; usable with streamed
/// path views.
pub fn integrate_state_path(f: &StateIntegrand, view: PathView<'_>) -> Result<Vec<f64>> {
    let n = view.n_steps();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for j in 0..n {
        acc += f.eval(view.m[j])? * view.increments[j];
        out.push(acc);
    }
    Ok(out)
}

/// Terminal value of `∫ f(M_s) dM_s` without materializing the running sum.
pub fn integrate_state_terminal(f: &StateIntegrand, view: PathView<'_>) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..view.n_steps() {
        acc += f.eval(view.m[j])? * view.increments[j];
    }
    Ok(acc)
}

/// Left-endpoint evaluations `f(M_{t_j})`, one row per path (length N), for
/// feeding the norm and truncation estimators.
pub fn evaluate_state(f: &StateIntegrand, bundle: &PathBundle) -> Result<Vec<Vec<f64>>> {
    bundle
        .views()
        .map(|view| (0..view.n_steps()).map(|j| f.eval(view.m[j])).collect())
        .collect()
}

fn check_norm_inputs(values: &[Vec<f64>], n_steps: usize, p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("norm order p must be ≥ 1, got {p}")));
    }
    if values.is_empty() {
        return Err(Error::invalid("norm needs at least one path row"));
    }
    if values.iter().any(|row| row.len() != n_steps) {
        return Err(Error::invalid(
            "integrand rows must have one value per grid step",
        ));
    }
    Ok(())
}

/// Monte Carlo `(mean over paths of Σ_j |η_j|^p Δt_j)^{1/p}` — the
/// Lebesgue-clock norm of an evaluated integrand.
pub fn m_norm(values: &[Vec<f64>], grid: &TimeGrid, p: f64) -> Result<f64> {
    check_norm_inputs(values, grid.n_steps, p)?;
    let per_path: Vec<f64> = values
        .iter()
        .map(|row| {
            let terms: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(j, &v)| v.abs().powf(p) * grid.dt(j))
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    let (mean, _) = mean_se(&per_path);
    Ok(mean.powf(1.0 / p))
}

/// Same as [`m_norm`] with the quadratic-variation clock: the per-step
/// weight is `σ_j² Δt_j` (the exact compensator increment).
pub fn mbar_norm(values: &[Vec<f64>], bundle: &PathBundle, p: f64) -> Result<f64> {
    check_norm_inputs(values, bundle.grid.n_steps, p)?;
    let per_path: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let view = bundle.view(i);
            let terms: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(j, &v)| v.abs().powf(p) * (view.qv[j + 1] - view.qv[j]))
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    let (mean, _) = mean_se(&per_path);
    Ok(mean.powf(1.0 / p))
}

/// Estimates of `Ê[∫ |η|^p I_{|η| > K} d⟨M⟩]` for each threshold `K`
/// (mean over the bundle's paths; the family sup is taken by the caller).
/// A sequence decaying to a small fraction of its first entry certifies
/// that the integrand's tail carries negligible norm mass.
pub fn tail_truncation_decay(
    values: &[Vec<f64>],
    bundle: &PathBundle,
    p: f64,
    thresholds: &[f64],
) -> Result<Vec<f64>> {
    check_norm_inputs(values, bundle.grid.n_steps, p)?;
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("thresholds must be nonempty and increasing"));
    }
    thresholds
        .iter()
        .map(|&k| {
            let per_path: Vec<f64> = values
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let view = bundle.view(i);
                    let terms: Vec<f64> = row
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| v.abs() > k)
                        .map(|(j, &v)| v.abs().powf(p) * (view.qv[j + 1] - view.qv[j]))
                        .collect();
                    pairwise_sum(&terms)
                })
                .collect();
            Ok(mean_se(&per_path).0)
        })
        .collect()
}

/// Estimates of `Ê[∫ |fₙ(M) − f(M)|² d⟨M⟩]` for each element of a function
/// sequence against its declared limit; decay to 0 certifies that the limit
/// integrand is reachable from the sequence in the quadratic-variation norm.
pub fn dominated_convergence_check(
    sequence: &[StateIntegrand],
    limit: &StateIntegrand,
    bundle: &PathBundle,
) -> Result<Vec<f64>> {
    if sequence.is_empty() {
        return Err(Error::invalid("need at least one function in the sequence"));
    }
    sequence
        .iter()
        .map(|fn_n| {
            let per_path: Vec<f64> = bundle
                .views()
                .map(|view| {
                    let terms: Vec<f64> = (0..view.n_steps())
                        .map(|j| {
                            let d = fn_n.eval(view.m[j])? - limit.eval(view.m[j])?;
                            Ok(d * d * (view.qv[j + 1] - view.qv[j]))
                        })
                        .collect::<Result<_>>()?;
                    Ok(pairwise_sum(&terms))
                })
                .collect::<Result<_>>()?;
            Ok(mean_se(&per_path).0)
        })
        .collect()
}
