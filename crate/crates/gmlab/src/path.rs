//! Path engine: Euler simulation of the volatility-controlled martingale
//! `M_t = ∫ σ_s dW_s` together with its exact quadratic-variation
//! compensator.
//!
//! ```text
//!   ΔM_j = σ(t_j, M_{t_j}) · √Δt_j · Z_{i,j}        (σ frozen at the left endpoint)
//!   qv_exact_k = Σ_{j<k} σ(t_j,·)² Δt_j             (exact compensator on the grid)
//! ```
//!
//! Two evaluation modes share one per-path kernel:
//!
//! * [`simulate_paths`] materializes a [`PathBundle`] (capacity-guarded);
//! * [`PathSet::map_paths`] streams paths through a closure one at a time,
//!   so statistics over 10⁵ paths × 2¹⁴ steps never hold more than one
//!   path per worker in memory.
//!
//! Determinism: the driving noise is keyed by `(seed, path, step)` (see
//! `rng`), per-path results are collected in path order, and all reductions
//! downstream use fixed-shape pairwise trees — so output is bitwise
//! independent of the worker count and of how many paths were requested.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ControlStrategy, TimeGrid, VolatilityBand};
use crate::rng::NormalStream;

/// Materialized-bundle size guard: total `f64` cells across the four
/// matrices. Streaming evaluation is exempt.
pub const MAX_BUNDLE_ELEMENTS: usize = 1 << 26;

/// Simulated paths with increments, exact compensator, and the volatility
/// actually applied on each step.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub band: VolatilityBand,
    pub n_paths: usize,
    pub seed: u64,
    pub strategy_label: String,
    m_values: Vec<f64>,   // n_paths × (N+1), row-major
    increments: Vec<f64>, // n_paths × N
    qv_exact: Vec<f64>,   // n_paths × (N+1)
    sigma_used: Vec<f64>, // n_paths × N
}

/// Borrowed view of a single path.
#[derive(Clone, Copy)]
pub struct PathView<'a> {
    pub index: usize,
    pub grid: &'a TimeGrid,
    /// `M_{t_0..t_N}`, length N+1, starts at 0.
    pub m: &'a [f64],
    /// `ΔM_j = M_{t_{j+1}} − M_{t_j}` as stored differences, length N.
    pub increments: &'a [f64],
    /// Cumulative `Σ σ² Δt`, length N+1, starts at 0.
    pub qv: &'a [f64],
    /// Volatility in force on `[t_j, t_{j+1})`, length N.
    pub sigma: &'a [f64],
}

impl<'a> PathView<'a> {
    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn terminal(&self) -> f64 {
        self.m[self.m.len() - 1]
    }

    pub fn qv_terminal(&self) -> f64 {
        self.qv[self.qv.len() - 1]
    }
}

impl PathBundle {
    pub fn view(&self, i: usize) -> PathView<'_> {
        let n = self.grid.n_steps;
        PathView {
            index: i,
            grid: &self.grid,
            m: &self.m_values[i * (n + 1)..(i + 1) * (n + 1)],
            increments: &self.increments[i * n..(i + 1) * n],
            qv: &self.qv_exact[i * (n + 1)..(i + 1) * (n + 1)],
            sigma: &self.sigma_used[i * n..(i + 1) * n],
        }
    }

    pub fn views(&self) -> impl Iterator<Item = PathView<'_>> {
        (0..self.n_paths).map(|i| self.view(i))
    }

    /// Build a bundle from externally supplied increments and per-step
    /// volatilities (used by lattice oracles and tests). `m` and `qv` are
    /// reconstructed with the engine's own accumulation arithmetic.
    pub fn from_increments(
        grid: TimeGrid,
        band: VolatilityBand,
        seed: u64,
        strategy_label: impl Into<String>,
        increments: &[Vec<f64>],
        sigmas: &[Vec<f64>],
    ) -> Result<Self> {
        let n = grid.n_steps;
        if increments.is_empty() || increments.len() != sigmas.len() {
            return Err(Error::invalid(
                "from_increments needs matching, nonempty increment and sigma rows",
            ));
        }
        if increments.iter().any(|r| r.len() != n) || sigmas.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("row length must equal the grid step count"));
        }
        let n_paths = increments.len();
        check_capacity(n_paths, n)?;
        let mut bundle = PathBundle {
            grid,
            band,
            n_paths,
            seed,
            strategy_label: strategy_label.into(),
            m_values: vec![0.0; n_paths * (n + 1)],
            increments: vec![0.0; n_paths * n],
            qv_exact: vec![0.0; n_paths * (n + 1)],
            sigma_used: vec![0.0; n_paths * n],
        };
        for i in 0..n_paths {
            let mrow = &mut bundle.m_values[i * (n + 1)..(i + 1) * (n + 1)];
            let qrow = &mut bundle.qv_exact[i * (n + 1)..(i + 1) * (n + 1)];
            for j in 0..n {
                let dt = bundle.grid.dt(j);
                let s = sigmas[i][j];
                mrow[j + 1] = mrow[j] + increments[i][j];
                bundle.increments[i * n + j] = mrow[j + 1] - mrow[j];
                qrow[j + 1] = qrow[j] + s * s * dt;
                bundle.sigma_used[i * n + j] = s;
            }
        }
        Ok(bundle)
    }
}

/// Everything needed to (re)generate a deterministic set of paths.
#[derive(Debug, Clone)]
pub struct SimPlan {
    pub band: VolatilityBand,
    pub strategy: ControlStrategy,
    pub strategy_label: String,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub strict_band: bool,
}

impl SimPlan {
    pub fn new(
        band: VolatilityBand,
        strategy: ControlStrategy,
        strategy_label: impl Into<String>,
        grid: TimeGrid,
        n_paths: usize,
        seed: u64,
        strict_band: bool,
    ) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::invalid("need at least one path"));
        }
        strategy.validate()?;
        Ok(SimPlan {
            band,
            strategy,
            strategy_label: strategy_label.into(),
            grid,
            n_paths,
            seed,
            strict_band,
        })
    }

    pub fn materialize(&self) -> Result<PathBundle> {
        check_capacity(self.n_paths, self.grid.n_steps)?;
        let n = self.grid.n_steps;
        let steps = StepTable::for_grid(&self.grid);
        let mut m_values = vec![0.0; self.n_paths * (n + 1)];
        let mut increments = vec![0.0; self.n_paths * n];
        let mut qv_exact = vec![0.0; self.n_paths * (n + 1)];
        let mut sigma_used = vec![0.0; self.n_paths * n];

        let results: Vec<Result<()>> = m_values
            .par_chunks_mut(n + 1)
            .zip(increments.par_chunks_mut(n))
            .zip(qv_exact.par_chunks_mut(n + 1))
            .zip(sigma_used.par_chunks_mut(n))
            .enumerate()
            .map(|(i, (((m, inc), qv), sig))| {
                simulate_one(self, &steps, i, m, inc, qv, sig)
            })
            .collect();
        first_error(results)?;

        Ok(PathBundle {
            grid: self.grid.clone(),
            band: self.band,
            n_paths: self.n_paths,
            seed: self.seed,
            strategy_label: self.strategy_label.clone(),
            m_values,
            increments,
            qv_exact,
            sigma_used,
        })
    }
}

/// A set of paths that checks can consume either from memory or by
/// regenerating on the fly. Identical parameters always yield identical
/// paths, so two checks holding separate `PathSet`s with the same plan
/// observe the same sample — “simulate once, check many” without
/// materializing anything.
pub enum PathSet {
    Bundle(PathBundle),
    Plan(SimPlan),
}

impl PathSet {
    pub fn grid(&self) -> &TimeGrid {
        match self {
            PathSet::Bundle(b) => &b.grid,
            PathSet::Plan(p) => &p.grid,
        }
    }

    pub fn band(&self) -> &VolatilityBand {
        match self {
            PathSet::Bundle(b) => &b.band,
            PathSet::Plan(p) => &p.band,
        }
    }

    pub fn n_paths(&self) -> usize {
        match self {
            PathSet::Bundle(b) => b.n_paths,
            PathSet::Plan(p) => p.n_paths,
        }
    }

    pub fn strategy_label(&self) -> &str {
        match self {
            PathSet::Bundle(b) => &b.strategy_label,
            PathSet::Plan(p) => &p.strategy_label,
        }
    }

    /// Apply `f` to every path and collect the results in path order.
    pub fn map_paths<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, PathView<'_>) -> T + Sync,
    {
        match self {
            PathSet::Bundle(bundle) => Ok((0..bundle.n_paths)
                .into_par_iter()
                .map(|i| f(i, bundle.view(i)))
                .collect()),
            PathSet::Plan(plan) => {
                let n = plan.grid.n_steps;
                let steps = StepTable::for_grid(&plan.grid);
                let results: Vec<Result<T>> = (0..plan.n_paths)
                    .into_par_iter()
                    .map_init(
                        || PathBuffers::new(n),
                        |buf, i| {
                            simulate_one(
                                plan, &steps, i, &mut buf.m, &mut buf.inc, &mut buf.qv,
                                &mut buf.sigma,
                            )?;
                            Ok(f(i, buf.view(i, &plan.grid)))
                        },
                    )
                    .collect();
                let mut out = Vec::with_capacity(results.len());
                for r in results {
                    out.push(r?);
                }
                Ok(out)
            }
        }
    }

    /// Fold `f` over all paths without keeping every per-path value alive:
    /// paths are processed in fixed blocks of [`FOLD_BLOCK`], each block is
    /// folded sequentially, and block accumulators merge in block order —
    /// so the result is independent of the worker count.
    pub fn fold_paths<A, I, F, M>(&self, init: I, fold: F, merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(A, usize, PathView<'_>) -> A + Sync,
        M: Fn(A, A) -> A,
    {
        let n_paths = self.n_paths();
        let blocks: Vec<(usize, usize)> = (0..n_paths)
            .step_by(FOLD_BLOCK)
            .map(|start| (start, (start + FOLD_BLOCK).min(n_paths)))
            .collect();
        let per_block: Vec<Result<A>> = match self {
            PathSet::Bundle(bundle) => blocks
                .par_iter()
                .map(|&(start, end)| {
                    let mut acc = init();
                    for i in start..end {
                        acc = fold(acc, i, bundle.view(i));
                    }
                    Ok(acc)
                })
                .collect(),
            PathSet::Plan(plan) => {
                let n = plan.grid.n_steps;
                let steps = StepTable::for_grid(&plan.grid);
                blocks
                    .par_iter()
                    .map_init(
                        || PathBuffers::new(n),
                        |buf, &(start, end)| {
                            let mut acc = init();
                            for i in start..end {
                                simulate_one(
                                    plan, &steps, i, &mut buf.m, &mut buf.inc, &mut buf.qv,
                                    &mut buf.sigma,
                                )?;
                                acc = fold(acc, i, buf.view(i, &plan.grid));
                            }
                            Ok(acc)
                        },
                    )
                    .collect()
            }
        };
        let mut iter = per_block.into_iter();
        let mut acc = match iter.next() {
            Some(first) => first?,
            None => init(),
        };
        for block in iter {
            acc = merge(acc, block?);
        }
        Ok(acc)
    }
}

/// Paths per accumulator block in [`PathSet::fold_paths`]; fixed so the
/// reduction tree (and hence floating-point rounding) never depends on the
/// thread count.
pub const FOLD_BLOCK: usize = 1024;

impl From<PathBundle> for PathSet {
    fn from(b: PathBundle) -> Self {
        PathSet::Bundle(b)
    }
}

impl From<SimPlan> for PathSet {
    fn from(p: SimPlan) -> Self {
        PathSet::Plan(p)
    }
}

/// Euler simulation of `n_paths` under one strategy; deterministic in
/// `(strategy, grid, n_paths, seed)` and independent of worker count.
pub fn simulate_paths(
    band: VolatilityBand,
    strategy: &ControlStrategy,
    strategy_label: &str,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    strict_band: bool,
) -> Result<PathBundle> {
    SimPlan::new(
        band,
        strategy.clone(),
        strategy_label,
        grid.clone(),
        n_paths,
        seed,
        strict_band,
    )?
    .materialize()
}

/// Cumulative partition sums `Σ_{j<k} (ΔM_j)²` per path (the
/// partition-limit object; `qv_exact` is its compensator reference).
pub fn quadratic_variation_partition(bundle: &PathBundle) -> Vec<Vec<f64>> {
    bundle
        .views()
        .map(|view| {
            let mut row = Vec::with_capacity(view.m.len());
            let mut acc = 0.0;
            row.push(0.0);
            for &dm in view.increments {
                acc += dm * dm;
                row.push(acc);
            }
            row
        })
        .collect()
}

/// Simulate on every grid of a dyadic ladder from one shared Brownian
/// skeleton: the finest grid's increments are generated once per path and
/// coarser grids consume their block sums, so all rungs see the same
/// underlying noise (refinement-consistent). The closure receives one view
/// per rung, ordered as `steps_ladder`.
///
/// Each entry of `steps_ladder` must divide the maximum entry. The finest
/// rung is bitwise identical to a plain simulation with the same plan.
pub fn ladder_map<T, F>(
    band: VolatilityBand,
    strategy: &ControlStrategy,
    strategy_label: &str,
    horizon: f64,
    steps_ladder: &[usize],
    n_paths: usize,
    seed: u64,
    strict_band: bool,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &[PathView<'_>]) -> T + Sync,
{
    if steps_ladder.is_empty() {
        return Err(Error::invalid("ladder needs at least one grid"));
    }
    let finest = *steps_ladder.iter().max().unwrap();
    for &n in steps_ladder {
        if n == 0 || finest % n != 0 {
            return Err(Error::invalid(format!(
                "ladder entry {n} must be a nonzero divisor of the finest grid {finest}"
            )));
        }
    }
    strategy.validate()?;
    let grids: Vec<TimeGrid> = steps_ladder
        .iter()
        .map(|&n| crate::model::make_uniform_grid(horizon, n))
        .collect::<Result<_>>()?;
    let fine_grid = crate::model::make_uniform_grid(horizon, finest)?;
    let fine_steps = StepTable::for_grid(&fine_grid);
    let step_tables: Vec<StepTable> = grids.iter().map(StepTable::for_grid).collect();

    struct LadderBuffers {
        dw: Vec<f64>,
        rungs: Vec<PathBuffers>,
    }

    let results: Vec<Result<T>> = (0..n_paths)
        .into_par_iter()
        .map_init(
            || LadderBuffers {
                dw: vec![0.0; finest],
                rungs: steps_ladder.iter().map(|&n| PathBuffers::new(n)).collect(),
            },
            |buf, i| {
                // Shared Brownian skeleton for this path.
                let mut z = NormalStream::for_path(seed, i as u64);
                for j in 0..finest {
                    buf.dw[j] = fine_steps.sqrt_dt[j] * z.next_normal();
                }
                for (r, grid) in grids.iter().enumerate() {
                    let factor = finest / grid.n_steps;
                    let rung = &mut buf.rungs[r];
                    drive_one(
                        band,
                        strategy,
                        strategy_label,
                        grid,
                        &step_tables[r],
                        strict_band,
                        seed,
                        i,
                        |k| {
                            let mut dw = 0.0;
                            for j in k * factor..(k + 1) * factor {
                                dw += buf.dw[j];
                            }
                            dw
                        },
                        &mut rung.m,
                        &mut rung.inc,
                        &mut rung.qv,
                        &mut rung.sigma,
                    )?;
                }
                let views: Vec<PathView<'_>> = buf
                    .rungs
                    .iter()
                    .zip(grids.iter())
                    .map(|(rung, grid)| rung.view(i, grid))
                    .collect();
                Ok(f(i, &views))
            },
        )
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

/// CSV dump (path_id, step, t, M, qv_exact, sigma). The sigma column holds
/// the volatility in force at the row's `t`; the terminal row repeats the
/// last value.
pub fn write_paths_csv<W: std::io::Write>(bundle: &PathBundle, out: &mut W) -> Result<()> {
    writeln!(out, "path_id,step,t,M,qv_exact,sigma")?;
    for view in bundle.views() {
        let n = view.n_steps();
        for j in 0..=n {
            let sigma = view.sigma[j.min(n - 1)];
            writeln!(
                out,
                "{},{},{},{},{},{}",
                view.index,
                j,
                view.grid.node(j),
                view.m[j],
                view.qv[j],
                sigma
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// internals

/// Precomputed per-step `Δt` and `√Δt` (node differences, so that the Δt sum
/// telescopes exactly to T).
struct StepTable {
    dt: Vec<f64>,
    sqrt_dt: Vec<f64>,
}

impl StepTable {
    fn for_grid(grid: &TimeGrid) -> Self {
        let dt: Vec<f64> = (0..grid.n_steps).map(|j| grid.dt(j)).collect();
        let sqrt_dt = dt.iter().map(|d| d.sqrt()).collect();
        StepTable { dt, sqrt_dt }
    }
}

struct PathBuffers {
    m: Vec<f64>,
    inc: Vec<f64>,
    qv: Vec<f64>,
    sigma: Vec<f64>,
}

impl PathBuffers {
    fn new(n: usize) -> Self {
        PathBuffers {
            m: vec![0.0; n + 1],
            inc: vec![0.0; n],
            qv: vec![0.0; n + 1],
            sigma: vec![0.0; n],
        }
    }

    fn view<'a>(&'a self, index: usize, grid: &'a TimeGrid) -> PathView<'a> {
        PathView {
            index,
            grid,
            m: &self.m,
            increments: &self.inc,
            qv: &self.qv,
            sigma: &self.sigma,
        }
    }
}

fn simulate_one(
    plan: &SimPlan,
    steps: &StepTable,
    path: usize,
    m: &mut [f64],
    inc: &mut [f64],
    qv: &mut [f64],
    sigma_used: &mut [f64],
) -> Result<()> {
    let mut z = NormalStream::for_path(plan.seed, path as u64);
    drive_one(
        plan.band,
        &plan.strategy,
        &plan.strategy_label,
        &plan.grid,
        steps,
        plan.strict_band,
        plan.seed,
        path,
        |k| steps.sqrt_dt[k] * z.next_normal(),
        m,
        inc,
        qv,
        sigma_used,
    )
}

/// One Euler path driven by caller-supplied Brownian increments `dw(k)`.
#[allow(clippy::too_many_arguments)]
fn drive_one(
    band: VolatilityBand,
    strategy: &ControlStrategy,
    label: &str,
    grid: &TimeGrid,
    steps: &StepTable,
    strict_band: bool,
    seed: u64,
    path: usize,
    mut dw: impl FnMut(usize) -> f64,
    m: &mut [f64],
    inc: &mut [f64],
    qv: &mut [f64],
    sigma_used: &mut [f64],
) -> Result<()> {
    let n = grid.n_steps;
    debug_assert_eq!(m.len(), n + 1);
    let mut state = strategy.init_state(&band, seed, path as u64);
    m[0] = 0.0;
    qv[0] = 0.0;
    for j in 0..n {
        let t = grid.node(j);
        let dt = steps.dt[j];
        let mut s = strategy.sigma_at(t, m[j], dt, &band, &mut state);
        if !s.is_finite() {
            return Err(Error::domain(format!(
                "strategy {label:?} emitted non-finite sigma at t = {t}"
            )));
        }
        if !band.contains(s) {
            if strict_band {
                return Err(Error::domain(format!(
                    "strategy {label:?} emitted sigma {s} outside band [{}, {}] at t = {t} (strict mode)",
                    band.sigma_low, band.sigma_high
                )));
            }
            s = band.clamp(s);
        }
        let dm = s * dw(j);
        m[j + 1] = m[j] + dm;
        inc[j] = m[j + 1] - m[j]; // stored difference: telescoping-exact
        qv[j + 1] = qv[j] + s * s * dt;
        sigma_used[j] = s;
    }
    Ok(())
}

fn check_capacity(n_paths: usize, n_steps: usize) -> Result<()> {
    let cells = n_paths
        .checked_mul(4 * n_steps + 2)
        .ok_or_else(|| Error::Capacity("bundle size overflows".into()))?;
    if cells > MAX_BUNDLE_ELEMENTS {
        return Err(Error::Capacity(format!(
            "materializing {n_paths} paths × {n_steps} steps needs {cells} cells \
             (cap {MAX_BUNDLE_ELEMENTS}); use streaming evaluation instead"
        )));
    }
    Ok(())
}

fn first_error(results: Vec<Result<()>>) -> Result<()> {
    for r in results {
        r?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_strategy_family, make_uniform_grid, FeedbackRule};

    fn band() -> VolatilityBand {
        VolatilityBand::new(0.5, 1.0).unwrap()
    }

    fn constant(sigma: f64) -> ControlStrategy {
        ControlStrategy::Constant { sigma }
    }

    #[test]
    fn zero_volatility_paths_are_flat() {
        let b = VolatilityBand::new(0.0, 1.0).unwrap();
        let grid = make_uniform_grid(1.0, 16).unwrap();
        let bundle = simulate_paths(b, &constant(0.0), "zero", &grid, 5, 1, true).unwrap();
        for view in bundle.views() {
            assert!(view.m.iter().all(|&x| x == 0.0));
            assert!(view.qv.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn constant_sigma_compensator_is_deterministic() {
        let b = VolatilityBand::new(0.5, 1.0).unwrap();
        let grid = make_uniform_grid(2.0, 64).unwrap();
        let bundle = simulate_paths(b, &constant(0.8), "c08", &grid, 7, 3, true).unwrap();
        for view in bundle.views() {
            assert!((view.qv_terminal() - 1.28).abs() < 1e-12);
        }
    }

    #[test]
    fn increments_match_value_differences_exactly() {
        let grid = make_uniform_grid(1.0, 128).unwrap();
        let bundle = simulate_paths(band(), &constant(1.0), "c1", &grid, 20, 42, true).unwrap();
        for view in bundle.views() {
            for j in 0..view.n_steps() {
                assert_eq!(
                    view.increments[j].to_bits(),
                    (view.m[j + 1] - view.m[j]).to_bits()
                );
            }
        }
    }

    #[test]
    fn qv_exact_is_monotone_and_band_bounded() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let fam = default_strategy_family(band(), 3).unwrap();
        for s in fam.strategies() {
            let bundle =
                simulate_paths(band(), &s.strategy, &s.label, &grid, 16, 9, true).unwrap();
            for view in bundle.views() {
                for j in 0..view.n_steps() {
                    assert!(view.qv[j + 1] >= view.qv[j]);
                }
                let total = view.qv_terminal();
                assert!(total <= 1.0 * 1.0 + 1e-12, "{total}");
                assert!(total >= 0.25 * 1.0 - 1e-12, "{total}");
            }
        }
    }

    #[test]
    fn path_i_is_independent_of_n_paths() {
        let grid = make_uniform_grid(1.0, 32).unwrap();
        let few = simulate_paths(band(), &constant(0.7), "c", &grid, 3, 5, true).unwrap();
        let many = simulate_paths(band(), &constant(0.7), "c", &grid, 50, 5, true).unwrap();
        for i in 0..3 {
            assert_eq!(few.view(i).m, many.view(i).m);
        }
    }

    #[test]
    fn materialized_and_streamed_paths_agree_bitwise() {
        let grid = make_uniform_grid(1.0, 32).unwrap();
        let strat = ControlStrategy::Feedback(FeedbackRule::BangBangUp { pivot: 0.0 });
        let plan = SimPlan::new(band(), strat, "bb", grid, 11, 77, true).unwrap();
        let bundle = plan.materialize().unwrap();
        let set = PathSet::Plan(plan);
        let terminals = set.map_paths(|_, v| v.terminal()).unwrap();
        for (i, &t) in terminals.iter().enumerate() {
            assert_eq!(t.to_bits(), bundle.view(i).terminal().to_bits());
        }
    }

    #[test]
    fn random_switching_is_reproducible_and_in_band() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let strat = ControlStrategy::RandomSwitching {
            intensity: 4.0,
            seed_offset: 1,
        };
        let a = simulate_paths(band(), &strat, "rs", &grid, 6, 11, true).unwrap();
        let b = simulate_paths(band(), &strat, "rs", &grid, 6, 11, true).unwrap();
        for i in 0..6 {
            assert_eq!(a.view(i).m, b.view(i).m);
            assert!(a
                .view(i)
                .sigma
                .iter()
                .all(|&s| s == 0.5 || s == 1.0));
        }
        // Different seed offsets decorrelate the switching noise.
        let strat2 = ControlStrategy::RandomSwitching {
            intensity: 4.0,
            seed_offset: 2,
        };
        let c = simulate_paths(band(), &strat2, "rs2", &grid, 6, 11, true).unwrap();
        assert_ne!(a.view(0).sigma, c.view(0).sigma);
    }

    #[test]
    fn strict_mode_rejects_out_of_band_sigma() {
        let grid = make_uniform_grid(1.0, 8).unwrap();
        let err = simulate_paths(band(), &constant(2.0), "hot", &grid, 2, 1, true).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
        // Clamp mode caps at the band edge instead.
        let clamped = simulate_paths(band(), &constant(2.0), "hot", &grid, 2, 1, false).unwrap();
        assert!(clamped.view(0).sigma.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn capacity_guard_trips_on_absurd_sizes() {
        let grid = make_uniform_grid(1.0, 1 << 14).unwrap();
        let err = simulate_paths(band(), &constant(1.0), "big", &grid, 1 << 20, 1, true);
        assert!(matches!(err, Err(Error::Capacity(_))));
    }

    #[test]
    fn telescoping_identity_holds_per_path() {
        let grid = make_uniform_grid(1.0, 256).unwrap();
        let bundle = simulate_paths(band(), &constant(1.0), "c1", &grid, 10, 42, true).unwrap();
        let partition = quadratic_variation_partition(&bundle);
        for (i, view) in bundle.views().enumerate() {
            let m_max = view.m.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            for k in 0..=view.n_steps() {
                let cross: Vec<f64> = (0..k).map(|j| view.m[j] * view.increments[j]).collect();
                let rhs = view.m[k] * view.m[k] - 2.0 * crate::stats::pairwise_sum(&cross);
                assert!(
                    (partition[i][k] - rhs).abs() < 1e-10 * (1.0 + m_max * m_max),
                    "path {i} node {k}: {} vs {rhs}",
                    partition[i][k]
                );
            }
        }
    }

    #[test]
    fn partition_qv_converges_to_compensator() {
        // mean |partition QV at T − 1| decreases as N doubles; the ladder
        // shares one Brownian skeleton so the decrease is monotone.
        let ladder = [64usize, 256, 1024];
        let errs = ladder_map(
            band(),
            &constant(1.0),
            "c1",
            1.0,
            &ladder,
            400,
            7,
            true,
            |_, views| {
                let per_rung: Vec<f64> = views
                    .iter()
                    .map(|v| {
                        let qv: f64 = v.increments.iter().map(|d| d * d).sum();
                        (qv - 1.0).abs()
                    })
                    .collect();
                per_rung
            },
        )
        .unwrap();
        let mut means = [0.0; 3];
        for row in &errs {
            for (k, &e) in row.iter().enumerate() {
                means[k] += e / errs.len() as f64;
            }
        }
        assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
    }

    #[test]
    fn ladder_finest_rung_matches_plain_simulation() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let plain = simulate_paths(band(), &constant(0.9), "c", &grid, 5, 13, true).unwrap();
        let finest: Vec<Vec<f64>> = ladder_map(
            band(),
            &constant(0.9),
            "c",
            1.0,
            &[16, 64],
            5,
            13,
            true,
            |_, views| views[1].m.to_vec(),
        )
        .unwrap();
        for i in 0..5 {
            let want: Vec<u64> = plain.view(i).m.iter().map(|x| x.to_bits()).collect();
            let got: Vec<u64> = finest[i].iter().map(|x| x.to_bits()).collect();
            assert_eq!(want, got);
        }
    }

    #[test]
    fn ladder_rungs_share_the_brownian_skeleton() {
        // For a constant strategy, the coarse increment equals sigma times
        // the summed Brownian increments, i.e. the coarse path visits the
        // fine path's nodes (up to rounding in the block sums).
        let out = ladder_map(
            band(),
            &constant(1.0),
            "c",
            1.0,
            &[8, 64],
            3,
            21,
            true,
            |_, views| {
                let coarse = views[0].m.to_vec();
                let fine = views[1].m.to_vec();
                (coarse, fine)
            },
        )
        .unwrap();
        for (coarse, fine) in out {
            for k in 0..=8 {
                assert!((coarse[k] - fine[8 * k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ladder_rejects_non_divisors() {
        let r = ladder_map(
            band(),
            &constant(1.0),
            "c",
            1.0,
            &[24, 64],
            2,
            1,
            true,
            |_, _| 0.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn sample_mean_of_terminal_is_near_zero() {
        let grid = make_uniform_grid(1.0, 1).unwrap();
        let plan = SimPlan::new(band(), constant(1.0), "c1", grid, 100_000, 4, true).unwrap();
        let terminals = PathSet::Plan(plan).map_paths(|_, v| v.terminal()).unwrap();
        let (mean, se) = crate::stats::mean_se(&terminals);
        assert!(mean.abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn csv_dump_has_expected_shape() {
        let grid = make_uniform_grid(1.0, 4).unwrap();
        let bundle = simulate_paths(band(), &constant(0.5), "c", &grid, 2, 1, true).unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&bundle, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path_id,step,t,M,qv_exact,sigma");
        assert_eq!(lines.len(), 1 + 2 * 5);
        assert!(lines[1].starts_with("0,0,0,0,0,"));
    }

    #[test]
    fn fold_visits_every_path_once_in_order() {
        let grid = make_uniform_grid(1.0, 32).unwrap();
        // More paths than one fold block so the merge path is exercised.
        let n_paths = 3 * FOLD_BLOCK + 17;
        let plan = SimPlan::new(
            band(),
            constant(0.8),
            "c",
            grid.clone(),
            n_paths,
            9,
            true,
        )
        .unwrap();
        let set = PathSet::Plan(plan);
        let terminals = set.map_paths(|_, v| v.terminal()).unwrap();
        let (count, max_abs, indices_ok) = set
            .fold_paths(
                || (0usize, f64::NEG_INFINITY, true),
                |(c, m, ok), i, v| {
                    (
                        c + 1,
                        m.max(v.terminal().abs()),
                        ok && v.terminal() == terminals[i],
                    )
                },
                |a, b| (a.0 + b.0, a.1.max(b.1), a.2 && b.2),
            )
            .unwrap();
        assert_eq!(count, n_paths);
        assert!(indices_ok, "fold must hand each closure the path at its index");
        let expect_max = terminals.iter().fold(f64::NEG_INFINITY, |a, &t| a.max(t.abs()));
        assert_eq!(max_abs.to_bits(), expect_max.to_bits());
    }

    #[test]
    fn fold_over_materialized_bundle_matches_plan() {
        let grid = make_uniform_grid(1.0, 64).unwrap();
        let plan = SimPlan::new(band(), constant(0.8), "c", grid, 300, 4, true).unwrap();
        let bundle = plan.materialize().unwrap();
        let sum = |set: &PathSet| {
            set.fold_paths(|| 0.0, |a, _, v| a + v.qv_terminal(), |a, b| a + b)
                .unwrap()
        };
        let from_plan = sum(&PathSet::Plan(plan));
        let from_bundle = sum(&PathSet::Bundle(bundle));
        assert_eq!(from_plan.to_bits(), from_bundle.to_bits());
    }
}
