//! Local time of simulated martingale paths: how much quadratic variation
//! accrues while the path sits at a given level.
//!
//! Two independent estimators are built on a shared `(level × time)` grid:
//!
//! * **level-crossing (Tanaka-type)**:
//!   `L_t(a) = |M_t − a| − |M_0 − a| − Σ_{j<t} sgn(M_{t_j} − a) ΔM_j`,
//!   the discrete version of the convex change-of-variable formula with
//!   `f = |· − a|`. Each step contributes `2·(overshoot past a)` ≥ 0, so the
//!   estimator is nonnegative and nondecreasing in `t` up to floating-point
//!   rounding, and its mean at `a` equals the sample mean of
//!   `|M_t − a| − |M_0 − a|` minus a zero-mean martingale term.
//! * **occupation-time**: `(1/ε) Σ_j I_{[a,a+ε)}(M_{t_j}) · (qv_{j+1} − qv_j)`
//!   (or the symmetric window `(a−ε, a+ε)` with `1/(2ε)`), nonnegative and
//!   `t`-nondecreasing *exactly* by construction.
//!
//! The two agree in the limit `(ε, Δt) → 0`; their discrepancy at finite
//! resolution is itself a reported diagnostic.

use crate::error::{Error, Result};
use crate::model::VolatilityBand;
use crate::path::{PathBundle, PathSet, PathView};
use crate::stats::{mean_se, ols_slope, pairwise_sum};

/// Sign with the left-derivative convention: `sgn(x) = 1` for `x > 0` and
/// `−1` for `x ≤ 0` (so `sgn(· − a)` is the left derivative of `|· − a|`).
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Uniformly spaced levels `a_0 < a_1 < … < a_K`.
#[derive(Debug, Clone)]
pub struct LevelGrid {
    levels: Vec<f64>,
    pub spacing: f64,
}

impl LevelGrid {
    pub fn new(first: f64, spacing: f64, count: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid("level spacing must be positive"));
        }
        if count < 2 {
            return Err(Error::invalid("level grid needs at least two levels"));
        }
        if !first.is_finite() {
            return Err(Error::invalid("level grid origin must be finite"));
        }
        let levels = (0..count).map(|k| first + k as f64 * spacing).collect();
        Ok(LevelGrid { levels, spacing })
    }

    /// Symmetric grid covering `[−half_span, half_span]` (inclusive ends,
    /// rounded out to whole spacings).
    pub fn symmetric(half_span: f64, spacing: f64) -> Result<Self> {
        if !(half_span.is_finite() && half_span > 0.0) {
            return Err(Error::invalid("level span must be positive"));
        }
        let k = (half_span / spacing).ceil() as usize;
        LevelGrid::new(-(k as f64) * spacing, spacing, 2 * k + 1)
    }

    /// Default levels for a band: spacing `0.02·σ̄√T` spanning `±4·σ̄√T`
    /// (the bulk of the terminal law, resolved finely relative to typical
    /// occupation windows).
    pub fn default_for(band: &VolatilityBand, horizon: f64) -> LevelGrid {
        let scale = band.sigma_high * horizon.sqrt();
        LevelGrid::symmetric(4.0 * scale, 0.02 * scale).expect("positive band scale")
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.levels[0]
    }

    pub fn last(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// Number of levels strictly below `x` (clamped to `0..=len`).
    #[inline]
    fn count_below(&self, x: f64) -> usize {
        let r = (x - self.levels[0]) / self.spacing;
        if r <= 0.0 {
            0
        } else {
            (r.ceil() as usize).min(self.levels.len())
        }
    }
}

/// Per-path local-time values on a `(level × time-checkpoint)` grid, for
/// one or both estimators.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    pub levels: LevelGrid,
    /// Node indices of the time checkpoints (into the source grid).
    pub checkpoint_nodes: Vec<usize>,
    pub checkpoint_times: Vec<f64>,
    /// Occupation window half-width (NaN when no occupation part).
    pub epsilon: f64,
    pub symmetric_window: bool,
    pub n_paths: usize,
    tanaka: Option<Vec<f64>>,     // n_paths × checkpoints × levels
    occupation: Option<Vec<f64>>, // same layout
}

/// Mean/SE profiles over paths, shaped `checkpoints × levels`.
#[derive(Debug, Clone)]
pub struct FieldSummary {
    pub mean_tanaka: Vec<Vec<f64>>,
    pub se_tanaka: Vec<Vec<f64>>,
    pub mean_occupation: Vec<Vec<f64>>,
    pub se_occupation: Vec<Vec<f64>>,
}

impl LocalTimeField {
    #[inline]
    fn idx(&self, path: usize, checkpoint: usize, level: usize) -> usize {
        (path * self.checkpoint_nodes.len() + checkpoint) * self.levels.len() + level
    }

    pub fn tanaka_at(&self, path: usize, checkpoint: usize, level: usize) -> Option<f64> {
        self.tanaka.as_ref().map(|v| v[self.idx(path, checkpoint, level)])
    }

    pub fn occupation_at(&self, path: usize, checkpoint: usize, level: usize) -> Option<f64> {
        self.occupation
            .as_ref()
            .map(|v| v[self.idx(path, checkpoint, level)])
    }

    pub fn has_tanaka(&self) -> bool {
        self.tanaka.is_some()
    }

    pub fn has_occupation(&self) -> bool {
        self.occupation.is_some()
    }

    /// Mean and standard error over paths, per (checkpoint, level); absent
    /// estimators yield empty matrices.
    pub fn summarize(&self) -> FieldSummary {
        let summarize_part = |part: &Option<Vec<f64>>| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
            let Some(values) = part else {
                return (Vec::new(), Vec::new());
            };
            let c_count = self.checkpoint_nodes.len();
            let k_count = self.levels.len();
            let mut means = vec![vec![0.0; k_count]; c_count];
            let mut ses = vec![vec![0.0; k_count]; c_count];
            let mut scratch = vec![0.0; self.n_paths];
            for c in 0..c_count {
                for k in 0..k_count {
                    for (p, slot) in scratch.iter_mut().enumerate() {
                        *slot = values[(p * c_count + c) * k_count + k];
                    }
                    let (m, s) = mean_se(&scratch);
                    means[c][k] = m;
                    ses[c][k] = s;
                }
            }
            (means, ses)
        };
        let (mean_tanaka, se_tanaka) = summarize_part(&self.tanaka);
        let (mean_occupation, se_occupation) = summarize_part(&self.occupation);
        FieldSummary {
            mean_tanaka,
            se_tanaka,
            mean_occupation,
            se_occupation,
        }
    }
}

/// What to build in one pass over a path set.
#[derive(Debug, Clone)]
pub struct FieldRequest {
    pub levels: LevelGrid,
    /// Node indices at which the running values are recorded (strictly
    /// increasing, each ≤ N).
    pub checkpoints: Vec<usize>,
    /// Occupation window half-width; set ≤ 0 to skip the occupation part.
    pub epsilon: f64,
    pub symmetric: bool,
    pub with_tanaka: bool,
}

fn validate_checkpoints(checkpoints: &[usize], n_steps: usize) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::invalid("need at least one time checkpoint"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be strictly increasing"));
    }
    if *checkpoints.last().unwrap() > n_steps {
        return Err(Error::invalid("checkpoint beyond the last grid node"));
    }
    Ok(())
}

/// Build level-crossing and/or occupation local-time values for every path
/// in one sweep. Work per path is `O(N + checkpoints·levels)` thanks to a
/// difference-array accumulation over levels, so dense level grids are
/// cheap even at fine time resolution.
pub fn local_time_field(set: &PathSet, req: &FieldRequest) -> Result<LocalTimeField> {
    let grid = set.grid();
    validate_checkpoints(&req.checkpoints, grid.n_steps)?;
    let with_occ = req.epsilon > 0.0;
    if !with_occ && !req.with_tanaka {
        return Err(Error::invalid("field request selects no estimator"));
    }
    if !req.epsilon.is_nan() && req.epsilon < 0.0 {
        return Err(Error::invalid("occupation window must be positive"));
    }
    let k_count = req.levels.len();
    let c_count = req.checkpoints.len();
    let n_paths = set.n_paths();
    let parts = req.with_tanaka as usize + with_occ as usize;
    let cells = n_paths
        .checked_mul(c_count * k_count * parts)
        .filter(|&c| c <= crate::path::MAX_BUNDLE_ELEMENTS)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "local-time field of {n_paths} paths × {c_count} checkpoints × {k_count} levels \
                 exceeds the in-memory cap; reduce checkpoints or levels"
            ))
        })?;
    let _ = cells;

    struct Row {
        tanaka: Vec<f64>,
        occupation: Vec<f64>,
    }

    let rows: Vec<Row> = set.map_paths(|_, view| {
        let mut tan = if req.with_tanaka {
            vec![0.0; c_count * k_count]
        } else {
            Vec::new()
        };
        let mut occ = if with_occ {
            vec![0.0; c_count * k_count]
        } else {
            Vec::new()
        };
        path_field_rows(view, req, &mut tan, &mut occ);
        Row {
            tanaka: tan,
            occupation: occ,
        }
    })?;

    let gather = |pick: fn(&Row) -> &Vec<f64>| -> Vec<f64> {
        let mut out = Vec::with_capacity(n_paths * c_count * k_count);
        for row in &rows {
            out.extend_from_slice(pick(row));
        }
        out
    };
    let tanaka = req.with_tanaka.then(|| gather(|r| &r.tanaka));
    let occupation = with_occ.then(|| gather(|r| &r.occupation));

    Ok(LocalTimeField {
        levels: req.levels.clone(),
        checkpoint_times: req.checkpoints.iter().map(|&c| grid.node(c)).collect(),
        checkpoint_nodes: req.checkpoints.clone(),
        epsilon: if with_occ { req.epsilon } else { f64::NAN },
        symmetric_window: req.symmetric,
        n_paths,
        tanaka,
        occupation,
    })
}

/// Streaming mean/SE field over every path of a set, shaped like
/// [`LocalTimeField::summarize`] output but never holding all per-path
/// values at once — so the element-capacity cap does not apply. Cell
/// variances come from running sums merged over fixed path blocks
/// ([`crate::path::FOLD_BLOCK`]), which keeps the result independent of the
/// worker count; rounding differs immaterially from the two-pass
/// `summarize`.
pub fn field_summary(set: &PathSet, req: &FieldRequest) -> Result<FieldSummary> {
    let grid = set.grid();
    validate_checkpoints(&req.checkpoints, grid.n_steps)?;
    let with_occ = req.epsilon > 0.0;
    if !with_occ && !req.with_tanaka {
        return Err(Error::invalid("field request selects no estimator"));
    }
    if !req.epsilon.is_nan() && req.epsilon < 0.0 {
        return Err(Error::invalid("occupation window must be positive"));
    }
    let k_count = req.levels.len();
    let c_count = req.checkpoints.len();
    let cells = c_count * k_count;

    struct Acc {
        count: usize,
        sum_tan: Vec<f64>,
        sumsq_tan: Vec<f64>,
        sum_occ: Vec<f64>,
        sumsq_occ: Vec<f64>,
        scratch_tan: Vec<f64>,
        scratch_occ: Vec<f64>,
    }
    let zeros = |on: bool| if on { vec![0.0; cells] } else { Vec::new() };
    let n_paths = set.n_paths();
    let acc = set.fold_paths(
        || Acc {
            count: 0,
            sum_tan: zeros(req.with_tanaka),
            sumsq_tan: zeros(req.with_tanaka),
            sum_occ: zeros(with_occ),
            sumsq_occ: zeros(with_occ),
            scratch_tan: zeros(req.with_tanaka),
            scratch_occ: zeros(with_occ),
        },
        |mut acc, _, view| {
            acc.scratch_tan.fill(0.0);
            acc.scratch_occ.fill(0.0);
            path_field_rows(view, req, &mut acc.scratch_tan, &mut acc.scratch_occ);
            for (k, &v) in acc.scratch_tan.iter().enumerate() {
                acc.sum_tan[k] += v;
                acc.sumsq_tan[k] += v * v;
            }
            for (k, &v) in acc.scratch_occ.iter().enumerate() {
                acc.sum_occ[k] += v;
                acc.sumsq_occ[k] += v * v;
            }
            acc.count += 1;
            acc
        },
        |mut a, b| {
            a.count += b.count;
            for (x, y) in a.sum_tan.iter_mut().zip(&b.sum_tan) {
                *x += y;
            }
            for (x, y) in a.sumsq_tan.iter_mut().zip(&b.sumsq_tan) {
                *x += y;
            }
            for (x, y) in a.sum_occ.iter_mut().zip(&b.sum_occ) {
                *x += y;
            }
            for (x, y) in a.sumsq_occ.iter_mut().zip(&b.sumsq_occ) {
                *x += y;
            }
            a
        },
    )?;

    let shape = |sum: &[f64], sumsq: &[f64]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        if sum.is_empty() {
            return (Vec::new(), Vec::new());
        }
        let n = acc.count as f64;
        let mut means = vec![vec![0.0; k_count]; c_count];
        let mut ses = vec![vec![0.0; k_count]; c_count];
        for c in 0..c_count {
            for k in 0..k_count {
                let i = c * k_count + k;
                let mean = sum[i] / n;
                means[c][k] = mean;
                if acc.count > 1 {
                    let var = ((sumsq[i] - sum[i] * mean) / (n - 1.0)).max(0.0);
                    ses[c][k] = (var / n).sqrt();
                }
            }
        }
        (means, ses)
    };
    debug_assert_eq!(acc.count, n_paths);
    let (mean_tanaka, se_tanaka) = shape(&acc.sum_tan, &acc.sumsq_tan);
    let (mean_occupation, se_occupation) = shape(&acc.sum_occ, &acc.sumsq_occ);
    Ok(FieldSummary {
        mean_tanaka,
        se_tanaka,
        mean_occupation,
        se_occupation,
    })
}

/// One path's field rows (checkpoints × levels, row-major into `tan`/`occ`).
fn path_field_rows(view: PathView<'_>, req: &FieldRequest, tan: &mut [f64], occ: &mut [f64]) {
    let levels = &req.levels;
    let k_count = levels.len();
    let with_tan = !tan.is_empty();
    let with_occ = !occ.is_empty();
    // Difference arrays: d_tan accumulates Σ ΔM_j over levels strictly below
    // M_j; d_occ accumulates Σ qv-increments over levels whose window holds
    // M_j. Prefix sums realize the per-level totals at each checkpoint.
    let mut d_tan = vec![0.0; k_count + 1];
    let mut d_occ = vec![0.0; k_count + 1];
    let mut sum_inc = 0.0;
    let mut next_cp = 0;
    let weight = if req.symmetric {
        1.0 / (2.0 * req.epsilon)
    } else {
        1.0 / req.epsilon
    };

    let emit = |cp: usize,
                    d_tan: &[f64],
                    d_occ: &[f64],
                    sum_inc: f64,
                    m_t: f64,
                    tan: &mut [f64],
                    occ: &mut [f64]| {
        let base = cp * k_count;
        if with_tan {
            let mut below = 0.0;
            for (k, &a) in levels.levels().iter().enumerate() {
                below += d_tan[k];
                // Σ sgn(M−a)ΔM = 2·Σ_{M>a} ΔM − Σ ΔM
                let sgn_integral = 2.0 * below - sum_inc;
                tan[base + k] = (m_t - a).abs() - a.abs() - sgn_integral;
            }
        }
        if with_occ {
            let mut mass = 0.0;
            for k in 0..k_count {
                mass += d_occ[k];
                occ[base + k] = mass * weight;
            }
        }
    };

    for j in 0..=view.n_steps() {
        while next_cp < req.checkpoints.len() && req.checkpoints[next_cp] == j {
            emit(next_cp, &d_tan, &d_occ, sum_inc, view.m[j], tan, occ);
            next_cp += 1;
        }
        if j == view.n_steps() {
            break;
        }
        let m_j = view.m[j];
        if with_tan {
            let idx = levels.count_below(m_j);
            let inc = view.increments[j];
            if idx > 0 {
                d_tan[0] += inc;
                d_tan[idx] -= inc;
            }
            sum_inc += inc;
        }
        if with_occ {
            let w = view.qv[j + 1] - view.qv[j];
            let (lo, hi) = window_level_range(levels, m_j, req.epsilon, req.symmetric);
            if lo < hi {
                d_occ[lo] += w;
                d_occ[hi] -= w;
            }
        }
    }
}

/// Index range `[lo, hi)` of levels whose occupation window contains `x`:
/// one-sided `a ≤ x < a+ε`, symmetric `a−ε < x < a+ε`.
#[inline]
fn window_level_range(levels: &LevelGrid, x: f64, eps: f64, symmetric: bool) -> (usize, usize) {
    let k = levels.len();
    let a0 = levels.first();
    let s = levels.spacing;
    if symmetric {
        // a > x − ε  and  a < x + ε
        let lo = count_at_most(a0, s, k, x - eps);
        let hi = strictly_below_bound(a0, s, k, x + eps);
        (lo, hi.max(lo))
    } else {
        // a > x − ε  and  a ≤ x
        let lo = count_at_most(a0, s, k, x - eps);
        let hi = count_at_most(a0, s, k, x);
        (lo, hi.max(lo))
    }
}

/// Count of k with `a_k ≤ y` — equivalently the smallest k with `a_k > y` —
/// clamped to `0..=k_count`.
#[inline]
fn count_at_most(a0: f64, s: f64, k_count: usize, y: f64) -> usize {
    let r = (y - a0) / s;
    if r < 0.0 {
        0
    } else {
        ((r.floor() as usize) + 1).min(k_count)
    }
}

/// Count of k with `a_k < y` (exclusive upper index), clamped.
#[inline]
fn strictly_below_bound(a0: f64, s: f64, k_count: usize, y: f64) -> usize {
    let r = (y - a0) / s;
    if r <= 0.0 {
        0
    } else {
        (r.ceil() as usize).min(k_count)
    }
}

/// Level-crossing estimator on all grid nodes (definitional form). For
/// large bundles prefer [`local_time_field`] with selected checkpoints.
pub fn local_time_tanaka(bundle: &PathBundle, levels: &LevelGrid) -> Result<LocalTimeField> {
    let req = FieldRequest {
        levels: levels.clone(),
        checkpoints: (0..=bundle.grid.n_steps).collect(),
        epsilon: f64::NAN,
        symmetric: false,
        with_tanaka: true,
    };
    local_time_field(&PathSet::Bundle(bundle.clone()), &req)
}

/// Occupation estimator on all grid nodes.
pub fn local_time_occupation(
    bundle: &PathBundle,
    levels: &LevelGrid,
    epsilon: f64,
    symmetric: bool,
) -> Result<LocalTimeField> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("occupation window epsilon must be > 0"));
    }
    let req = FieldRequest {
        levels: levels.clone(),
        checkpoints: (0..=bundle.grid.n_steps).collect(),
        epsilon,
        symmetric,
        with_tanaka: false,
    };
    local_time_field(&PathSet::Bundle(bundle.clone()), &req)
}

/// Terminal level-crossing local time at a single level (definitional sum;
/// matches the field kernel to rounding).
pub fn tanaka_at_level(view: PathView<'_>, a: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..view.n_steps() {
        s += sgn(view.m[j] - a) * view.increments[j];
    }
    (view.terminal() - a).abs() - a.abs() - s
}

/// Running level-crossing local time at one level, on all nodes.
pub fn tanaka_running_at_level(view: PathView<'_>, a: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(view.m.len());
    let mut s = 0.0;
    out.push(0.0);
    for j in 0..view.n_steps() {
        s += sgn(view.m[j] - a) * view.increments[j];
        out.push((view.m[j + 1] - a).abs() - a.abs() - s);
    }
    out
}

/// Terminal occupation local time at a single level.
pub fn occupation_at_level(view: PathView<'_>, a: f64, eps: f64, symmetric: bool) -> f64 {
    let mut mass = 0.0;
    for j in 0..view.n_steps() {
        let m = view.m[j];
        let hit = if symmetric {
            a - eps < m && m < a + eps
        } else {
            a <= m && m < a + eps
        };
        if hit {
            mass += view.qv[j + 1] - view.qv[j];
        }
    }
    mass / if symmetric { 2.0 * eps } else { eps }
}

/// Running occupation local time at one level, on all nodes.
pub fn occupation_running_at_level(
    view: PathView<'_>,
    a: f64,
    eps: f64,
    symmetric: bool,
) -> Vec<f64> {
    let weight = if symmetric { 2.0 * eps } else { eps };
    let mut out = Vec::with_capacity(view.m.len());
    let mut mass = 0.0;
    out.push(0.0);
    for j in 0..view.n_steps() {
        let m = view.m[j];
        let hit = if symmetric {
            a - eps < m && m < a + eps
        } else {
            a <= m && m < a + eps
        };
        if hit {
            mass += view.qv[j + 1] - view.qv[j];
        }
        out.push(mass / weight);
    }
    out
}

/// Outcome of the occupation-density identity test
/// `∫ g(M) d⟨M⟩ = ∫ g(a) L_T(a) da`.
#[derive(Debug, Clone)]
pub struct OccupationFormulaReport {
    pub per_path_relative_error: Vec<f64>,
    pub mean_relative_error: f64,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
}

/// Compare the state-clock integral `Σ g(M_j)(qv_{j+1}−qv_j)` against the
/// level-integral `Σ_k g(a_k)·L_T(a_k)·spacing` built from the
/// level-crossing estimator, per path. Paths leaving the level span are a
/// coverage error (the level integral would silently lose mass).
pub fn occupation_formula_check(
    set: &PathSet,
    g: impl Fn(f64) -> f64 + Sync,
    levels: &LevelGrid,
) -> Result<OccupationFormulaReport> {
    let k_count = levels.len();
    let req = FieldRequest {
        levels: levels.clone(),
        checkpoints: vec![set.grid().n_steps],
        epsilon: f64::NAN,
        symmetric: false,
        with_tanaka: true,
    };
    let g_on_levels: Vec<f64> = levels.levels().iter().map(|&a| g(a)).collect();
    if g_on_levels.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("g is non-finite on a level"));
    }

    struct PathOut {
        lhs: f64,
        rhs: f64,
        rel: f64,
        covered: bool,
    }

    let rows: Vec<PathOut> = set.map_paths(|_, view| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &m in view.m {
            lo = lo.min(m);
            hi = hi.max(m);
        }
        let covered = lo >= levels.first() && hi <= levels.last();
        let terms: Vec<f64> = (0..view.n_steps())
            .map(|j| g(view.m[j]) * (view.qv[j + 1] - view.qv[j]))
            .collect();
        let lhs = pairwise_sum(&terms);
        let mut tan = vec![0.0; k_count];
        let mut occ = Vec::new();
        path_field_rows(view, &req, &mut tan, &mut occ);
        let rhs_terms: Vec<f64> = tan
            .iter()
            .zip(g_on_levels.iter())
            .map(|(&l, &gv)| gv * l * levels.spacing)
            .collect();
        let rhs = pairwise_sum(&rhs_terms);
        let scale = lhs.abs().max(view.qv_terminal().abs()).max(1e-300);
        PathOut {
            lhs,
            rhs,
            rel: (lhs - rhs).abs() / scale,
            covered,
        }
    })?;

    if let Some(bad) = rows.iter().position(|r| !r.covered) {
        return Err(Error::Coverage(format!(
            "path {bad} leaves the level span [{}, {}]; widen the level grid",
            levels.first(),
            levels.last()
        )));
    }
    let rels: Vec<f64> = rows.iter().map(|r| r.rel).collect();
    let lhs: Vec<f64> = rows.iter().map(|r| r.lhs).collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.rhs).collect();
    Ok(OccupationFormulaReport {
        mean_relative_error: mean_se(&rels).0,
        per_path_relative_error: rels,
        lhs_mean: mean_se(&lhs).0,
        rhs_mean: mean_se(&rhs).0,
    })
}

/// Outcome of the support test: local time must accrue only while the path
/// is at the level.
#[derive(Debug, Clone)]
pub struct GrowthSetReport {
    pub levels: Vec<f64>,
    pub epsilon_band: f64,
    /// Per level: Σ over far steps of level-crossing increments, divided by
    /// the mean terminal local time at that level.
    pub tanaka_violation_fraction: Vec<f64>,
    /// Same for the occupation estimator (exactly zero by construction when
    /// `epsilon_band ≥ epsilon`).
    pub occupation_violation_fraction: Vec<f64>,
}

/// Measure how much local time accrues on steps where the path is farther
/// than `ε_band = ε + 2σ̄√(Δt·ln N)` from the level: discrete increments
/// concentrate where `M ≈ a`, so the far mass should be a negligible
/// fraction of the total.
pub fn growth_set_check(
    set: &PathSet,
    levels: &[f64],
    epsilon: f64,
    symmetric: bool,
) -> Result<GrowthSetReport> {
    if levels.is_empty() {
        return Err(Error::invalid("growth-set check needs at least one level"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("occupation window epsilon must be > 0"));
    }
    let grid = set.grid();
    let n = grid.n_steps as f64;
    let dt = grid.mesh();
    let eps_band = epsilon + 2.0 * set.band().sigma_high * (dt * n.ln()).sqrt();

    struct PerPath {
        tan_far: Vec<f64>,
        tan_total: Vec<f64>,
        occ_far: Vec<f64>,
        occ_total: Vec<f64>,
    }

    let rows: Vec<PerPath> = set.map_paths(|_, view| {
        let mut out = PerPath {
            tan_far: vec![0.0; levels.len()],
            tan_total: vec![0.0; levels.len()],
            occ_far: vec![0.0; levels.len()],
            occ_total: vec![0.0; levels.len()],
        };
        for (li, &a) in levels.iter().enumerate() {
            let tan = tanaka_running_at_level(view, a);
            let occ = occupation_running_at_level(view, a, epsilon, symmetric);
            let mut tan_far = 0.0;
            let mut occ_far = 0.0;
            for j in 0..view.n_steps() {
                if (view.m[j] - a).abs() > eps_band {
                    tan_far += tan[j + 1] - tan[j];
                    occ_far += occ[j + 1] - occ[j];
                }
            }
            out.tan_far[li] = tan_far;
            out.tan_total[li] = tan[view.n_steps()];
            out.occ_far[li] = occ_far;
            out.occ_total[li] = occ[view.n_steps()];
        }
        out
    })?;

    let fraction = |far: fn(&PerPath) -> &Vec<f64>, total: fn(&PerPath) -> &Vec<f64>| {
        (0..levels.len())
            .map(|li| {
                let f: Vec<f64> = rows.iter().map(|r| far(r)[li].abs()).collect();
                let t: Vec<f64> = rows.iter().map(|r| total(r)[li]).collect();
                let tm = mean_se(&t).0;
                if tm <= 0.0 {
                    0.0
                } else {
                    mean_se(&f).0 / tm
                }
            })
            .collect()
    };

    Ok(GrowthSetReport {
        levels: levels.to_vec(),
        epsilon_band: eps_band,
        tanaka_violation_fraction: fraction(|r| &r.tan_far, |r| &r.tan_total),
        occupation_violation_fraction: fraction(|r| &r.occ_far, |r| &r.occ_total),
    })
}

/// Level-regularity outcome: moments of the sup-difference of the
/// sign-integrals across level pairs, the fitted decay exponent, and the
/// calibrated moment bound.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub anchor: f64,
    pub gaps: Vec<f64>,
    /// `Ê[sup_t |∫(sgn(M−x)−sgn(M−y))dM|^{2n}]` estimates per gap.
    pub moments: Vec<f64>,
    pub moment_ses: Vec<f64>,
    /// OLS slope of log-moment against log-gap.
    pub slope: f64,
    /// Bound `μ(h₀)·(h/h₀)^{n−1/2}` per gap (calibrated at the widest gap;
    /// the `−1/2` absorbs the level-roughness of the discrete estimator).
    pub calibrated_bounds: Vec<f64>,
    pub raw_inequality_ok: bool,
    pub moment_order: usize,
}

/// Estimate `Ê[sup_t |D_t(x,y)|^{2n}]` where
/// `D_t = ∫(sgn(M−x) − sgn(M−y)) dM = 2 Σ_{x < M_j ≤ y} ΔM_j`, for pairs
/// `(anchor − h, anchor)` over the given gaps, and fit the decay exponent.
/// A slope near `n` certifies that nearby levels have nearby local times
/// uniformly in time (the sup is inside the expectation).
pub fn level_regularity_check(
    set: &PathSet,
    anchor: f64,
    gaps: &[f64],
    n: usize,
) -> Result<RegularityReport> {
    if n < 2 {
        return Err(Error::invalid("moment order n must be ≥ 2"));
    }
    if gaps.len() < 4 {
        return Err(Error::invalid("need at least 4 level pairs"));
    }
    if gaps.iter().any(|&h| !(h.is_finite() && h > 0.0))
        || gaps.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(Error::invalid("gaps must be positive and strictly decreasing"));
    }
    let sups = sup_pair_diff_powers(set, anchor, gaps, n)?;
    let mut moments = Vec::with_capacity(gaps.len());
    let mut ses = Vec::with_capacity(gaps.len());
    for gi in 0..gaps.len() {
        let col: Vec<f64> = sups.iter().map(|row| row[gi]).collect();
        let (m, s) = mean_se(&col);
        moments.push(m);
        ses.push(s);
    }
    if moments.iter().any(|&m| m <= 0.0) {
        return Err(Error::Degenerate(
            "a sup-difference moment is zero (constant paths or coincident levels); \
             no exponent can be fitted"
                .into(),
        ));
    }
    let log_h: Vec<f64> = gaps.iter().map(|h| h.ln()).collect();
    let log_m: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
    let slope = ols_slope(&log_h, &log_m);
    let exponent = n as f64 - 0.5;
    let calibrated_bounds: Vec<f64> = gaps
        .iter()
        .map(|&h| moments[0] * (h / gaps[0]).powf(exponent))
        .collect();
    let raw_inequality_ok = moments
        .iter()
        .zip(calibrated_bounds.iter())
        .all(|(&m, &b)| m <= b * (1.0 + 1e-12));
    Ok(RegularityReport {
        anchor,
        gaps: gaps.to_vec(),
        moments,
        moment_ses: ses,
        slope,
        calibrated_bounds,
        raw_inequality_ok,
        moment_order: n,
    })
}

/// Per-path `sup_t |D_t|^{2n}` for each gap (pairs `(anchor − h, anchor)`).
pub fn sup_pair_diff_powers(
    set: &PathSet,
    anchor: f64,
    gaps: &[f64],
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    set.map_paths(|_, view| {
        gaps.iter()
            .map(|&h| {
                let x = anchor - h;
                let y = anchor;
                let mut d = 0.0;
                let mut sup = 0.0;
                for j in 0..view.n_steps() {
                    let m = view.m[j];
                    if x < m && m <= y {
                        d += 2.0 * view.increments[j];
                        let a = d.abs();
                        if a > sup {
                            sup = a;
                        }
                    }
                }
                sup.powi(2 * n as i32)
            })
            .collect()
    })
}
