//! Deterministic summary statistics.
//!
//! Every reduction in this crate funnels through [`pairwise_sum`], which
//! adds a slice under a fixed-shape binary tree. The tree depends only on
//! the slice length, so results are bitwise identical no matter how many
//! worker threads produced the inputs — that property is what makes
//! `--workers 1` and `--workers 8` byte-identical at the report level.

/// Pairwise (cascade) summation with a fixed reduction tree.
///
/// Below `BLOCK` elements a plain left-to-right loop is used; above, the
/// slice is split at the largest power of two strictly below its length.
/// Accuracy is O(log n) ulps instead of O(n) for naive summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mut half = 1usize;
    while half * 2 < xs.len() {
        half *= 2;
    }
    let (lo, hi) = xs.split_at(half);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Mean and standard error of the mean, both from pairwise sums.
///
/// Returns `(mean, se)`; `se` is 0 for fewer than two samples.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    // Two-pass variance: deterministic and immune to catastrophic
    // cancellation for the magnitudes seen here.
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let num: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (x - mx) * (y - my))
        .collect();
    let den: Vec<f64> = xs.iter().map(|&x| (x - mx) * (x - mx)).collect();
    pairwise_sum(&num) / pairwise_sum(&den)
}

/// Elementwise in-place accumulation `acc[i] += xs[i]`.
pub fn add_assign(acc: &mut [f64], xs: &[f64]) {
    assert_eq!(acc.len(), xs.len());
    for (a, &x) in acc.iter_mut().zip(xs) {
        *a += x;
    }
}

/// Column means (and standard errors) of fixed-length per-path rows,
/// reduced in path order with the same fixed tree as [`pairwise_sum`].
pub fn column_mean_se(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    if rows.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let width = rows[0].len();
    let n = rows.len();
    let mut col = vec![0.0; n];
    let mut means = vec![0.0; width];
    let mut ses = vec![0.0; width];
    for j in 0..width {
        for (i, row) in rows.iter().enumerate() {
            col[i] = row[j];
        }
        let (m, s) = mean_se(&col);
        means[j] = m;
        ses[j] = s;
    }
    (means, ses)
}
