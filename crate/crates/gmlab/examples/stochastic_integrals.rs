//! Stochastic integrals against simulated martingale paths: simple
//! (piecewise-constant) integrands, state-dependent integrands, the exact
//! telescoping identities they satisfy, and the norms `‖·‖_M` (dt-weighted)
//! vs `‖·‖_M̄` (variance-weighted) that sandwich each other through the
//! volatility band.
//!
//! Run with: cargo run --release --example stochastic_integrals

use gmlab::calculus::{
    evaluate_state, integrate_simple, integrate_state, m_norm, mbar_norm, SimpleProcess,
    StateIntegrand,
};
use gmlab::model::{make_uniform_grid, ControlStrategy, VolatilityBand};
use gmlab::path::simulate_paths;
use gmlab::stats::mean_se;

fn main() -> gmlab::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let grid = make_uniform_grid(2.0, 1024)?;
    let bundle = simulate_paths(
        band,
        &ControlStrategy::Constant { sigma: 0.8 },
        "const_0.8",
        &grid,
        4000,
        11,
        true,
    )?;

    // ∫ 1 dM telescopes to M_T exactly, path by path.
    let ones = SimpleProcess::constant(1.0);
    let unit = integrate_simple(&ones, &bundle)?;
    let worst = bundle
        .views()
        .zip(&unit)
        .map(|(v, row)| (row[grid.n_steps] - v.terminal()).abs())
        .fold(0.0f64, f64::max);
    println!("max |∫1 dM − M_T| over 4000 paths: {worst:.2e}");

    // 2∫M dM + ⟨M⟩ = M² up to the partition error, which shrinks with N.
    let ident = StateIntegrand::identity();
    let m_int = integrate_state(&ident, &bundle)?;
    let residuals: Vec<f64> = bundle
        .views()
        .zip(&m_int)
        .map(|(v, row)| {
            let partition: f64 = v.increments.iter().map(|d| d * d).sum();
            v.terminal().powi(2) - 2.0 * row[grid.n_steps] - partition
        })
        .collect();
    println!(
        "mean |M_T² − 2∫M dM − Σ(ΔM)²|: {:.2e} (exact identity of the scheme)",
        residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64
    );

    // Isometry: E[(∫f dM)²] = E[∫f² d⟨M⟩] for bounded f.
    let f = StateIntegrand::sgn_shift(0.0);
    let ints = integrate_state(&f, &bundle)?;
    let sq: Vec<f64> = ints.iter().map(|row| row[grid.n_steps].powi(2)).collect();
    let qv: Vec<f64> = bundle.views().map(|v| v.qv_terminal()).collect();
    let (lhs, se) = mean_se(&sq);
    println!(
        "isometry with f = sgn: E[(∫f dM)²] = {lhs:.4} (se {se:.4}) vs E[⟨M⟩_T] = {:.4}",
        mean_se(&qv).0
    );

    // Norm sandwich: λ^{1/p}‖η‖_M ≤ ‖η‖_M̄ ≤ Λ^{1/p}‖η‖_M.
    let values = evaluate_state(&ident, &bundle)?;
    for p in [1.0, 2.0] {
        let m = m_norm(&values, &grid, p)?;
        let mb = mbar_norm(&values, &bundle, p)?;
        println!(
            "p = {p}: λ^(1/p)·‖M‖ = {:.4} ≤ ‖M‖̄  = {mb:.4} ≤ Λ^(1/p)·‖M‖ = {:.4}",
            band.lambda().powf(1.0 / p) * m,
            band.lambda_cap().powf(1.0 / p) * m
        );
    }
    Ok(())
}
