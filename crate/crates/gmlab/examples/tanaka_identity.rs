//! The discrete change-of-variable identity for convex payoffs: terminal
//! value = initial value + left-derivative integral + ½·(curvature-weighted
//! local time). For kinked payoffs like |x − a| and calls, the discrete
//! local-time term is *defined* by this balance, so the definitional
//! residual is zero to rounding on every single path — and replacing the
//! crossing estimator with the occupation one turns the residual into a
//! genuine discretization error that shrinks as the grid refines.
//!
//! Run with: cargo run --release --example tanaka_identity

use gmlab::local_time::{occupation_at_level, tanaka_at_level};
use gmlab::model::{ControlStrategy, VolatilityBand};
use gmlab::path::ladder_map;
use gmlab::stats::mean_se;

fn main() -> gmlab::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let strike = 0.2;
    let call = |x: f64| (x - strike).max(0.0);
    let ladder = [1024usize, 4096, 16384];

    let rows = ladder_map(
        band,
        &ControlStrategy::Constant { sigma: 1.0 },
        "const_1.0",
        1.0,
        &ladder,
        2000,
        42,
        true,
        |_, views| {
            views
                .iter()
                .enumerate()
                .map(|(r, v)| {
                    // ∫ f′₋(M) dM with f′₋ = 1 above the strike, 0 below.
                    let mut df = 0.0;
                    for j in 0..v.n_steps() {
                        if v.m[j] > strike {
                            df += v.increments[j];
                        }
                    }
                    let start = call(0.0);
                    let def = call(v.terminal()) - start - df - 0.5 * tanaka_at_level(*v, strike);
                    // Window shrinking with the mesh: ε ∝ N^{-1/4}.
                    let eps = 0.05 * (ladder[ladder.len() - 1] as f64 / ladder[r] as f64).powf(0.25);
                    let occ = call(v.terminal())
                        - start
                        - df
                        - 0.5 * occupation_at_level(*v, strike, eps, false);
                    (def.abs(), occ)
                })
                .collect::<Vec<_>>()
        },
    )?;

    println!("call payoff (x − {strike})⁺, 2000 paths, σ = 1:\n");
    println!(
        "{:>7} {:>24} {:>26}",
        "N", "mean |def. residual|", "|mean occupation residual|"
    );
    for (r, &n) in ladder.iter().enumerate() {
        let def: Vec<f64> = rows.iter().map(|row| row[r].0).collect();
        let occ: Vec<f64> = rows.iter().map(|row| row[r].1).collect();
        println!(
            "{n:>7} {:>24.3e} {:>26.4}",
            mean_se(&def).0,
            mean_se(&occ).0.abs()
        );
    }
    println!("\nthe definitional residual is rounding noise at every N; the");
    println!("occupation-window residual is a real discretization gap that the");
    println!("mesh→0, window→0 limit removes.");
    Ok(())
}
