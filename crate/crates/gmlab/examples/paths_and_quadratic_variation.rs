//! Simulate a few path bundles and watch the partition quadratic variation
//! converge to the integrated-variance compensator as the grid refines.
//!
//! Run with: cargo run --release --example paths_and_quadratic_variation

use gmlab::model::{make_uniform_grid, ControlStrategy, VolatilityBand};
use gmlab::path::{ladder_map, quadratic_variation_partition, simulate_paths};
use gmlab::stats::mean_se;

fn main() -> gmlab::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let grid = make_uniform_grid(1.0, 512)?;
    let strategy =
        ControlStrategy::Feedback(gmlab::model::FeedbackRule::BangBangUp { pivot: 0.0 });

    let bundle = simulate_paths(band, &strategy, "bang_up", &grid, 2000, 7, true)?;
    let terminals: Vec<f64> = bundle.views().map(|v| v.terminal()).collect();
    let qv: Vec<f64> = bundle.views().map(|v| v.qv_terminal()).collect();
    let (tm, tse) = mean_se(&terminals);
    let (qm, qse) = mean_se(&qv);
    println!("bang_up, N = {} steps, {} paths:", grid.n_steps, bundle.n_paths);
    println!("  terminal mean {tm:.5} (se {tse:.5})  — martingale, so ≈ 0");
    println!("  integrated variance mean {qm:.5} (se {qse:.5}) — between λT = 0.25 and ΛT = 1.0");

    // Partition sums Σ(ΔM)² converge to the compensator as the mesh → 0;
    // all rungs of the ladder share one Brownian skeleton.
    println!("\nmean |Σ(ΔM)² − ∫σ²dt| by grid:");
    let gaps = ladder_map(
        band,
        &strategy,
        "bang_up",
        1.0,
        &[64, 256, 1024, 4096],
        2000,
        7,
        true,
        |_, views| {
            views
                .iter()
                .map(|v| {
                    let partition: f64 = v.increments.iter().map(|d| d * d).sum();
                    (partition - v.qv_terminal()).abs()
                })
                .collect::<Vec<f64>>()
        },
    )?;
    for (r, &steps) in [64usize, 256, 1024, 4096].iter().enumerate() {
        let col: Vec<f64> = gaps.iter().map(|row| row[r]).collect();
        println!("  N = {steps:>5}: {:.6}", mean_se(&col).0);
    }

    // The same bundle exposes full per-path partition trajectories too.
    let partition = quadratic_variation_partition(&bundle);
    println!(
        "\npath 0 partition QV at T: {:.5} vs compensator {:.5}",
        partition[0][grid.n_steps],
        bundle.view(0).qv_terminal()
    );
    Ok(())
}
