//! Build the local-time field — mean accumulated local time on a grid of
//! levels × times — with both discrete estimators, and print a small slice.
//! The level-crossing (Tanaka-form) estimator needs no window parameter;
//! the occupation estimator divides time-at-level by its window width.
//!
//! Run with: cargo run --release --example local_time_field

use gmlab::local_time::{field_summary, FieldRequest, LevelGrid};
use gmlab::model::{make_uniform_grid, ControlStrategy, VolatilityBand};
use gmlab::path::{PathSet, SimPlan};

fn main() -> gmlab::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let grid = make_uniform_grid(1.0, 4096)?;
    let plan = SimPlan::new(
        band,
        ControlStrategy::Constant { sigma: 1.0 },
        "const_1.0",
        grid.clone(),
        8000,
        42,
        true,
    )?;

    let levels = LevelGrid::symmetric(1.0, 0.25)?;
    let checkpoints = vec![1024, 2048, 3072, 4096];
    let req = FieldRequest {
        levels: levels.clone(),
        checkpoints: checkpoints.clone(),
        epsilon: 0.05,
        symmetric: false,
        with_tanaka: true,
    };
    let summary = field_summary(&PathSet::Plan(plan), &req)?;

    println!("mean local time L_t(a), crossing estimator (occupation in parens):\n");
    print!("{:>8}", "a \\ t");
    for &c in &checkpoints {
        print!("{:>18.2}", grid.node(c));
    }
    println!();
    for (k, &a) in levels.levels().iter().enumerate() {
        print!("{a:>8.2}");
        for (c, _) in checkpoints.iter().enumerate() {
            print!(
                "{:>9.3} ({:.3})",
                summary.mean_tanaka[c][k], summary.mean_occupation[c][k]
            );
        }
        println!();
    }

    println!("\nreading the surface: local time is largest at the starting level 0,");
    println!("grows in t, and decays as |a| moves toward the range the paths rarely");
    println!("visit. The two estimators agree to O(window + mesh) everywhere.");
    println!("\nE[L_1(0)] for constant σ = 1 is E|M_1| = √(2/π) ≈ 0.7979 — compare");
    println!(
        "the bottom-center entry: {:.4}",
        summary.mean_tanaka[3][levels.len() / 2]
    );
    Ok(())
}
