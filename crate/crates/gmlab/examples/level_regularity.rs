//! Local time varies continuously in the level, uniformly in time: the
//! 2n-th moment of `sup_t |L_t(x) − L_t(y)|`'s driving term decays
//! polynomially in the level gap `|x − y|`. A fitted log-log slope near `n`
//! is the moment signature behind joint bicontinuity of `(t, a) ↦ L_t(a)`.
//!
//! Run with: cargo run --release --example level_regularity

use gmlab::local_time::level_regularity_check;
use gmlab::model::{make_uniform_grid, ControlStrategy, VolatilityBand};
use gmlab::path::{PathSet, SimPlan};

fn main() -> gmlab::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let grid = make_uniform_grid(1.0, 8192)?;
    let plan = SimPlan::new(
        band,
        ControlStrategy::Constant { sigma: 1.0 },
        "const_1.0",
        grid,
        4000,
        42,
        true,
    )?;

    let anchor = 0.4;
    let gaps = [0.4, 0.2, 0.1, 0.05];
    let rep = level_regularity_check(&PathSet::Plan(plan), anchor, &gaps, 2)?;

    println!("level pairs (a − h, a) at a = {anchor}, moment order 2n = 4:\n");
    println!("{:>8} {:>16} {:>16} {:>18}", "gap h", "E[sup|D|⁴]", "se", "calibrated bound");
    for (i, &h) in rep.gaps.iter().enumerate() {
        println!(
            "{h:>8.3} {:>16.6} {:>16.6} {:>18.6}",
            rep.moments[i], rep.moment_ses[i], rep.calibrated_bounds[i]
        );
    }
    println!("\nfitted slope of log E[sup|D|⁴] against log h: {:.3}", rep.slope);
    println!("(n = 2 here; a slope comfortably above n − ½ = 1.5 certifies the");
    println!("polynomial decay; the crossing-sum roughness of the discrete");
    println!("estimator is what eats the ½)");
    println!(
        "raw moments below the bound calibrated at h₀ = {}: {}",
        gaps[0], rep.raw_inequality_ok
    );
    Ok(())
}
