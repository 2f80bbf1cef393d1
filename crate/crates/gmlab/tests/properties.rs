//! Property tests: structural invariants that must hold for every band,
//! seed, and grid, not just the tuned fixtures of the acceptance suite.
//! Simulation sizes are deliberately tiny — these probe edge geometry, not
//! Monte Carlo accuracy.

use proptest::prelude::*;

use gmlab::expectation::{upper_expectation_many, PathFunctional};
use gmlab::local_time::{
    occupation_running_at_level, tanaka_at_level, tanaka_running_at_level,
};
use gmlab::model::{
    default_strategy_family_with_pivot, make_uniform_grid, ControlStrategy, VolatilityBand,
};
use gmlab::path::simulate_paths;

fn band_strategy() -> impl Strategy<Value = VolatilityBand> {
    (0.05_f64..1.5, 0.0_f64..1.0)
        .prop_map(|(high, frac)| VolatilityBand::new(high * frac, high).unwrap())
}

proptest! {
    /// Every simulated step's volatility stays inside the band, so the
    /// integrated variance is bracketed by λT and ΛT.
    #[test]
    fn integrated_variance_is_bracketed_by_the_band(
        band in band_strategy(),
        seed in any::<u64>(),
        steps in 1usize..48,
        pivot in -0.5_f64..0.5,
    ) {
        let family = default_strategy_family_with_pivot(band, 3, pivot).unwrap();
        let grid = make_uniform_grid(1.0, steps).unwrap();
        for s in family.strategies() {
            let bundle =
                simulate_paths(band, &s.strategy, &s.label, &grid, 4, seed, true).unwrap();
            for view in bundle.views() {
                for &sig in view.sigma {
                    prop_assert!(band.sigma_low <= sig && sig <= band.sigma_high);
                }
                let qv = view.qv_terminal();
                let lo = band.lambda() - 1e-12;
                let hi = band.lambda_cap() + 1e-12;
                prop_assert!(lo <= qv && qv <= hi, "qv {qv} outside [{lo}, {hi}]");
            }
        }
    }

    /// The running occupation local time never decreases and never goes
    /// negative: it accumulates nonnegative variance mass.
    #[test]
    fn occupation_local_time_is_nonnegative_and_nondecreasing(
        seed in any::<u64>(),
        level in -1.0_f64..1.0,
        eps in 0.01_f64..0.5,
        symmetric in any::<bool>(),
        steps in 1usize..64,
    ) {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let grid = make_uniform_grid(1.0, steps).unwrap();
        let bundle = simulate_paths(
            band,
            &ControlStrategy::Constant { sigma: 0.8 },
            "const_0.8",
            &grid,
            4,
            seed,
            true,
        )
        .unwrap();
        for view in bundle.views() {
            let running = occupation_running_at_level(view, level, eps, symmetric);
            prop_assert!(running[0] == 0.0);
            for w in running.windows(2) {
                prop_assert!(w[1] >= w[0], "occupation decreased: {} -> {}", w[0], w[1]);
            }
        }
    }

    /// The level-crossing local time is nonnegative at every node up to
    /// floating-point cancellation in the closed-form evaluation.
    #[test]
    fn crossing_local_time_is_nonnegative_at_every_node(
        seed in any::<u64>(),
        level in -1.5_f64..1.5,
        steps in 1usize..64,
    ) {
        let band = VolatilityBand::new(0.25, 1.0).unwrap();
        let grid = make_uniform_grid(1.0, steps).unwrap();
        let bundle = simulate_paths(
            band,
            &ControlStrategy::Constant { sigma: 1.0 },
            "const_1.0",
            &grid,
            4,
            seed,
            true,
        )
        .unwrap();
        for view in bundle.views() {
            let running = tanaka_running_at_level(view, level);
            prop_assert!((running[steps] - tanaka_at_level(view, level)).abs() < 1e-12);
            for (j, &v) in running.iter().enumerate() {
                prop_assert!(v >= -1e-12, "node {j}: local time {v} < 0");
            }
        }
    }

    /// Reusing a seed with more paths extends the sample without changing
    /// the existing paths (simulation is keyed per path, not per run).
    #[test]
    fn path_count_is_a_prefix_property(
        seed in any::<u64>(),
        n in 1usize..12,
        extra in 1usize..12,
        steps in 1usize..32,
    ) {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let grid = make_uniform_grid(1.0, steps).unwrap();
        let strategy = ControlStrategy::Constant { sigma: 0.75 };
        let small = simulate_paths(band, &strategy, "c", &grid, n, seed, true).unwrap();
        let large =
            simulate_paths(band, &strategy, "c", &grid, n + extra, seed, true).unwrap();
        for (a, b) in small.views().zip(large.views()) {
            prop_assert_eq!(a.m, b.m);
            prop_assert_eq!(a.qv, b.qv);
        }
    }

    /// Family estimates are coherent across payoffs evaluated on shared
    /// simulations: upper ≥ lower always, and the worst case of a sum never
    /// beats the sum of worst cases (sublinearity on identical samples).
    #[test]
    fn shared_sample_estimates_are_sublinear(
        seed in any::<u64>(),
        strike in -0.5_f64..0.5,
    ) {
        let band = VolatilityBand::new(0.5, 1.0).unwrap();
        let family = default_strategy_family_with_pivot(band, 3, 0.0).unwrap();
        let grid = make_uniform_grid(1.0, 16).unwrap();
        let x = PathFunctional::Call { strike };
        let y = PathFunctional::Abs;
        let payoffs = [
            x.clone(),
            y.clone(),
            x.plus(y),
        ];
        let reports =
            upper_expectation_many(&payoffs, &family, &grid, 32, seed).unwrap();
        for r in &reports {
            prop_assert!(r.lower <= r.upper, "{}: {} > {}", r.payoff, r.lower, r.upper);
        }
        let slack = 1e-9 * (1.0 + reports[2].upper.abs());
        prop_assert!(
            reports[2].upper <= reports[0].upper + reports[1].upper + slack,
            "sum worst case {} exceeds {} + {}",
            reports[2].upper,
            reports[0].upper,
            reports[1].upper
        );
    }
}
