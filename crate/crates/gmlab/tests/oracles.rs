//! Enumeration oracles: small binomial lattices on which *every* path is
//! enumerated and each identity is recomputed independently of the library
//! kernels, pinning estimator semantics exactly (often bitwise).

use gmlab::calculus::{integrate_state_terminal, StateIntegrand};
use gmlab::local_time::{local_time_tanaka, occupation_at_level, tanaka_at_level, LevelGrid};
use gmlab::model::{make_uniform_grid, VolatilityBand};
use gmlab::path::PathBundle;

const SIGMA: f64 = 0.8;
const STEPS: usize = 12;

/// All 2¹² sign sequences as ±σ√Δt increments over one unit of time.
fn lattice_bundle() -> PathBundle {
    let grid = make_uniform_grid(1.0, STEPS).unwrap();
    let step = SIGMA * (1.0 / STEPS as f64).sqrt();
    let n = 1usize << STEPS;
    let mut inc = Vec::with_capacity(n);
    let mut sig = Vec::with_capacity(n);
    for code in 0..n {
        inc.push(
            (0..STEPS)
                .map(|j| if code >> j & 1 == 1 { step } else { -step })
                .collect::<Vec<f64>>(),
        );
        sig.push(vec![SIGMA; STEPS]);
    }
    PathBundle::from_increments(
        grid,
        VolatilityBand::new(0.5, 1.0).unwrap(),
        0,
        "lattice",
        &inc,
        &sig,
    )
    .unwrap()
}

/// Independent reimplementation: sgn with the −1-at-zero convention.
fn brute_sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Independent reimplementation of the level-crossing local time.
fn brute_tanaka(m: &[f64], inc: &[f64], a: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..inc.len() {
        s += brute_sgn(m[j] - a) * inc[j];
    }
    (m[m.len() - 1] - a).abs() - a.abs() - s
}

#[test]
fn lattice_local_time_matches_independent_computation_bitwise() {
    let bundle = lattice_bundle();
    for a in [0.0, 0.15, -0.3] {
        for view in bundle.views() {
            let lib = tanaka_at_level(view, a);
            let brute = brute_tanaka(view.m, view.increments, a);
            assert_eq!(
                lib.to_bits(),
                brute.to_bits(),
                "path {} level {a}: {lib} vs {brute}",
                view.index
            );
        }
    }
}

#[test]
fn lattice_local_time_is_nonnegative_and_unbiased_at_zero() {
    let bundle = lattice_bundle();
    let n = bundle.n_paths as f64;
    let mut sum_lt = 0.0;
    let mut sum_abs = 0.0;
    for view in bundle.views() {
        let lt = tanaka_at_level(view, 0.0);
        assert!(lt >= -1e-12, "path {}: local time {lt} < 0", view.index);
        sum_lt += lt;
        sum_abs += view.terminal().abs();
    }
    // E[L̂(0)] = E|M_T|: the crossing sum has mean zero over the uniform
    // lattice (every prefix continues with ±step equally often).
    assert!(
        (sum_lt / n - sum_abs / n).abs() < 1e-12,
        "{} vs {}",
        sum_lt / n,
        sum_abs / n
    );
    // And the lattice mean of |M_T| is the exact binomial absolute moment.
    let step = SIGMA * (1.0 / STEPS as f64).sqrt();
    let mut exact = 0.0;
    for up in 0..=STEPS {
        let k = (2 * up) as i64 - STEPS as i64;
        let weight = binomial(STEPS, up) as f64 / n;
        exact += weight * (k as f64 * step).abs();
    }
    assert!((sum_abs / n - exact).abs() < 1e-12, "{} vs {exact}", sum_abs / n);
}

fn binomial(n: usize, k: usize) -> u64 {
    let mut out = 1u64;
    for i in 0..k {
        out = out * (n - i) as u64 / (i + 1) as u64;
    }
    out
}

#[test]
fn lattice_call_residual_vanishes_path_by_path() {
    let bundle = lattice_bundle();
    let strike = 0.2;
    let call = |x: f64| (x - strike).max(0.0);
    for view in bundle.views() {
        let mut df_integral = 0.0;
        for j in 0..view.n_steps() {
            if view.m[j] > strike {
                df_integral += view.increments[j];
            }
        }
        let residual = call(view.terminal())
            - call(0.0)
            - df_integral
            - 0.5 * tanaka_at_level(view, strike);
        assert!(
            residual.abs() <= 1e-13 * (1.0 + view.terminal().abs()),
            "path {}: residual {residual}",
            view.index
        );
    }
}

#[test]
fn lattice_field_kernel_matches_brute_force_at_every_node() {
    let bundle = lattice_bundle();
    let levels = LevelGrid::new(-0.6, 0.15, 9).unwrap();
    let field = local_time_tanaka(&bundle, &levels).unwrap();
    for (p, view) in bundle.views().enumerate() {
        for c in 0..=STEPS {
            for (k, &a) in levels.levels().iter().enumerate() {
                let brute = brute_tanaka(&view.m[..=c], &view.increments[..c], a);
                let fast = field.tanaka_at(p, c, k).unwrap();
                assert!(
                    (fast - brute).abs() <= 1e-12 * (1.0 + brute.abs()),
                    "path {p} node {c} level {a}: {fast} vs {brute}"
                );
            }
        }
    }
}

#[test]
fn lattice_occupation_matches_hand_count_bitwise() {
    let bundle = lattice_bundle();
    let eps = SIGMA * (1.0 / STEPS as f64).sqrt(); // one lattice spacing
    for a in [0.0, -0.25] {
        for view in bundle.views() {
            let mut mass = 0.0;
            for j in 0..view.n_steps() {
                if a <= view.m[j] && view.m[j] < a + eps {
                    mass += view.qv[j + 1] - view.qv[j];
                }
            }
            let brute = mass / eps;
            let lib = occupation_at_level(view, a, eps, false);
            assert_eq!(lib.to_bits(), brute.to_bits(), "path {}", view.index);
        }
    }
}

#[test]
fn lattice_per_step_crossing_increments_are_bounded_overshoots() {
    let bundle = lattice_bundle();
    let a = 0.05;
    for view in bundle.views() {
        for j in 0..view.n_steps() {
            let increment = (view.m[j + 1] - a).abs()
                - (view.m[j] - a).abs()
                - brute_sgn(view.m[j] - a) * view.increments[j];
            assert!(increment >= -1e-13, "negative crossing increment {increment}");
            assert!(
                increment <= 2.0 * view.increments[j].abs() + 1e-13,
                "crossing increment {increment} exceeds twice the step"
            );
        }
    }
}

/// Three unit steps: every quantity is integer-valued, so the isometry
/// `E[(∫sgn dM)²] = E[⟨M⟩_T]` holds bitwise under enumeration.
#[test]
fn three_step_isometry_is_exact_under_enumeration() {
    let grid = make_uniform_grid(3.0, 3).unwrap();
    let band = VolatilityBand::new(0.5, 1.0).unwrap();
    let inc: Vec<Vec<f64>> = (0..8u32)
        .map(|code| {
            (0..3)
                .map(|j| if code >> j & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();
    let sig = vec![vec![1.0; 3]; 8];
    let bundle =
        PathBundle::from_increments(grid, band, 0, "cube", &inc, &sig).unwrap();
    let f = StateIntegrand::sgn_shift(0.0);
    let mut sum_sq = 0.0;
    let mut sum_qv = 0.0;
    for view in bundle.views() {
        let integral = integrate_state_terminal(&f, view).unwrap();
        sum_sq += integral * integral;
        sum_qv += view.qv_terminal();
    }
    assert_eq!(sum_sq, 24.0, "Σ (∫sgn dM)² over the 8 paths");
    assert_eq!(sum_qv, 24.0, "Σ ⟨M⟩_3 over the 8 paths");
}
