//! Run the verification suite at a reduced size and print its table. Every
//! analytic property the library relies on has a named check; the CLI
//! (`gmlab verify`) runs the same registry at the configured full size.
//!
//! Run with: cargo run --release --example verify_suite

use gmlab::config::RunConfig;
use gmlab::verify::run_suite;

fn main() -> gmlab::Result<()> {
    let mut cfg = RunConfig::default();
    // Reduced sizes: every check runs, with Monte Carlo comparisons at a
    // few thousand paths instead of the full 20k.
    cfg.n_paths = 4000;
    cfg.steps = 1024;
    cfg.steps_ladder = vec![256, 1024, 4096];
    cfg.checks = vec![
        "h_assumption".into(),
        "norm_sandwich".into(),
        "integral_control".into(),
        "tail_truncation".into(),
        "ae_identity".into(),
        "krylov".into(),
        "growth_set".into(),
        "sublinearity".into(),
    ];

    let suite = run_suite(&cfg)?;
    for check in &suite.checks {
        println!("{}", check.summary_line());
        for m in &check.metrics {
            println!(
                "    {:<40} value {:>12.4e}  bound {:>12.4e}",
                m.name, m.value, m.bound
            );
        }
    }
    println!(
        "\nsuite: {} ({} checks at seed {})",
        if suite.passed { "PASS" } else { "FAIL" },
        suite.checks.len(),
        suite.seed
    );
    Ok(())
}
