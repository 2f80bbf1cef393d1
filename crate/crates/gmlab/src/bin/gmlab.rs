//! Command-line front end: simulate path bundles, estimate expectation
//! bounds, export local-time fields, and run the verification suite.
//!
//! Exit codes: 0 success, 1 a verification check ran and failed, 2 usage or
//! configuration problem, 3 any other runtime error. All outputs are
//! deterministic in the effective config (timing goes to stderr only).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gmlab::config::RunConfig;
use gmlab::error::{Error, Result};
use gmlab::expectation::{upper_expectation, PathFunctional, PAYOFF_NAMES};
use gmlab::local_time::{field_summary, FieldRequest, LevelGrid};
use gmlab::model::{make_uniform_grid, ControlStrategy};
use gmlab::path::{PathSet, SimPlan};
use gmlab::report::{
    digest_field_summary, write_bundle_csv, write_field_summary_csv, write_json, Envelope,
};
use gmlab::stats::mean_se;
use gmlab::verify::run_suite;

#[derive(Parser)]
#[command(
    name = "gmlab",
    version,
    about = "Monte Carlo laboratory for martingales with uncertain volatility"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags that override individual fields of the (optional) TOML config.
#[derive(Args, Debug)]
struct Overrides {
    /// TOML run configuration; omitted fields use built-in defaults
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo paths
    #[arg(long)]
    paths: Option<usize>,
    /// Time steps on [0, T]
    #[arg(long)]
    steps: Option<usize>,
    /// Horizon T
    #[arg(long, value_name = "T")]
    horizon: Option<f64>,
    /// Lower volatility edge
    #[arg(long)]
    sigma_low: Option<f64>,
    /// Upper volatility edge
    #[arg(long)]
    sigma_high: Option<f64>,
    /// Output directory (else $GMLAB_OUT, else ./gmlab-out)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); results do not depend on this
    #[arg(long)]
    workers: Option<usize>,
    /// true: reject strategies that leave the band; false: clamp them
    #[arg(long, value_name = "BOOL")]
    strict_band: Option<bool>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the strategy family's paths and summarize each bundle
    Simulate {
        #[command(flatten)]
        opts: Overrides,
        /// Also write one CSV of full paths per strategy
        #[arg(long)]
        dump_paths: bool,
    },
    /// Upper and lower expectation bounds for a terminal payoff
    Expectation {
        /// One of: linear | square | neg_square | abs | sin | call:K | indicator:LO:HI
        payoff: String,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Local-time field over levels × times under the upper-edge strategy
    Localtime {
        #[command(flatten)]
        opts: Overrides,
        /// Occupation window width (default: smallest ladder entry × band scale)
        #[arg(long)]
        epsilon: Option<f64>,
        /// Center the occupation window on the level instead of one-sided
        #[arg(long)]
        symmetric: bool,
    },
    /// Run named verification checks ("all" or any of the registry names)
    Verify {
        /// Check names; empty uses the config's own list
        checks: Vec<String>,
        #[command(flatten)]
        opts: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Simulate { opts, dump_paths } => {
            let cfg = load(&opts)?;
            cmd_simulate(&cfg, dump_paths)
        }
        Cmd::Expectation { payoff, opts } => {
            let cfg = load(&opts)?;
            cmd_expectation(&cfg, &payoff)
        }
        Cmd::Localtime {
            opts,
            epsilon,
            symmetric,
        } => {
            let cfg = load(&opts)?;
            cmd_localtime(&cfg, epsilon, symmetric)
        }
        Cmd::Verify { checks, opts } => {
            let mut cfg = load(&opts)?;
            if !checks.is_empty() {
                cfg.checks = checks;
            }
            cmd_verify(&cfg)
        }
    }
}

fn load(opts: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::from_toml_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = opts.paths {
        cfg.n_paths = v;
    }
    if let Some(v) = opts.steps {
        cfg.steps = v;
    }
    if let Some(v) = opts.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = opts.sigma_low {
        cfg.sigma_low = v;
    }
    if let Some(v) = opts.sigma_high {
        cfg.sigma_high = v;
    }
    if let Some(v) = &opts.out {
        cfg.out_dir = v.display().to_string();
    }
    if let Some(v) = opts.workers {
        cfg.workers = v;
    }
    if let Some(v) = opts.strict_band {
        cfg.strict_band = v;
    }
    cfg.validate()?;
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| Error::invalid(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct StrategySummary {
    label: String,
    terminal_mean: f64,
    terminal_se: f64,
    abs_terminal_mean: f64,
    qv_mean: f64,
    qv_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    paths_csv: Option<String>,
}

#[derive(Serialize)]
struct SimulateSummary {
    n_paths: usize,
    steps: usize,
    strategies: Vec<StrategySummary>,
}

fn cmd_simulate(cfg: &RunConfig, dump_paths: bool) -> Result<ExitCode> {
    let band = cfg.band()?;
    let family = cfg.family()?;
    let grid = make_uniform_grid(cfg.horizon, cfg.steps)?;
    let out_dir = cfg.resolve_out_dir();
    let mut strategies = Vec::with_capacity(family.len());
    for s in family.strategies() {
        let plan = SimPlan::new(
            band,
            s.strategy.clone(),
            s.label.clone(),
            grid.clone(),
            cfg.n_paths,
            cfg.seed,
            cfg.strict_band,
        )?;
        let mut paths_csv = None;
        let rows: Vec<(f64, f64)> = if dump_paths {
            let bundle = plan.materialize()?;
            let file = out_dir.join(format!("paths_{}.csv", file_safe(&s.label)));
            write_bundle_csv(&file, &bundle)?;
            paths_csv = Some(file.display().to_string());
            bundle
                .views()
                .map(|v| (v.terminal(), v.qv_terminal()))
                .collect()
        } else {
            PathSet::Plan(plan).map_paths(|_, v| (v.terminal(), v.qv_terminal()))?
        };
        let terminals: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let abs: Vec<f64> = rows.iter().map(|r| r.0.abs()).collect();
        let qv: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let (terminal_mean, terminal_se) = mean_se(&terminals);
        let (qv_mean, qv_se) = mean_se(&qv);
        println!(
            "{}: terminal mean {terminal_mean:.6} (se {terminal_se:.6}), qv mean {qv_mean:.6}",
            s.label
        );
        strategies.push(StrategySummary {
            label: s.label.clone(),
            terminal_mean,
            terminal_se,
            abs_terminal_mean: mean_se(&abs).0,
            qv_mean,
            qv_se,
            paths_csv,
        });
    }
    let file = out_dir.join("simulate.json");
    write_json(
        &file,
        &Envelope::new(
            cfg,
            SimulateSummary {
                n_paths: cfg.n_paths,
                steps: cfg.steps,
                strategies,
            },
        ),
    )?;
    println!("wrote {}", file.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_expectation(cfg: &RunConfig, payoff: &str) -> Result<ExitCode> {
    let payoff = PathFunctional::parse(payoff).map_err(|e| {
        Error::usage(format!("{e}; valid payoffs: {PAYOFF_NAMES}"))
    })?;
    let family = cfg.family()?;
    let grid = make_uniform_grid(cfg.horizon, cfg.steps)?;
    let report = upper_expectation(&payoff, &family, &grid, cfg.n_paths, cfg.seed)?;
    println!(
        "{}: upper {:.6} (se {:.6}, argmax {}), lower {:.6} (se {:.6}, argmin {})",
        report.payoff,
        report.upper,
        report.upper_se(),
        report.argmax_label,
        report.lower,
        report.lower_se(),
        report.argmin_label
    );
    let file = cfg
        .resolve_out_dir()
        .join(format!("expectation_{}.json", file_safe(&report.payoff)));
    write_json(&file, &Envelope::new(cfg, &report))?;
    println!("wrote {}", file.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_localtime(cfg: &RunConfig, epsilon: Option<f64>, symmetric: bool) -> Result<ExitCode> {
    let band = cfg.band()?;
    let grid = make_uniform_grid(cfg.horizon, cfg.steps)?;
    let scale = band.sigma_high * cfg.horizon.sqrt();
    let eps = epsilon.unwrap_or_else(|| cfg.epsilon_ladder.last().copied().unwrap_or(0.05) * scale);
    if !(eps > 0.0) {
        return Err(Error::usage(format!(
            "occupation window must be positive, got {eps}"
        )));
    }
    let levels = LevelGrid::symmetric(
        cfg.level_span_factor * scale,
        cfg.level_spacing_factor * scale,
    )?;
    // Eight evenly spaced time checkpoints (always including T).
    let stride = (cfg.steps / 8).max(1);
    let mut checkpoints: Vec<usize> = (1..=cfg.steps / stride).map(|k| k * stride).collect();
    if *checkpoints.last().unwrap() != cfg.steps {
        checkpoints.push(cfg.steps);
    }
    let label = format!("const_{:.6}", band.sigma_high);
    let plan = SimPlan::new(
        band,
        ControlStrategy::Constant {
            sigma: band.sigma_high,
        },
        label.clone(),
        grid.clone(),
        cfg.n_paths,
        cfg.seed,
        cfg.strict_band,
    )?;
    let req = FieldRequest {
        levels: levels.clone(),
        checkpoints: checkpoints.clone(),
        epsilon: eps,
        symmetric,
        with_tanaka: true,
    };
    let summary = field_summary(&PathSet::Plan(plan), &req)?;
    let out_dir = cfg.resolve_out_dir();
    let csv = out_dir.join("localtime_field.csv");
    let times: Vec<f64> = checkpoints.iter().map(|&c| grid.node(c)).collect();
    write_field_summary_csv(&csv, &summary, levels.levels(), &times)?;
    let digest = digest_field_summary(&summary, cfg.n_paths, levels.len(), Some(eps));
    println!(
        "strategy {label}: {} levels × {} times, estimator discrepancy sup {:.6}",
        levels.len(),
        times.len(),
        digest.discrepancy_sup.unwrap_or(f64::NAN)
    );
    let file = out_dir.join("localtime.json");
    write_json(&file, &Envelope::new(cfg, &digest))?;
    println!("wrote {} and {}", csv.display(), file.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cfg: &RunConfig) -> Result<ExitCode> {
    let started = Instant::now();
    let suite = run_suite(cfg)?;
    for check in &suite.checks {
        println!("{}", check.summary_line());
        if !check.passed {
            for m in check.metrics.iter().filter(|m| !m.pass) {
                println!("    {}: value {} vs bound {} ({:?})", m.name, m.value, m.bound, m.kind);
            }
        }
    }
    println!(
        "suite: {} ({} checks)",
        if suite.passed { "PASS" } else { "FAIL" },
        suite.checks.len()
    );
    eprintln!("elapsed {:.1}s", started.elapsed().as_secs_f64());
    let file = cfg.resolve_out_dir().join("verify.json");
    write_json(&file, &Envelope::new(cfg, &suite))?;
    println!("wrote {}", file.display());
    Ok(if suite.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-' {
            c
        } else {
            '_'
        })
        .collect()
}
