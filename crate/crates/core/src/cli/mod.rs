//! Command-line runner: `run <config>...`, `list-scenarios` and `sweep`.
//!
//! Exit status is 0 when every verdict passes (inconclusive checks only
//! warn), 1 on a failed verdict or a numerical error, and 2 when the
//! configuration does not validate. `NONLOCAL_THREADS` caps the worker pool.

pub mod config;
pub mod report;
pub mod sweep;
pub mod tasks;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::scenarios::{catalog, find, Scenario};
use config::{load_config, Resolved};
use report::{RunReport, Table, Verdict};
use sweep::{sweep_scenario, SweepAxis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "NONLOCAL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nonlocal-shape", version, about = "Spectra and shape derivatives of nonlocal eigenvalue problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more TOML configurations (concurrently).
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Override a config key, e.g. `--set resolution=200`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in scenarios.
    ListScenarios,
    /// Convergence tables across resolutions or kernel widths.
    Sweep {
        /// Scenarios to sweep; all built-ins when omitted.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Comma-separated resolutions; the scenario's own ladder by default.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<usize>,
        /// Comma-separated kernel widths at the reference resolution.
        #[arg(long, value_delimiter = ',', conflicts_with = "resolutions")]
        deltas: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Configures the global pool from `NONLOCAL_THREADS`, if set.
pub fn init_threads() -> Result<(), String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer (got `{v}`)"))?;
            // A second initialization (e.g. in tests) keeps the first pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

pub fn list_scenarios() -> String {
    let mut s = String::new();
    for sc in catalog() {
        let fields: Vec<&str> = sc.fields.iter().map(|f| f.name.as_str()).collect();
        s.push_str(&format!(
            "{:<20} {}\n{:<20} kernel {} δ = {}, rule {}, resolution {} (refined {}), fields: {}\n",
            sc.name,
            sc.description,
            "",
            sc.family,
            sc.delta,
            sc.rule.name(),
            sc.resolution,
            sc.refined,
            fields.join(", ")
        ));
    }
    s
}

/// Runs a resolved configuration; `Err` carries the failing stage.
pub fn execute(r: &Resolved) -> Result<RunReport, tasks::StageError> {
    let start = Instant::now();
    let (tables, notes) = tasks::run_task(r)?;
    Ok(RunReport {
        label: r.label.clone(),
        task: r.config.task.name().to_string(),
        config_echo: toml::to_string(&r.config).unwrap_or_default(),
        tables,
        notes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_configs(configs: &[PathBuf], overrides: &[String], out: Option<PathBuf>) -> i32 {
    let mut resolved = Vec::new();
    for path in configs {
        match load_config(path, overrides).and_then(|c| c.resolve()) {
            Ok(r) => resolved.push(r),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_INVALID;
            }
        }
    }
    let results: Vec<_> = resolved.par_iter().map(execute).collect();
    let mut code = EXIT_OK;
    for (r, res) in resolved.iter().zip(results) {
        match res {
            Ok(report) => {
                let dir = out.clone().or_else(|| r.config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
                if let Err(e) = report.write(&dir) {
                    eprintln!("error: {e}");
                    code = EXIT_FAILURE;
                }
                print!("{}", report.text());
                if report.verdicts().contains(&Verdict::Inconclusive) {
                    eprintln!("warning: {}: inconclusive checks", report.label);
                }
                if !report.passed() {
                    code = EXIT_FAILURE;
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", r.label);
                code = EXIT_FAILURE;
            }
        }
    }
    code
}

fn run_sweep(names: &[String], resolutions: Vec<usize>, deltas: Vec<f64>, out: PathBuf) -> i32 {
    let scenarios: Vec<Scenario> = if names.is_empty() {
        catalog()
    } else {
        match names.iter().map(|n| find(n)).collect::<crate::Result<Vec<_>>>() {
            Ok(v) => v,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INVALID;
            }
        }
    };
    if resolutions.iter().any(|r| *r < 2) || deltas.iter().any(|d| !(*d > 0.0)) {
        eprintln!("error: resolutions must be at least 2 and widths positive");
        return EXIT_INVALID;
    }
    let start = Instant::now();
    let results: Vec<_> = scenarios
        .par_iter()
        .map(|sc| {
            let axis = if !deltas.is_empty() {
                SweepAxis::Delta(deltas.clone())
            } else if !resolutions.is_empty() {
                SweepAxis::Resolution(resolutions.clone())
            } else {
                SweepAxis::Resolution(sc.sweep.to_vec())
            };
            sweep_scenario(sc, &axis)
        })
        .collect();
    let mut table: Option<Table> = None;
    let mut code = EXIT_OK;
    for (sc, res) in scenarios.iter().zip(results) {
        match res {
            Ok(r) => match &mut table {
                Some(t) => t.rows.extend(r.table.rows),
                None => table = Some(r.table),
            },
            Err(e) => {
                eprintln!("error: {}: {e}", sc.name);
                code = EXIT_FAILURE;
            }
        }
    }
    if let Some(t) = table {
        let report = RunReport {
            label: "sweep".into(),
            task: if deltas.is_empty() { "resolution sweep" } else { "delta sweep" }.into(),
            config_echo: String::new(),
            tables: vec![t],
            notes: Vec::new(),
            seconds: start.elapsed().as_secs_f64(),
        };
        if let Err(e) = report.write(&out) {
            eprintln!("error: {e}");
            code = EXIT_FAILURE;
        }
        print!("{}", report.text());
        if !report.passed() {
            code = EXIT_FAILURE;
        }
    }
    code
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    match cli.command {
        Command::Run { configs, overrides, out } => run_configs(&configs, &overrides, out),
        Command::ListScenarios => {
            print!("{}", list_scenarios());
            EXIT_OK
        }
        Command::Sweep {
            scenarios,
            resolutions,
            deltas,
            out,
        } => run_sweep(&scenarios, resolutions, deltas, out),
    }
}
