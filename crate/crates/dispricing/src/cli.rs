//! Command-line interface: `solve`, `sweep`, `scenario`, `compare-eds`
//! and `verify`.
//!
//! Every command is deterministic: identical argv, config and seed
//! produce byte-identical files and terminal output. Exit codes: 0 on
//! success, 1 on usage or validation problems, 2 when the market itself
//! is infeasible under the given parameters.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config;
use crate::equilibrium::{self, ResponseMode};
use crate::error::{Error, Result};
use crate::model::{EnergyUser, MarketParams, SfaCostCoefficients};
use crate::oracle;
use crate::report::{self, Format, Report, SolveReport};
use crate::scenarios::{self, ScenarioConfig, SweepAxis};

#[derive(Debug, Parser)]
#[command(
    name = "dispricing",
    version,
    about = "Discriminate-pricing game solver: equilibria, sweeps, scheme comparisons",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured market's two-stage equilibrium.
    Solve {
        /// JSON market description.
        #[arg(long)]
        config: PathBuf,
        /// Tighten the multiplier until the price sum meets the budget.
        #[arg(long)]
        tune_lambda: bool,
        /// Report path; the extension picks the format (.csv or .json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stage-1 price across a range of one user attribute.
    Sweep {
        /// Attribute to vary: alpha or energy.
        #[arg(long)]
        axis: String,
        /// Swept values as lo:hi:step, both ends inclusive when step
        /// divides the span evenly.
        #[arg(long)]
        range: String,
        /// Optional market description; its first user is the sweep
        /// template. Without it the benchmark template is used
        /// (150 kWh, alpha 2, default parameters).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; the extension picks the format (.csv or .json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a shipped experiment: table1, fig5 or casemix.
    Scenario {
        /// Scenario name.
        #[arg(long)]
        name: String,
        /// Benchmark population for casemix (1..=6).
        #[arg(long)]
        case: Option<u8>,
        /// Report path; without it the scenario prints to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve, then price the same market by equal distribution and
    /// report both costs side by side.
    CompareEds {
        /// JSON market description.
        #[arg(long)]
        config: PathBuf,
        /// Report path; the extension picks the format (.csv or .json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the closed-form solver against brute-force scans on
    /// randomized markets and print the worst deviations as JSON.
    Verify {
        /// Number of randomized single-user markets.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Seed of the trial stream.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// Expands `lo:hi:step` into the inclusive value list.
fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("range '{spec}' must be lo:hi:step")));
    }
    let mut numbers = [0.0f64; 3];
    for (slot, part) in numbers.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::Config(format!("range '{spec}': '{part}' is not a number"))
        })?;
    }
    let [lo, hi, step] = numbers;
    if !lo.is_finite() || !hi.is_finite() || !(step > 0.0) || hi < lo {
        return Err(Error::Config(format!(
            "range '{spec}' must satisfy lo <= hi and step > 0"
        )));
    }
    let count = ((hi - lo) / step * (1.0 + 1e-12) + 1e-9).floor() as usize;
    if count >= 1_000_000 {
        return Err(Error::Config(format!(
            "range '{spec}' expands to {} points (limit 1,000,000)",
            count + 1
        )));
    }
    Ok((0..=count).map(|i| lo + i as f64 * step).collect())
}

/// Writes the report to `out` when given, else prints the terminal form.
fn deliver(report: &Report, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            let format = Format::from_path(&path)?;
            report::emit_report(report, format, &path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{}", report::render_text(report));
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Solve { config, tune_lambda, out } => {
            let doc = config::load_config(&config)?;
            let instance = doc.to_instance()?;
            let tune = tune_lambda || doc.tune_lambda;
            let (lambda, outcome) = if tune {
                let (lambda, outcome) =
                    equilibrium::tune_lambda(&instance, doc.budget_target())?;
                // The tuner works in the default response mode; quantities
                // under any other mode come from a re-solve at the tuned
                // multiplier (prices are mode-independent).
                if doc.response_mode == ResponseMode::Paper {
                    (lambda, outcome)
                } else {
                    let re_solved = equilibrium::solve_spe(
                        &instance.with_lambda(lambda),
                        doc.response_mode,
                    )?;
                    (lambda, re_solved)
                }
            } else {
                (
                    instance.params.lambda,
                    equilibrium::solve_spe(&instance, doc.response_mode)?,
                )
            };
            let report = Report::Solve(SolveReport {
                lambda,
                tuned: tune,
                user_ids: instance.users.iter().map(|u| u.id.clone()).collect(),
                outcome,
            });
            deliver(&report, out.or(doc.out))
        }
        Command::Sweep { axis, range, config, out } => {
            let axis: SweepAxis = axis.parse()?;
            let values = parse_range(&range)?;
            let (template, coeff, params, doc_out) = match config {
                Some(path) => {
                    let doc = config::load_config(&path)?;
                    let instance = doc.to_instance()?;
                    (
                        instance.users[0].clone(),
                        instance.coefficients[0],
                        instance.params,
                        doc.out,
                    )
                }
                None => (
                    EnergyUser::new("template", 150.0, 2.0),
                    SfaCostCoefficients::default(),
                    MarketParams::default(),
                    None,
                ),
            };
            let rows = scenarios::sweep_prices(axis, &values, &template, &coeff, &params)?;
            deliver(&Report::Sweep(rows), out.or(doc_out))
        }
        Command::Scenario { name, case, out } => {
            let config = match name.as_str() {
                "table1" => ScenarioConfig::table1(),
                "fig5" => ScenarioConfig::fig5(),
                "casemix" => {
                    let case = case.ok_or_else(|| {
                        Error::Config("casemix needs --case 1..=6".to_string())
                    })?;
                    ScenarioConfig::casemix(case)
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown scenario '{other}' (expected table1, fig5 or casemix)"
                    )))
                }
            };
            let output = scenarios::run_scenario(&config)?;
            deliver(&Report::from(output), out)
        }
        Command::CompareEds { config, out } => {
            let doc = config::load_config(&config)?;
            let instance = doc.to_instance()?;
            let label = config
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("config")
                .to_string();
            let comparison = scenarios::run_comparison(&instance, doc.response_mode, &label)?;
            deliver(&Report::Comparison(comparison), out.or(doc.out))
        }
        Command::Verify { trials, seed } => {
            let verdict = oracle::verify_trials(trials, seed)?;
            print!("{}", report::to_json(&verdict)?);
            Ok(())
        }
    }
}

/// Parses `argv` and runs the chosen command, returning the process exit
/// code: 0 on success, 1 on usage or validation errors, 2 on
/// infeasibility. Help and version requests print to stdout and exit 0.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
