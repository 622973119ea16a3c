//! `fibercirc`: identity suites, periods, holonomy, words, momentum and
//! zero-locus probes from the command line.
//!
//! Exit codes: 0 pass, 1 a check failed, 2 usage or data error.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fibercirc::{Family, GroupSpec};

use commands::{HolonomyArgs, Outcome, VerifyArgs};
use config::Config;

#[derive(Debug)]
pub struct CliError(pub String);

impl From<fibercirc::Error> for CliError {
    fn from(e: fibercirc::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "fibercirc", version, about = "Circle-bundle holonomy and momentum checks on fibers of maps into compact Lie groups")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for quadrature.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write the flat report rows here as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Tolerance of the subcommand's pass criterion.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the identity suite.
    Verify {
        #[arg(long)]
        word: Option<String>,
        /// Cocycle convention instead of the calibrated one (debugging).
        #[arg(long)]
        cocycle: Option<String>,
        /// Run only these checks.
        #[arg(long = "check")]
        checks: Vec<String>,
    },
    /// Holonomy of homotopy files or built-in scenarios; with two inputs
    /// also the integer snap of their difference.
    Holonomy {
        files: Vec<PathBuf>,
        /// Built-in homotopy: constant, genus1-a, genus1-b, genus1-b-bubble.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Cells per axis of built-in scenarios.
        #[arg(long)]
        n: Option<usize>,
        /// Reverse the homotopy parameter.
        #[arg(long)]
        reverse: bool,
        /// Write built-in scenarios as homotopy files into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Extrapolated period of the Cartan 3-form over the fundamental cube.
    Periods {
        #[arg(long, value_parser = parse_family)]
        family: Option<Family>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        metric_scale: Option<f64>,
        /// Three increasing cube resolutions.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        resolutions: Option<Vec<usize>>,
    },
    /// Parse, evaluate and optionally check a word.
    Word {
        src: String,
        /// JSON file {"group": ..., "point": [matrices]}.
        #[arg(long)]
        point: Option<PathBuf>,
        /// Also run the zeta-primitive check on the word.
        #[arg(long)]
        check: bool,
    },
    /// Momentum at a fiber point and the refinement ladder of its defect.
    Moment {
        /// JSON file {"group": ..., "point": [matrices]}.
        #[arg(long)]
        point: Option<PathBuf>,
    },
    /// Zero-locus probes of seeded or given relator tuples.
    Probe {
        /// JSON file {"group": ..., "tuples": [[matrices], ...]}.
        #[arg(long)]
        tuples: Option<PathBuf>,
        /// Fail unless every tuple is flat.
        #[arg(long)]
        expect_flat: bool,
    },
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s.to_ascii_uppercase().as_str() {
        "SU" => Ok(Family::SU),
        "SO" => Ok(Family::SO),
        "U1" => Ok(Family::U1),
        _ => Err(format!("unknown family `{s}` (SU, SO, U1)")),
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let config = Config::load(cli.config.as_deref())?;
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError(e.to_string()))?;
    }
    let seed = cli.seed.or(config.seed).unwrap_or(config.verify.seed);
    let tol = cli.tol.or(config.tol);
    match cli.command {
        Command::Verify { word, cocycle, checks } => commands::verify(&config, seed, tol, VerifyArgs { word, cocycle, checks }),
        Command::Holonomy { files, scenarios, n, reverse, export } => {
            commands::holonomy_cmd(&config, seed, tol, HolonomyArgs { files, scenarios, n, reverse, export })
        }
        Command::Periods { family, n, metric_scale, resolutions } => {
            let base = &config.periods.group;
            let family = family.unwrap_or(base.family);
            let spec = GroupSpec {
                family,
                n: n.unwrap_or(if family == base.family { base.n } else if family == Family::U1 { 1 } else { 2 }),
                metric_scale: metric_scale.unwrap_or(base.metric_scale),
            };
            let resolutions = match resolutions {
                Some(r) => {
                    let r: [usize; 3] = r.try_into().map_err(|_| CliError("--resolutions takes three values".into()))?;
                    if !(r[0] > 0 && r[0] < r[1] && r[1] < r[2]) {
                        return Err(CliError(format!("resolutions must increase, got {r:?}")));
                    }
                    r
                }
                None => config.periods.resolutions,
            };
            commands::periods(&config, tol, spec, resolutions)
        }
        Command::Word { src, point, check } => commands::word(&config, seed, tol, &src, point.as_deref(), check),
        Command::Moment { point } => commands::moment(&config, seed, tol, point.as_deref()),
        Command::Probe { tuples, expect_flat } => commands::probe(&config, seed, tol, tuples.as_deref(), expect_flat),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_out = cli.json.clone();
    let csv_out = cli.csv.clone();
    let outcome = run(cli).and_then(|o| {
        let json = serde_json::to_string_pretty(&o.report)?;
        let csv = csv_out.as_ref().map(|_| output::to_csv(&o.rows)).transpose()?;
        Ok((o.pass, json, csv))
    });
    let written = outcome.and_then(|(pass, json, csv)| {
        if let Some(path) = &json_out {
            output::write(path, &json)?;
        }
        if let (Some(path), Some(csv)) = (&csv_out, csv) {
            output::write(path, &csv)?;
        }
        Ok((pass, json))
    });
    match written {
        Ok((pass, json)) => {
            let _ = writeln!(std::io::stdout(), "{json}");
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
