//! Command-line front end. Errors go to stderr as
//! `ERROR:<category>:<message>`; exit code 0 is success, 1 a validation
//! error and 2 a runtime fault.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::environments::EnvironmentSpec;
use crate::error::{LabError, Result};
use crate::harness::{run_experiment, ExperimentConfig};
use crate::metrics::{adversarial_bound, lower_bound, stochastic_bound};
use crate::verification::{run_suite, SuiteSizes, VerifySuite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "soda-lab",
    version,
    about = "Limited-advice bandit simulation lab"
)]
struct Cli {
    /// Overrides the master seed of the config (or of the command).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config and write trace.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a closed-form regret bound.
    Bound {
        /// 1 = adversarial upper bound, 2 = lower bound, 3 = stochastic bound.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        theorem: u8,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Comma-separated gaps of all K arms (theorem 3).
        #[arg(long, value_delimiter = ',')]
        gaps: Vec<f64>,
    },
    /// Run the numerical lemma and estimator checks.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: VerifySuite,
    },
    /// Export a generated loss matrix as CSV.
    Gen {
        /// Environment spec as inline JSON or a path to a JSON file.
        #[arg(long)]
        env: String,
        #[arg(long)]
        out: PathBuf,
        /// Number of rounds.
        #[arg(long)]
        t: usize,
        #[arg(long)]
        no_header: bool,
    },
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "ERROR:usage:{first}");
            return EXIT_VALIDATION;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "ERROR:{}:{e}", e.category());
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Run { config, out: dir } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let exp = run_experiment(&cfg)?;
            exp.write_outputs(&dir)?;
            let regret = exp.summary.final_expected_regret();
            writeln!(
                out,
                "{} replications of {} for {} rounds: mean regret {} (se {})",
                cfg.replications, cfg.algorithm, cfg.horizon, regret.mean, regret.standard_error
            )?;
            writeln!(
                out,
                "wrote {} and {}",
                dir.join("trace.csv").display(),
                dir.join("summary.json").display()
            )?;
            Ok(EXIT_OK)
        }
        Command::Bound {
            theorem,
            k,
            t,
            eps,
            gaps,
        } => {
            let need_t =
                || t.ok_or_else(|| LabError::Config("--t is required for this theorem".into()));
            match theorem {
                1 => writeln!(out, "{}", adversarial_bound(need_t()?, k, eps)?)?,
                2 => {
                    let horizon = need_t()?;
                    if k < 2 || !(0.0..=1.0).contains(&eps) {
                        return Err(LabError::Config("need K >= 2 and eps in [0, 1]".into()));
                    }
                    match lower_bound(horizon, k, eps) {
                        Some(v) => writeln!(out, "{v}")?,
                        None => writeln!(out, "not applicable (T < 3K/32)")?,
                    }
                }
                _ => {
                    if gaps.len() != k {
                        return Err(LabError::Config(format!(
                            "--gaps needs {k} comma-separated values, got {}",
                            gaps.len()
                        )));
                    }
                    writeln!(out, "{}", stochastic_bound(k, eps, &gaps)?)?
                }
            }
            Ok(EXIT_OK)
        }
        Command::Verify { suite } => {
            let lines = run_suite(suite, SuiteSizes::default(), cli.seed.unwrap_or(0))?;
            writeln!(
                out,
                "{:<36} {:>8} {:>6} {:>14}",
                "check", "cases", "result", "worst slack"
            )?;
            for l in &lines {
                writeln!(
                    out,
                    "{:<36} {:>8} {:>6} {:>14.6e}",
                    l.name,
                    l.cases,
                    if l.passed { "PASS" } else { "FAIL" },
                    l.worst_slack
                )?;
            }
            if let Some(bad) = lines.iter().find(|l| !l.passed) {
                return Err(LabError::Verification(format!("{} violated", bad.name)));
            }
            Ok(EXIT_OK)
        }
        Command::Gen {
            env,
            out: path,
            t,
            no_header,
        } => {
            let spec = parse_env_arg(&env)?;
            spec.validate()?;
            let m = spec.generate(t, cli.seed.unwrap_or(0))?;
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            m.write_csv(std::fs::File::create(&path)?, !no_header)?;
            writeln!(
                out,
                "wrote {} rounds x {} arms (measured range {}) to {}",
                m.horizon(),
                m.arms(),
                m.measured_range(),
                path.display()
            )?;
            Ok(EXIT_OK)
        }
    }
}

fn parse_env_arg(arg: &str) -> Result<EnvironmentSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg))?
    };
    serde_json::from_str(&text).map_err(|e| LabError::Spec(e.to_string()))
}
