use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vrgq_core::harness::{self, ExperimentConfig};
use vrgq_core::{Error, Result};

/// Greedy-GQ and VR-Greedy-GQ experiments.
#[derive(Debug, Parser)]
#[command(name = "vrgq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured algorithm for every seed and write CSV output.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to run.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the experiment over values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the learning-rate feasibility conditions.
    ValidateRates {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate the geometric mixing constants of the behavior chain.
    Mixing {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply_env_overrides()?;
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<PathBuf> {
    out.or_else(|| cfg.run.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set run.output_dir".into()))
}

fn execute(cli: Cli, w: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = output_dir(&cfg, out)?;
            let result = harness::run_experiment(&cfg, Some(&dir))?;
            for s in &result.summary {
                writeln!(
                    w,
                    "{:<14} seed {:>5}  updates {:>7}  min |grad J|^2 {:.6e}  mspbe {:.6e}",
                    s.algo.name(),
                    s.seed,
                    s.updates,
                    s.final_min_grad_norm_sq,
                    s.final_mspbe
                )?;
            }
            writeln!(w, "wrote {}", dir.display())?;
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = load(&config)?;
            let dir = output_dir(&cfg, out)?;
            let rows = harness::sweep(&cfg, &param, &values, Some(&dir))?;
            for r in &rows {
                writeln!(
                    w,
                    "{}={} {:<14} seed {:>5}  asymptotic error {:.6e}",
                    r.param,
                    r.value,
                    r.algo.name(),
                    r.seed,
                    r.asymptotic_error
                )?;
            }
            writeln!(w, "wrote {}", dir.join("sweep.csv").display())?;
        }
        Command::ValidateRates { config } => {
            let cfg = load(&config)?;
            let v = harness::validate_rates(&cfg)?;
            write!(w, "{}", v.to_text())?;
            writeln!(w)?;
            write!(w, "{}", v.to_key_values())?;
        }
        Command::Mixing { config } => {
            let cfg = load(&config)?;
            let m = harness::mixing(&cfg)?;
            writeln!(w, "lambda_hat={:e}", m.lambda_hat)?;
            writeln!(w, "rho_hat={:e}", m.rho_hat)?;
            for (t, d) in m.distances.iter().enumerate() {
                writeln!(w, "D({})={:e}", t + 1, d)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = execute(cli, &mut out).and_then(|()| out.flush().map_err(Error::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else if e.is_assumption_violation() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
