use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, EvaluateArgs, FitArgs, ReportArgs, SimulateArgs, TuneArgs};
use crate::config::Overrides;
use crate::error::{CliError, CliResult};
use crate::report::MethodName;

#[derive(Debug, Parser)]
#[command(name = "tvnet", version, about = "Estimate sparse time-varying partial-correlation networks")]
pub struct Cli {
    /// Worker threads for grid search (default: all cores).
    #[arg(long, global = true, env = "TVNET_THREADS")]
    pub threads: Option<usize>,
    /// JSON file overriding solver defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic panel with known truth.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        scenario: u8,
        /// Subjects per time point.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit at fixed penalties.
    Fit {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long, value_enum)]
        method: MethodName,
        #[arg(long, default_value_t = 0.0)]
        lambda1: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda2: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choose penalties by BIC over a grid.
    Tune {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long, value_enum)]
        method: MethodName,
        /// Comma-separated lambda1 values (default: data-driven log grid).
        #[arg(long, value_parser = commands::parse_grid)]
        grid1: Option<commands::Grid>,
        /// Comma-separated lambda2 values (default: data-driven log grid).
        #[arg(long, value_parser = commands::parse_grid)]
        grid2: Option<commands::Grid>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a fit report against a simulation truth.
    Evaluate {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a fit report into count and heat tables.
    Report {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Cli {
    /// Runs the command on a pool of the requested size.
    pub fn run(self) -> CliResult<()> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads.filter(|&t| t > 0) {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| CliError::input(format!("thread pool: {e}")))?;
        pool.install(|| self.dispatch())
    }

    fn dispatch(self) -> CliResult<()> {
        let overrides = Overrides::load(self.config.as_deref())?;
        match self.command {
            Command::Simulate { scenario, n, out } => {
                commands::simulate(&SimulateArgs { scenario, n, seed: self.seed, out })?;
            }
            Command::Fit { panel, method, lambda1, lambda2, out } => {
                commands::fit_cmd(&FitArgs { panel, method, lambda1, lambda2, out }, &overrides)?;
            }
            Command::Tune { panel, method, grid1, grid2, out } => {
                commands::tune_cmd(&TuneArgs { panel, method, grid1, grid2, out }, &overrides)?;
            }
            Command::Evaluate { fit, truth, out } => {
                commands::evaluate_cmd(&EvaluateArgs { fit, truth, out })?;
            }
            Command::Report { fit, out } => {
                commands::report_cmd(&ReportArgs { fit, out })?;
            }
        }
        Ok(())
    }
}
