//! `gcar`: simulate, fit, diagnose, report and score correlated
//! multiple-testing runs under the generalized CAR spike-and-slab model.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gcar",
    version,
    about = "Bayesian multiple testing with generalized CAR spike-and-slab priors",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulation study: statistics, truth, edge lists and manifest.
    Simulate(SimulateArgs),
    /// Fit the model and write the store, report and diagnostics.
    Fit(FitArgs),
    /// Recompute diagnostics from a saved store.
    Diagnose(DiagnoseArgs),
    /// Rewrite the per-case report from a saved store.
    Report(ReportArgs),
    /// Score a report against known truth: FNP/FDP/MCP and ROC/AUC.
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Ising,
    Microarray,
    Pathway,
    Cascade,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation study to generate.
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Seed of the generator.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Cascade: center remaining set members on 0.92·mean of the children
    /// instead of 0.92·sum.
    #[arg(long)]
    pub remainder_mean: bool,
    /// Pathway: draw statistics directly instead of via expression data and
    /// pooled t statistics.
    #[arg(long)]
    pub direct_draws: bool,
    /// Read defaults from a `key = value` file; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Gcar,
    Sb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PUpdateArg {
    Conjugate,
    Langevin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StorageArg {
    Auto,
    Full,
    Sketch,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Statistics file (`id,y` CSV with header).
    #[arg(long)]
    pub stats: PathBuf,
    /// Edge-list file(s): `id_i<TAB>id_j[<TAB>weight]`; repeat to merge.
    #[arg(long)]
    pub edges: Vec<PathBuf>,
    /// Model variant: spatial gCAR or the independence (SB) baseline.
    #[arg(long, value_enum, default_value = "gcar")]
    pub variant: VariantArg,
    /// Shape α ≥ 1 of the Beta(α, 1) prior on the null proportion.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Neighborhood augmentation constant d ≥ 0.
    #[arg(long, default_value_t = 0.0)]
    pub d: f64,
    /// Drop cases without neighbors before fitting (for d = 0).
    #[arg(long)]
    pub drop_isolated: bool,
    /// Update for the null proportion p.
    #[arg(long, value_enum, default_value = "conjugate")]
    pub p_update: PUpdateArg,
    /// Number of chains.
    #[arg(long, default_value_t = 3)]
    pub chains: usize,
    /// Burn-in iterations per chain.
    #[arg(long, default_value_t = 5000)]
    pub burn_in: usize,
    /// Post-burn-in iterations per chain.
    #[arg(long, default_value_t = 10000)]
    pub iter: usize,
    /// Keep every `thin`-th post-burn-in draw.
    #[arg(long, default_value_t = 5)]
    pub thin: usize,
    /// Master seed; chain k uses stream k.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Initial slice bracket width for ρ.
    #[arg(long, default_value_t = 0.1)]
    pub slice_width: f64,
    /// Maximum slice doublings.
    #[arg(long, default_value_t = 16)]
    pub slice_max_doublings: u32,
    /// Langevin step size on the logit scale.
    #[arg(long, default_value_t = 0.05)]
    pub langevin_step: f64,
    /// Probability of a plain Metropolis step in place of Langevin.
    #[arg(long, default_value_t = 0.1)]
    pub metropolis_mix: f64,
    /// μ storage: full draws, streaming sketches, or auto (full up to 5,000 cases).
    #[arg(long, value_enum, default_value = "auto")]
    pub storage: StorageArg,
    /// Selection threshold on inclusion probabilities (p ≥ threshold).
    #[arg(long, default_value_t = 0.95)]
    pub threshold: f64,
    /// Credible level of the signal intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Posterior-predictive Moran's I replicates.
    #[arg(long, default_value_t = 2000)]
    pub moran_reps: usize,
    /// Also write long-format draws, one file per chain.
    #[arg(long)]
    pub emit_raw_draws: bool,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Read defaults from a `key = value` file; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Store written by `fit`.
    #[arg(long)]
    pub store: PathBuf,
    /// Statistics of the fitted cases [default: fitted.csv next to the store].
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Edge-list file(s) for Moran's I; repeat to merge.
    #[arg(long)]
    pub edges: Vec<PathBuf>,
    /// Posterior-predictive Moran's I replicates.
    #[arg(long, default_value_t = 2000)]
    pub moran_reps: usize,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Read defaults from a `key = value` file; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Store written by `fit`.
    #[arg(long)]
    pub store: PathBuf,
    /// Statistics of the fitted cases [default: fitted.csv next to the store].
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Selection threshold on inclusion probabilities (p ≥ threshold).
    #[arg(long, default_value_t = 0.95)]
    pub threshold: f64,
    /// Credible level of the signal intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Read defaults from a `key = value` file; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Report written by `fit` or `report`.
    #[arg(long)]
    pub report: PathBuf,
    /// Truth file (`id,truth`); must cover every report id.
    #[arg(long)]
    pub truth: PathBuf,
    /// Score at this threshold instead of the report's.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Read defaults from a `key = value` file; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::merge_config_args(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: config: {e}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.error);
            if let Some(h) = &e.hint {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.code)
        }
    }
}
