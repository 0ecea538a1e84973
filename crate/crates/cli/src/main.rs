mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

/// Semisupervised Bayesian prediction: fit models with and without unlabeled
/// inputs, run replication scenarios and analyze model graphs.
#[derive(Parser, Debug)]
#[command(name = "semisup", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Experiment configuration (TOML, or a run manifest in JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// IDX image file (MNIST layout).
    #[arg(long, global = true)]
    pub idx_images: Option<PathBuf>,

    /// IDX label file (MNIST layout).
    #[arg(long, global = true)]
    pub idx_labels: Option<PathBuf>,

    /// Number of replicates; overrides the configuration.
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Simulate(SimulateArgs),
    /// Fit the Gaussian-mixture regression and write its predictive curve.
    FitMixture(FitMixtureArgs),
    /// Fit empirical factors plus probit and write predictions.
    FitFactor(FitFactorArgs),
    /// Fit a kernel model and write predictions, a probability grid and the
    /// decision contour.
    FitKernel(FitKernelArgs),
    /// Posterior predictive for a 2x2 binary cell with unlabeled counts.
    BinaryCell(BinaryCellArgs),
    /// Decide whether unlabeled data can matter for a model graph.
    AnalyzeRelevance(RelevanceArgs),
    /// Labeled-fraction sweep comparing labeled-only and semisupervised fits.
    Sweep(SweepArgs),
    /// Run a named replication scenario.
    Scenario(ScenarioArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SimKind {
    Mixture,
    TwoCluster,
    Factor,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "two-cluster")]
    pub kind: SimKind,
    /// Number of rows.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Noise level for two-cluster data.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}

#[derive(Args, Debug)]
pub struct FitMixtureArgs {
    /// CSV with a `y` column (blank for unlabeled rows) and input columns.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub grid_lo: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub grid_hi: f64,
    #[arg(long, default_value_t = 81)]
    pub grid_points: usize,
}

#[derive(Args, Debug)]
pub struct FitFactorArgs {
    /// CSV with a `label` column (0/1, blank for unlabeled) and features.
    #[arg(long)]
    pub data: PathBuf,
    /// Rows to predict; the unlabeled rows of `--data` when absent.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Ignore unlabeled rows when computing factors.
    #[arg(long)]
    pub labeled_only: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KernelModeArg {
    BayesProbit,
    Laprls,
}

#[derive(Args, Debug)]
pub struct FitKernelArgs {
    /// CSV with a `label` column (0/1, blank for unlabeled) and inputs.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "bayes-probit")]
    pub mode: KernelModeArg,
    /// Kernel bandwidth; median pairwise distance when absent.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub gamma_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_i: f64,
    /// Ignore unlabeled rows.
    #[arg(long)]
    pub labeled_only: bool,
    /// Lattice nodes per axis for 2-D inputs.
    #[arg(long, default_value_t = 40)]
    pub grid_size: usize,
}

#[derive(Args, Debug)]
pub struct BinaryCellArgs {
    /// Labeled counts n00,n01,n10,n11 (n[x][y]).
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<u64>>,
    /// Unlabeled counts m0,m1.
    #[arg(long, value_delimiter = ',')]
    pub unlabeled: Option<Vec<u64>>,
}

#[derive(Args, Debug)]
pub struct RelevanceArgs {
    /// Model specification file; the built-in catalogue when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Labeled fractions, comma separated; overrides the configuration.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    /// mixture-fig1, digits-6v9, kernel-synthetic, binary-cell or relevance.
    pub name: String,
    /// Use simulated factor data for digits-6v9.
    #[arg(long)]
    pub synthetic: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(g, a),
        Command::FitMixture(a) => commands::fit_mixture(g, a),
        Command::FitFactor(a) => commands::fit_factor(g, a),
        Command::FitKernel(a) => commands::fit_kernel(g, a),
        Command::BinaryCell(a) => commands::binary_cell(g, a),
        Command::AnalyzeRelevance(a) => commands::analyze_relevance(g, a),
        Command::Sweep(a) => commands::sweep(g, a),
        Command::Scenario(a) => commands::scenario(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
