//! Experiment configuration, labeled-fraction sweeps and the scenario runner
//! behind the command-line tool.

mod config;
mod scenario;
mod sweep;

pub use config::{
    BinaryScenario, DigitsScenario, ExperimentConfig, InputPaths, KernelScenario, MixtureScenario, RelevanceScenario,
    ScenarioId,
};
pub use scenario::{
    digits_replicate, kernel_error_replicates, kernel_field_correlations, mixture_replicate, run_scenario,
    scenario_rng, DigitsSource, Manifest, MixtureCurves, ScenarioOutput,
};
pub use sweep::{
    error_rate, misclassified, replicate_rng, run_sweep, sweep_table, Arm, FactorSweepModel, FitRequest,
    KernelSweepModel, SweepCell, SweepModel,
};
