//! Experiment driver: configuration, two-solution runs, artifact output and
//! the self-test.

pub mod config;
pub mod experiment;
pub mod output;
pub mod selftest;

pub use config::{
    BoundKind, DistanceSection, ExperimentConfig, InitialSection, InteractionSection,
    MagneticSection, SecondEnsemble,
};
pub use experiment::{
    fitted_c_d, initial_pair, run_stability_experiment, simulate_single, DensitySeries,
    FunctionalRow, RunArtifacts,
};
pub use output::{report_text, run_and_write, simulate_and_write, write_artifacts, RunSummary};
pub use selftest::{run_selftest, SelfTestResult};
