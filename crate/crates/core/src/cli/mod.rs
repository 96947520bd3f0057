//! Configuration loading, experiment runner and report index behind the
//! `fracks` binary.

mod config;
mod index;
mod run;

pub use config::{
    load_config, load_config_with, parse_config, BesovBlock, DataKind, DecayBlock, DerivedExponents, EnsembleBlock, Experiment,
    GridSpec, MainardiBlock, MeshSpec, MlEvalBlock, Overrides, RunConfig, SelfsimBlock, SolveBlock, StudyBlock, YamazakiBlock,
};
pub use index::{collect_index, report_index, result_of, IndexRow};
pub use run::{run, RunOutcome};
