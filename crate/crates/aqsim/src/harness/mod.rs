//! Batch experiment harness: configuration, run records, orchestration,
//! and summary artifacts.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod experiment;
pub mod records;
pub mod summary;

pub use config::{ConfigError, ExperimentConfig, Overrides, SectorMode};
pub use experiment::{run_experiment, slot_seed, ExperimentReport};
pub use records::{parse_record_line, record_to_line, RecordStore, RunRecord, RunStatus};
pub use summary::{summarize, write_fig3_csv, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Record(#[from] records::RecordError),
    #[error(transparent)]
    Instance(#[from] crate::instances::InstanceError),
    #[error(transparent)]
    Hamiltonian(#[from] crate::hamiltonians::HamiltonianError),
    #[error(transparent)]
    Sector(#[from] crate::sector::SectorError),
    #[error(transparent)]
    State(#[from] crate::state::StateError),
    #[error(transparent)]
    Evolve(#[from] crate::evolve::EvolveError),
    #[error(transparent)]
    Spectra(#[from] crate::spectra::SpectraError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
