//! File formats, experiment orchestration and the `wordgp` command line on
//! top of [`wordgp_core`].

use std::io;
use std::path::{Path, PathBuf};

pub use wordgp_core as core;

pub mod artifacts;
pub mod commands;
pub mod embeddings;
pub mod manifest;
pub mod parallel;
pub mod programs;
pub mod questions;
pub mod synth;

use embeddings::EmbeddingFileError;
use questions::QuestionFileError;
use wordgp_core::benchmark::BenchmarkError;
use wordgp_core::evolve::EvolveError;
use wordgp_core::fitness::FitnessError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Embeddings { path: PathBuf, source: EmbeddingFileError },
    #[error("{}: {source}", path.display())]
    Questions { path: PathBuf, source: QuestionFileError },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error("group {group} run {run}: {source} (finished runs are kept; rerun with --resume)")]
    Run { group: usize, run: usize, source: EvolveError },
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }
}
