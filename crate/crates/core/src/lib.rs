//! Evolving word-vector composition programs with tree-based genetic programming.
//!
//! A composition program is an expression tree over component-wise vector
//! operators whose leaves are the three input word vectors of an analogy
//! question "a is to b as c is to ?" (`ARG0`, `ARG1`, `ARG2`). A program is
//! scored by how often the vocabulary word closest to its output is the
//! expected answer. The human-designed baseline `c - a + b` is the program
//! `add(ARG2,sub(ARG1,ARG0))`.
//!
//! This crate is `no_std` (it needs `alloc`) and carries no IO. File formats,
//! experiment artifacts and the command line live in the `wordgp` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod benchmark;
pub mod equivalence;
pub mod evolve;
pub mod fitness;
pub mod ops;
pub mod program;
pub mod random;
pub mod store;

pub use benchmark::{Question, QuestionGroup, SplitGroup};
pub use evolve::{EvolutionConfig, RunResult};
pub use fitness::{EvaluatedProgram, ScoringParams};
pub use ops::{OperatorKind, RintMode};
pub use program::{ProgramTree, DEPTH_LIMIT};
pub use store::{EmbeddingStore, Neighbor};

/// Generator used for every stochastic decision in the crate.
pub type RunRng = rand_chacha::ChaCha8Rng;

/// Builds the run generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> RunRng {
    use rand::SeedableRng;
    RunRng::seed_from_u64(seed)
}
