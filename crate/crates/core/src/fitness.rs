//! Scoring a program on analogy questions.
//!
//! Fitness interrogates the store for the nearest word to the program output
//! among the `restrict` most frequent words, and stops early on a non-finite
//! output or a persistently low running accuracy.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::Rng;

use crate::benchmark::{Question, ResolvedQuestion};
use crate::evolve::EvolutionConfig;
use crate::ops::RintMode;
use crate::program::ProgramTree;
use crate::store::{EmbeddingStore, StoreError};

#[derive(Clone, Debug, PartialEq)]
pub enum FitnessError {
    EmptyQuestions,
    UnknownWord(alloc::string::String),
    Store(StoreError),
}

impl fmt::Display for FitnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitnessError::EmptyQuestions => f.write_str("question list is empty"),
            FitnessError::UnknownWord(w) => write!(f, "word `{w}` is not in the vocabulary"),
            FitnessError::Store(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for FitnessError {}

impl From<StoreError> for FitnessError {
    fn from(e: StoreError) -> Self {
        FitnessError::Store(e)
    }
}

/// How a program's answer is looked up in the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScoringParams {
    /// Only the first `restrict` (most frequent) rows are candidates.
    pub restrict: usize,
    /// Drop the three question words from the candidates.
    pub exclude_inputs: bool,
    pub rint: RintMode,
}

impl Default for ScoringParams {
    fn default() -> Self {
        ScoringParams { restrict: 30_000, exclude_inputs: true, rint: RintMode::HalfEven }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Correct,
    Wrong,
    /// The program output had a NaN or infinite component.
    NonFinite,
}

/// Runs `tree` on one question and checks the nearest word.
pub fn answer(
    tree: &ProgramTree,
    q: &ResolvedQuestion,
    store: &EmbeddingStore,
    params: &ScoringParams,
) -> Answer {
    let [a, b, c] = q.inputs;
    let out = tree
        .evaluate_with([store.row(a), store.row(b), store.row(c)], params.rint)
        .expect("store rows share one dimension");
    if !out.iter().all(|x| x.is_finite()) {
        return Answer::NonFinite;
    }
    let exclude: &[usize] = if params.exclude_inputs { &q.inputs } else { &[] };
    let hit = store
        .nearest_rows(&out, 1, params.restrict, exclude)
        .expect("finite query");
    match hit.first() {
        Some(&(row, _)) if row == q.answer => Answer::Correct,
        _ => Answer::Wrong,
    }
}

/// A program together with the outcome of its last fitness evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluatedProgram {
    pub tree: ProgramTree,
    pub fitness: f64,
    pub questions_seen: usize,
    pub halted_early: bool,
    pub halted_nonfinite: bool,
}

/// Fitness without the tree, as produced by [`score_resolved`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessOutcome {
    pub fitness: f64,
    pub questions_seen: usize,
    pub halted_early: bool,
    pub halted_nonfinite: bool,
}

impl FitnessOutcome {
    pub fn attach(self, tree: ProgramTree) -> EvaluatedProgram {
        EvaluatedProgram {
            tree,
            fitness: self.fitness,
            questions_seen: self.questions_seen,
            halted_early: self.halted_early,
            halted_nonfinite: self.halted_nonfinite,
        }
    }
}

/// Fitness over pre-resolved questions, visited in iteration order.
pub fn score_resolved<'q>(
    tree: &ProgramTree,
    questions: impl IntoIterator<Item = &'q ResolvedQuestion>,
    store: &EmbeddingStore,
    cfg: &EvolutionConfig,
) -> Result<FitnessOutcome, FitnessError> {
    let params = cfg.scoring();
    let mut seen = 0usize;
    let mut correct = 0usize;
    for q in questions {
        seen += 1;
        match answer(tree, q, store, &params) {
            Answer::NonFinite => {
                return Ok(FitnessOutcome {
                    fitness: 0.0,
                    questions_seen: seen,
                    halted_early: false,
                    halted_nonfinite: true,
                })
            }
            Answer::Correct => correct += 1,
            Answer::Wrong => {}
        }
        let running = correct as f64 / seen as f64;
        if seen >= cfg.halt_min_questions && running < cfg.halt_threshold {
            return Ok(FitnessOutcome {
                fitness: running,
                questions_seen: seen,
                halted_early: true,
                halted_nonfinite: false,
            });
        }
    }
    if seen == 0 {
        return Err(FitnessError::EmptyQuestions);
    }
    Ok(FitnessOutcome {
        fitness: correct as f64 / seen as f64,
        questions_seen: seen,
        halted_early: false,
        halted_nonfinite: false,
    })
}

/// Resolves every question against `store`.
pub fn resolve_all(
    questions: &[Question],
    store: &EmbeddingStore,
) -> Result<Vec<ResolvedQuestion>, FitnessError> {
    questions
        .iter()
        .map(|q| q.resolve(store).map_err(FitnessError::UnknownWord))
        .collect()
}

/// Fitness of `tree` on `questions`, in order.
///
/// `questions` is expected to be the subset already drawn for this
/// evaluation; all of their words must be in `store`.
pub fn fitness(
    tree: &ProgramTree,
    questions: &[Question],
    store: &EmbeddingStore,
    cfg: &EvolutionConfig,
) -> Result<EvaluatedProgram, FitnessError> {
    if questions.is_empty() {
        return Err(FitnessError::EmptyQuestions);
    }
    let resolved = resolve_all(questions, store)?;
    Ok(score_resolved(tree, &resolved, store, cfg)?.attach(tree.clone()))
}

/// Size of a partial-evaluation subset: `ceil(fraction * n)`, at least 1.
pub fn subset_size(n: usize, fraction: f64) -> usize {
    let m = libm::ceil(fraction * n as f64) as usize;
    m.clamp(1, n)
}

/// Uniform sample without replacement of positions into a set of `n`, in
/// sampled order.
pub fn draw_subset_indices<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Vec<usize> {
    assert!(n > 0, "cannot draw from an empty set");
    index::sample(rng, n, subset_size(n, fraction)).into_vec()
}

/// Draws a fresh random subset of the training questions.
pub fn draw_fitness_subset<R: Rng + ?Sized>(
    train: &[Question],
    cfg: &EvolutionConfig,
    rng: &mut R,
) -> Vec<Question> {
    draw_subset_indices(train.len(), cfg.subset_fraction, rng)
        .into_iter()
        .map(|i| train[i].clone())
        .collect()
}
