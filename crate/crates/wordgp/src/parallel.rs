use rayon::prelude::*;
use wordgp_core::evolve::FitnessExecutor;
use wordgp_core::fitness::{FitnessError, FitnessOutcome};

/// Evaluates fitness jobs on the rayon pool; results keep job order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Rayon;

impl FitnessExecutor for Rayon {
    fn run<F>(&self, jobs: usize, job: F) -> Vec<Result<FitnessOutcome, FitnessError>>
    where
        F: Fn(usize) -> Result<FitnessOutcome, FitnessError> + Sync + Send,
    {
        (0..jobs).into_par_iter().map(job).collect()
    }
}
