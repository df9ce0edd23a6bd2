//! The generational GP loop: truncation selection, one-point crossover,
//! uniform mutation and static depth limiting.
//!
//! # Random draw order
//!
//! Every stochastic decision of a run comes from one generator seeded with
//! [`EvolutionConfig::seed`], consumed in this order:
//!
//! 1. generation 0: the initial trees in population order, then one subset
//!    draw per individual in population order;
//! 2. each later generation: the survivor picked for every offspring slot;
//!    for every adjacent pair the crossover coin and, on heads, the two
//!    crossover points; for every individual the mutation coin and, on
//!    heads, the mutation point and the replacement subtree; finally one
//!    subset draw per individual that needs evaluation, in population order.
//!
//! Fitness evaluation itself draws nothing, so it may run in parallel
//! without changing the outcome.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::benchmark::{count_correct, Question, ResolvedQuestion};
use crate::fitness::{
    draw_subset_indices, resolve_all, score_resolved, EvaluatedProgram, FitnessError,
    FitnessOutcome, ScoringParams,
};
use crate::ops::RintMode;
use crate::program::{ProgramTree, DEPTH_LIMIT};
use crate::random::{ramped_half_and_half, random_tree, GenMethod};
use crate::store::EmbeddingStore;
use crate::seeded_rng;

/// Hyperparameters of one GP run.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Individuals kept by truncation selection each generation.
    pub survivors: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub depth_limit: usize,
    /// Size of the most-frequent-word prefix searched for answers.
    pub restrict_l: usize,
    /// Fraction of the training set each fitness evaluation sees.
    pub subset_fraction: f64,
    pub halt_min_questions: usize,
    pub halt_threshold: f64,
    pub exclude_inputs: bool,
    pub rint: RintMode,
    /// Keep the fitness of individuals that variation left untouched.
    pub cache_fitness: bool,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 500,
            generations: 250,
            survivors: 100,
            p_crossover: 0.5,
            p_mutation: 0.5,
            depth_limit: DEPTH_LIMIT,
            restrict_l: 30_000,
            subset_fraction: 0.2,
            halt_min_questions: 10,
            halt_threshold: 0.05,
            exclude_inputs: true,
            rint: RintMode::HalfEven,
            cache_fitness: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    EmptyPopulation,
    SurvivorCount { survivors: usize, population: usize },
    Probability { name: &'static str, value: f64 },
    SubsetFraction(f64),
    DepthLimit(usize),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::EmptyPopulation => f.write_str("population size must be positive"),
            ConfigError::SurvivorCount { survivors, population } => {
                write!(f, "survivors ({survivors}) must be in 1..={population}")
            }
            ConfigError::Probability { name, value } => write!(f, "{name} = {value} is not in [0, 1]"),
            ConfigError::SubsetFraction(v) => write!(f, "subset fraction {v} is not in (0, 1]"),
            ConfigError::DepthLimit(d) => write!(f, "depth limit {d} must be at least 2"),
        }
    }
}

impl core::error::Error for ConfigError {}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size == 0 {
            return Err(ConfigError::EmptyPopulation);
        }
        if self.survivors == 0 || self.survivors > self.population_size {
            return Err(ConfigError::SurvivorCount {
                survivors: self.survivors,
                population: self.population_size,
            });
        }
        for (name, value) in [("p_crossover", self.p_crossover), ("p_mutation", self.p_mutation)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return Err(ConfigError::SubsetFraction(self.subset_fraction));
        }
        if self.depth_limit < 2 {
            return Err(ConfigError::DepthLimit(self.depth_limit));
        }
        Ok(())
    }

    pub fn scoring(&self) -> ScoringParams {
        ScoringParams { restrict: self.restrict_l, exclude_inputs: self.exclude_inputs, rint: self.rint }
    }
}

/// Indices of `pop` ordered best first: fitness descending, then smaller
/// tree, then earlier position.
pub fn ranking(pop: &[EvaluatedProgram]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&i, &j| {
        pop[j]
            .fitness
            .total_cmp(&pop[i].fitness)
            .then(pop[i].tree.size().cmp(&pop[j].tree.size()))
            .then(i.cmp(&j))
    });
    order
}

/// The best `k` programs, best first.
pub fn select_truncation(pop: &[EvaluatedProgram], k: usize) -> Vec<EvaluatedProgram> {
    assert!(k <= pop.len(), "cannot keep {k} of {}", pop.len());
    ranking(pop).into_iter().take(k).map(|i| pop[i].clone()).collect()
}

/// Swaps the subtrees rooted at `at1` in `p1` and `at2` in `p2`.
///
/// An offspring deeper than `depth_limit` is replaced by its own parent.
pub fn crossover_at(
    p1: &ProgramTree,
    at1: usize,
    p2: &ProgramTree,
    at2: usize,
    depth_limit: usize,
) -> (ProgramTree, ProgramTree) {
    let c1 = p1.replace_subtree(at1, &p2.subtree(at2));
    let c2 = p2.replace_subtree(at2, &p1.subtree(at1));
    let c1 = if c1.depth() > depth_limit { p1.clone() } else { c1 };
    let c2 = if c2.depth() > depth_limit { p2.clone() } else { c2 };
    (c1, c2)
}

/// One-point crossover with crossover points drawn uniformly over all nodes.
pub fn one_point_crossover<R: Rng + ?Sized>(
    p1: &ProgramTree,
    p2: &ProgramTree,
    depth_limit: usize,
    rng: &mut R,
) -> (ProgramTree, ProgramTree) {
    let at1 = rng.random_range(0..p1.size());
    let at2 = rng.random_range(0..p2.size());
    crossover_at(p1, at1, p2, at2, depth_limit)
}

/// Replaces the subtree at `at` by `with`, unless that breaks the depth limit.
pub fn mutate_at(p: &ProgramTree, at: usize, with: &ProgramTree, depth_limit: usize) -> ProgramTree {
    let child = p.replace_subtree(at, with);
    if child.depth() > depth_limit {
        p.clone()
    } else {
        child
    }
}

/// Uniform mutation: a random node's subtree becomes a fresh `grow` tree of
/// depth 0 to 2.
pub fn uniform_mutation<R: Rng + ?Sized>(p: &ProgramTree, depth_limit: usize, rng: &mut R) -> ProgramTree {
    let at = rng.random_range(0..p.size());
    let with = random_tree(rng, 0, 2, GenMethod::Grow);
    mutate_at(p, at, &with, depth_limit)
}

/// Runs a batch of independent fitness jobs.
///
/// Implementations must return results in job order. The std crate provides
/// a thread-pool version.
pub trait FitnessExecutor {
    fn run<F>(&self, jobs: usize, job: F) -> Vec<Result<FitnessOutcome, FitnessError>>
    where
        F: Fn(usize) -> Result<FitnessOutcome, FitnessError> + Sync + Send;
}

/// Evaluates jobs one after the other on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl FitnessExecutor for Sequential {
    fn run<F>(&self, jobs: usize, job: F) -> Vec<Result<FitnessOutcome, FitnessError>>
    where
        F: Fn(usize) -> Result<FitnessOutcome, FitnessError> + Sync + Send,
    {
        (0..jobs).map(job).collect()
    }
}

/// Population statistics after a generation has been evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub median_fitness: f64,
    pub best_program: ProgramTree,
    /// Fitness evaluations so far, this generation included.
    pub evaluations: usize,
}

fn generation_stats(generation: usize, pop: &[EvaluatedProgram], evaluations: usize) -> GenerationStats {
    let mut fit: Vec<f64> = pop.iter().map(|p| p.fitness).collect();
    fit.sort_by(f64::total_cmp);
    let n = fit.len();
    let median = if n % 2 == 1 { fit[n / 2] } else { (fit[n / 2 - 1] + fit[n / 2]) / 2.0 };
    let best = ranking(pop)[0];
    GenerationStats {
        generation,
        best_fitness: pop[best].fitness,
        mean_fitness: fit.iter().sum::<f64>() / n as f64,
        median_fitness: median,
        best_program: pop[best].tree.clone(),
        evaluations,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub generations_completed: usize,
    /// Truncation-selected final population, best first.
    pub final_survivors: Vec<EvaluatedProgram>,
    pub best_program: ProgramTree,
    pub best_train_accuracy: f64,
    pub best_test_accuracy: f64,
    /// Fitness evaluations actually performed (cache hits excluded).
    pub evaluation_count: usize,
    /// One entry per generation, generation 0 first.
    pub trace: Vec<GenerationStats>,
}

/// Picks the survivor with the highest full training accuracy (truncation
/// tie-break) and scores it on `test`.
///
/// Returns the program, its position in `survivors`, and both accuracies.
pub fn select_best_program(
    survivors: &[EvaluatedProgram],
    train: &[Question],
    test: &[Question],
    store: &EmbeddingStore,
    cfg: &EvolutionConfig,
) -> Result<(ProgramTree, usize, f64, f64), FitnessError> {
    assert!(!survivors.is_empty(), "no survivors to choose from");
    if train.is_empty() || test.is_empty() {
        return Err(FitnessError::EmptyQuestions);
    }
    let params = cfg.scoring();
    let train_r = resolve_all(train, store)?;
    let test_r = resolve_all(test, store)?;
    let rescored: Vec<EvaluatedProgram> = survivors
        .iter()
        .map(|s| {
            let acc = count_correct(&s.tree, &train_r, store, &params) as f64 / train_r.len() as f64;
            EvaluatedProgram {
                tree: s.tree.clone(),
                fitness: acc,
                questions_seen: train_r.len(),
                halted_early: false,
                halted_nonfinite: false,
            }
        })
        .collect();
    let best = ranking(&rescored)[0];
    let test_acc = count_correct(&rescored[best].tree, &test_r, store, &params) as f64 / test_r.len() as f64;
    Ok((rescored[best].tree.clone(), best, rescored[best].fitness, test_acc))
}

/// [`evolve_run_with`] on the calling thread with no observer.
pub fn evolve_run(
    train: &[Question],
    test: &[Question],
    store: &EmbeddingStore,
    cfg: &EvolutionConfig,
) -> Result<RunResult, EvolveError> {
    evolve_run_with(train, test, store, cfg, &Sequential, &mut |_, _| {})
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvolveError {
    Config(ConfigError),
    Fitness(FitnessError),
}

impl fmt::Display for EvolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvolveError::Config(e) => e.fmt(f),
            EvolveError::Fitness(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for EvolveError {}

impl From<ConfigError> for EvolveError {
    fn from(e: ConfigError) -> Self {
        EvolveError::Config(e)
    }
}

impl From<FitnessError> for EvolveError {
    fn from(e: FitnessError) -> Self {
        EvolveError::Fitness(e)
    }
}

struct Slot {
    tree: ProgramTree,
    cached: Option<FitnessOutcome>,
}

/// Evaluates every slot lacking a cached fitness, returning the population.
fn evaluate_slots<R: Rng + ?Sized, E: FitnessExecutor>(
    slots: Vec<Slot>,
    train: &[ResolvedQuestion],
    store: &EmbeddingStore,
    cfg: &EvolutionConfig,
    exec: &E,
    rng: &mut R,
    evaluations: &mut usize,
) -> Result<Vec<EvaluatedProgram>, FitnessError> {
    let pending: Vec<usize> = (0..slots.len()).filter(|&i| slots[i].cached.is_none()).collect();
    let subsets: Vec<Vec<usize>> = pending
        .iter()
        .map(|_| draw_subset_indices(train.len(), cfg.subset_fraction, rng))
        .collect();
    let results = exec.run(pending.len(), |j| {
        let tree = &slots[pending[j]].tree;
        score_resolved(tree, subsets[j].iter().map(|&q| &train[q]), store, cfg)
    });
    *evaluations += pending.len();
    let mut fresh = pending.into_iter().zip(results).peekable();
    let mut pop = Vec::with_capacity(slots.len());
    for (i, slot) in slots.into_iter().enumerate() {
        let outcome = match slot.cached {
            Some(o) => o,
            None => {
                let (j, r) = fresh.next().expect("one result per pending slot");
                debug_assert_eq!(i, j);
                r?
            }
        };
        pop.push(outcome.attach(slot.tree));
    }
    Ok(pop)
}

/// Runs the full GP search and selects the best final program.
///
/// `test` is only used to score the selected program after evolution ends.
/// `observe` is called after every generation with its statistics and the
/// evaluated population.
pub fn evolve_run_with<E: FitnessExecutor>(
    train: &[Question],
    test: &[Question],
    store: &EmbeddingStore,
    cfg: &EvolutionConfig,
    exec: &E,
    observe: &mut dyn FnMut(&GenerationStats, &[EvaluatedProgram]),
) -> Result<RunResult, EvolveError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(FitnessError::EmptyQuestions.into());
    }
    let train_r = resolve_all(train, store)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut evaluations = 0usize;
    let mut trace = Vec::with_capacity(cfg.generations + 1);

    let init_depth = cfg.depth_limit.min(4);
    let slots = ramped_half_and_half(&mut rng, cfg.population_size, 1, init_depth)
        .into_iter()
        .map(|tree| Slot { tree, cached: None })
        .collect();
    let mut pop = evaluate_slots(slots, &train_r, store, cfg, exec, &mut rng, &mut evaluations)?;
    let stats = generation_stats(0, &pop, evaluations);
    observe(&stats, &pop);
    trace.push(stats);

    for generation in 1..=cfg.generations {
        let survivors = select_truncation(&pop, cfg.survivors);
        let mut slots: Vec<Slot> = (0..cfg.population_size)
            .map(|_| {
                let s = &survivors[rng.random_range(0..survivors.len())];
                let cached = FitnessOutcome {
                    fitness: s.fitness,
                    questions_seen: s.questions_seen,
                    halted_early: s.halted_early,
                    halted_nonfinite: s.halted_nonfinite,
                };
                Slot { tree: s.tree.clone(), cached: cfg.cache_fitness.then_some(cached) }
            })
            .collect();

        for pair in slots.chunks_exact_mut(2) {
            if rng.random_bool(cfg.p_crossover) {
                let (c1, c2) = one_point_crossover(&pair[0].tree, &pair[1].tree, cfg.depth_limit, &mut rng);
                for (slot, child) in pair.iter_mut().zip([c1, c2]) {
                    if slot.tree != child {
                        slot.tree = child;
                        slot.cached = None;
                    }
                }
            }
        }
        for slot in slots.iter_mut() {
            if rng.random_bool(cfg.p_mutation) {
                let child = uniform_mutation(&slot.tree, cfg.depth_limit, &mut rng);
                if slot.tree != child {
                    slot.tree = child;
                    slot.cached = None;
                }
            }
        }

        pop = evaluate_slots(slots, &train_r, store, cfg, exec, &mut rng, &mut evaluations)?;
        let stats = generation_stats(generation, &pop, evaluations);
        observe(&stats, &pop);
        trace.push(stats);
    }

    let final_survivors = select_truncation(&pop, cfg.survivors);
    let (best_program, _, best_train_accuracy, best_test_accuracy) =
        select_best_program(&final_survivors, train, test, store, cfg)?;
    Ok(RunResult {
        seed: cfg.seed,
        generations_completed: cfg.generations,
        final_survivors,
        best_program,
        best_train_accuracy,
        best_test_accuracy,
        evaluation_count: evaluations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::OperatorKind::*;
    use crate::program::parse_program;
    use alloc::string::ToString;

    fn ev(src: &str, fitness: f64) -> EvaluatedProgram {
        EvaluatedProgram {
            tree: parse_program(src).unwrap(),
            fitness,
            questions_seen: 10,
            halted_early: false,
            halted_nonfinite: false,
        }
    }

    #[test]
    fn truncation_orders_by_fitness() {
        let pop = [ev("ARG0", 0.9), ev("ARG1", 0.1), ev("ARG2", 0.5)];
        let kept = select_truncation(&pop, 2);
        assert_eq!(kept.iter().map(|p| p.fitness).collect::<Vec<_>>(), [0.9, 0.5]);
        assert_eq!(select_truncation(&pop, 3).len(), 3);
    }

    #[test]
    fn truncation_tie_breaks() {
        let pop = [ev("add(ARG0,ARG1)", 0.5), ev("ARG1", 0.5), ev("neg(ARG0)", 0.5), ev("ARG2", 0.5)];
        let kept = select_truncation(&pop, 2);
        assert_eq!(kept[0].tree.to_string(), "ARG1");
        assert_eq!(kept[1].tree.to_string(), "ARG2");
    }

    #[test]
    fn crossover_of_terminals_swaps() {
        let mut rng = seeded_rng(0);
        let (a, b) = one_point_crossover(
            &ProgramTree::terminal(Arg0),
            &ProgramTree::terminal(Arg1),
            DEPTH_LIMIT,
            &mut rng,
        );
        assert_eq!((a.root(), b.root()), (Arg1, Arg0));
    }

    #[test]
    fn self_crossover_at_same_point_is_identity() {
        let rule = parse_program("add(ARG2,sub(ARG1,ARG0))").unwrap();
        for at in 0..rule.size() {
            let (a, b) = crossover_at(&rule, at, &rule, at, DEPTH_LIMIT);
            assert_eq!(a, rule);
            assert_eq!(b, rule);
        }
    }

    fn chain(op: crate::ops::OperatorKind, depth: usize) -> ProgramTree {
        (0..depth).fold(ProgramTree::terminal(Arg0), |t, _| ProgramTree::unary(op, t))
    }

    #[test]
    fn crossover_rejects_too_deep_offspring() {
        let p1 = chain(Neg, 9);
        let p2 = chain(Abs, 5);
        // Node 6 of a unary chain sits at depth 6; a depth-5 subtree there
        // gives depth 11.
        assert_eq!(p1.node_depths()[6], 6);
        let (c1, c2) = crossover_at(&p1, 6, &p2, 0, DEPTH_LIMIT);
        assert_eq!(c1, p1);
        assert_eq!(c2.depth(), 3);
        // With a looser limit the swap goes through.
        let (c1, _) = crossover_at(&p1, 6, &p2, 0, 11);
        assert_eq!(c1.depth(), 11);
    }

    #[test]
    fn mutation_of_terminal_is_shallow() {
        let mut rng = seeded_rng(3);
        let t = ProgramTree::terminal(Arg0);
        let mut saw_identity = false;
        for _ in 0..500 {
            let m = uniform_mutation(&t, DEPTH_LIMIT, &mut rng);
            assert!(m.depth() <= 2);
            saw_identity |= m == t;
        }
        assert!(saw_identity);
    }

    #[test]
    fn mutate_at_same_terminal_is_identity() {
        let rule = parse_program("add(ARG2,sub(ARG1,ARG0))").unwrap();
        assert_eq!(mutate_at(&rule, 1, &ProgramTree::terminal(Arg2), DEPTH_LIMIT), rule);
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::default().validate().is_ok());
        let bad = EvolutionConfig { survivors: 600, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ConfigError::SurvivorCount { .. })));
        let bad = EvolutionConfig { p_mutation: 1.5, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ConfigError::Probability { .. })));
        let bad = EvolutionConfig { subset_fraction: 0.0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ConfigError::SubsetFraction(_))));
    }
}
