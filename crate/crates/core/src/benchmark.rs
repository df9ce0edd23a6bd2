//! Analogy questions, OOV filtering, train/test splits, accuracy and
//! cross-space transfer tables.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::evolve::RunResult;
use crate::fitness::{answer, resolve_all, Answer, FitnessError, ScoringParams};
use crate::ops::OperatorKind;
use crate::program::ProgramTree;
use crate::seeded_rng;
use crate::store::EmbeddingStore;

/// "a is to b as c is to answer".
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Question {
    pub a: String,
    pub b: String,
    pub c: String,
    pub answer: String,
}

/// Row indices of a question's words in one store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResolvedQuestion {
    pub inputs: [usize; 3],
    pub answer: usize,
}

impl Question {
    pub fn new(a: &str, b: &str, c: &str, answer: &str) -> Self {
        Question { a: a.into(), b: b.into(), c: c.into(), answer: answer.into() }
    }

    pub fn words(&self) -> [&str; 4] {
        [&self.a, &self.b, &self.c, &self.answer]
    }

    /// Row indices, or the first word missing from `store`.
    pub fn resolve(&self, store: &EmbeddingStore) -> Result<ResolvedQuestion, String> {
        let mut rows = [0usize; 4];
        for (slot, w) in rows.iter_mut().zip(self.words()) {
            *slot = store.index_of(w).ok_or_else(|| String::from(w))?;
        }
        Ok(ResolvedQuestion { inputs: [rows[0], rows[1], rows[2]], answer: rows[3] })
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.a, self.b, self.c, self.answer)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuestionGroup {
    /// 1-based position of the group header in its source file.
    pub index: usize,
    pub name: String,
    pub questions: Vec<Question>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitGroup {
    pub group: QuestionGroup,
    pub train: Vec<Question>,
    pub test: Vec<Question>,
    pub split_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BenchmarkError {
    TooFewQuestions { group: String, count: usize },
    NoRuns,
    Fitness(FitnessError),
}

impl fmt::Display for BenchmarkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkError::TooFewQuestions { group, count } => {
                write!(f, "group `{group}` has {count} question(s); at least 2 are needed to split")
            }
            BenchmarkError::NoRuns => f.write_str("no runs to aggregate"),
            BenchmarkError::Fitness(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for BenchmarkError {}

impl From<FitnessError> for BenchmarkError {
    fn from(e: FitnessError) -> Self {
        BenchmarkError::Fitness(e)
    }
}

/// Keeps the questions whose four words are all in `store`, in order.
pub fn filter_oov(group: &QuestionGroup, store: &EmbeddingStore) -> QuestionGroup {
    QuestionGroup {
        index: group.index,
        name: group.name.clone(),
        questions: group
            .questions
            .iter()
            .filter(|q| q.words().iter().all(|w| store.contains(w)))
            .cloned()
            .collect(),
    }
}

/// Random halves: `ceil(n/2)` training and `floor(n/2)` test questions.
///
/// Both halves keep the group's original order.
pub fn split_train_test(group: &QuestionGroup, seed: u64) -> Result<SplitGroup, BenchmarkError> {
    let n = group.questions.len();
    if n < 2 {
        return Err(BenchmarkError::TooFewQuestions { group: group.name.clone(), count: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let n_train = n.div_ceil(2);
    let mut in_train = alloc::vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = group
        .questions
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    Ok(SplitGroup {
        group: group.clone(),
        train: train.into_iter().map(|(q, _)| q).collect(),
        test: test.into_iter().map(|(q, _)| q).collect(),
        split_seed: seed,
    })
}

/// Counts correct answers over resolved questions; non-finite outputs are wrong.
pub fn count_correct(
    tree: &ProgramTree,
    questions: &[crate::benchmark::ResolvedQuestion],
    store: &EmbeddingStore,
    params: &ScoringParams,
) -> usize {
    questions
        .iter()
        .filter(|q| answer(tree, q, store, params) == Answer::Correct)
        .count()
}

/// Proportion of `questions` answered correctly, over a full pass.
pub fn evaluate_accuracy(
    tree: &ProgramTree,
    questions: &[Question],
    store: &EmbeddingStore,
    params: &ScoringParams,
) -> Result<f64, FitnessError> {
    if questions.is_empty() {
        return Err(FitnessError::EmptyQuestions);
    }
    let resolved = resolve_all(questions, store)?;
    Ok(count_correct(tree, &resolved, store, params) as f64 / resolved.len() as f64)
}

/// `add(ARG2,sub(ARG1,ARG0))`, i.e. `c - a + b`.
pub fn baseline_rule_program() -> ProgramTree {
    use OperatorKind::*;
    ProgramTree::binary(
        Add,
        ProgramTree::terminal(Arg2),
        ProgramTree::binary(Sub, ProgramTree::terminal(Arg1), ProgramTree::terminal(Arg0)),
    )
}

/// Accuracy of many programs on many groups of a second store.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    /// Groups with at least one in-vocabulary question, in input order.
    pub groups: Vec<GroupInfo>,
    /// Source group index of each program.
    pub sources: Vec<usize>,
    /// `cells[p][g]`: accuracy of program `p` on group `g`.
    pub cells: Vec<Vec<f64>>,
    /// Accuracy of the baseline rule per group.
    pub rule: Vec<f64>,
    /// Per group, the best program (lowest index on ties).
    pub best_program: Vec<usize>,
    /// Per distinct source group (ascending): per target group, the best
    /// program from that source and its accuracy.
    pub best_by_source: Vec<(usize, Vec<(usize, f64)>)>,
    /// Groups dropped because no question survived OOV filtering.
    pub skipped: Vec<GroupInfo>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupInfo {
    pub index: usize,
    pub name: String,
    pub questions: usize,
}

impl TransferMatrix {
    /// True when program `p` strictly beats the rule on group `g`.
    pub fn beats_rule(&self, p: usize, g: usize) -> bool {
        self.cells[p][g] > self.rule[g]
    }
}

fn argmax_first(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (i, v)| match best {
        Some((_, bv)) if v <= bv => best,
        _ => Some((i, v)),
    })
}

/// Evaluates every `(program, source group)` on every group of `store`.
///
/// Groups are OOV-filtered against `store` first.
pub fn transfer_evaluate(
    programs: &[(ProgramTree, usize)],
    store: &EmbeddingStore,
    groups: &[QuestionGroup],
    params: &ScoringParams,
) -> Result<TransferMatrix, FitnessError> {
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    let mut resolved = Vec::new();
    for g in groups {
        let f = filter_oov(g, store);
        let info = GroupInfo { index: g.index, name: g.name.clone(), questions: f.questions.len() };
        if f.questions.is_empty() {
            skipped.push(info);
        } else {
            resolved.push(resolve_all(&f.questions, store)?);
            kept.push(info);
        }
    }
    let accuracy = |tree: &ProgramTree, qs: &[ResolvedQuestion]| {
        count_correct(tree, qs, store, params) as f64 / qs.len() as f64
    };
    let cells: Vec<Vec<f64>> = programs
        .iter()
        .map(|(tree, _)| resolved.iter().map(|qs| accuracy(tree, qs)).collect())
        .collect();
    let rule_tree = baseline_rule_program();
    let rule: Vec<f64> = resolved.iter().map(|qs| accuracy(&rule_tree, qs)).collect();

    let best_program = (0..kept.len())
        .map(|g| argmax_first(cells.iter().enumerate().map(|(p, row)| (p, row[g]))).map_or(0, |b| b.0))
        .collect();

    let mut sources: Vec<usize> = programs.iter().map(|(_, s)| *s).collect();
    sources.sort_unstable();
    sources.dedup();
    let best_by_source = sources
        .into_iter()
        .map(|src| {
            let per_group = (0..kept.len())
                .map(|g| {
                    argmax_first(
                        programs
                            .iter()
                            .enumerate()
                            .filter(|(_, (_, s))| *s == src)
                            .map(|(p, _)| (p, cells[p][g])),
                    )
                    .expect("source has at least one program")
                })
                .collect();
            (src, per_group)
        })
        .collect();

    Ok(TransferMatrix {
        groups: kept,
        sources: programs.iter().map(|(_, s)| *s).collect(),
        cells,
        rule,
        best_program,
        best_by_source,
        skipped,
    })
}

/// Max and mean of the selected programs' accuracies over independent runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub runs: usize,
    pub train_max: f64,
    pub train_mean: f64,
    pub test_max: f64,
    pub test_mean: f64,
}

/// Aggregates `(train, test)` accuracy pairs.
pub fn aggregate_accuracies(
    pairs: impl IntoIterator<Item = (f64, f64)>,
) -> Result<RunSummary, BenchmarkError> {
    let mut runs = 0usize;
    let (mut train_max, mut test_max) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut train_sum, mut test_sum) = (0.0, 0.0);
    for (tr, te) in pairs {
        runs += 1;
        train_max = train_max.max(tr);
        test_max = test_max.max(te);
        train_sum += tr;
        test_sum += te;
    }
    if runs == 0 {
        return Err(BenchmarkError::NoRuns);
    }
    Ok(RunSummary {
        runs,
        train_max,
        train_mean: train_sum / runs as f64,
        test_max,
        test_mean: test_sum / runs as f64,
    })
}

pub fn aggregate_runs(results: &[RunResult]) -> Result<RunSummary, BenchmarkError> {
    aggregate_accuracies(results.iter().map(|r| (r.best_train_accuracy, r.best_test_accuracy)))
}
