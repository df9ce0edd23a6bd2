//! The subcommands, callable as library functions. `main` only parses flags
//! and prints.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;
use wordgp_core::benchmark::{
    aggregate_accuracies, baseline_rule_program, evaluate_accuracy, filter_oov, split_train_test,
    transfer_evaluate, SplitGroup, TransferMatrix,
};
use wordgp_core::evolve::evolve_run_with;
use wordgp_core::{EmbeddingStore, Neighbor, ProgramTree, QuestionGroup, ScoringParams};

use crate::artifacts::{
    aggregate_bytes, find_run_records, load_run_record, run_log_bytes, save_run_record, to_json_bytes,
    write_atomic, write_csv_rows, write_header_comment, GroupAggregate, RunRecord, SurvivorRecord,
};
use crate::embeddings::{load_embeddings, EmbeddingFormat};
use crate::manifest::ExperimentManifest;
use crate::parallel::Rayon;
use crate::programs::read_program_file;
use crate::questions::{parse_questions, select_groups, write_questions};
use crate::synth::{generated_pairs, parse_pairs, synthesize, write_fixture, FixturePaths, SynthSpec};
use crate::Error;

pub fn load_store(path: &Path, format: Option<EmbeddingFormat>) -> Result<EmbeddingStore, Error> {
    let format = format.unwrap_or_else(|| EmbeddingFormat::from_path(path));
    info!("loading embeddings from {}", path.display());
    load_embeddings(path, format).map_err(|source| Error::Embeddings { path: path.to_path_buf(), source })
}

pub fn load_groups(path: &Path, lowercase: bool, selector: &[String]) -> Result<Vec<QuestionGroup>, Error> {
    let groups = parse_questions(path, lowercase)
        .map_err(|source| Error::Questions { path: path.to_path_buf(), source })?;
    select_groups(&groups, selector).map_err(Error::Invalid)
}

/// Directory name for a group's artifacts, e.g. `group-04-family`.
pub fn group_dir_name(index: usize, name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("group-{index:02}-{clean}")
}

fn create_dir(path: &Path) -> Result<(), Error> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_group_questions(path: &Path, group: &QuestionGroup, questions: &[wordgp_core::Question]) -> Result<(), Error> {
    let g = QuestionGroup { index: group.index, name: group.name.clone(), questions: questions.to_vec() };
    let mut buf = Vec::new();
    write_questions(&mut buf, &[g]).map_err(|e| Error::io(path, e))?;
    write_atomic(path, &buf)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvolveOptions {
    /// Reuse run records already on disk for the same manifest.
    pub resume: bool,
    /// Worker threads; 0 uses one per core.
    pub jobs: usize,
}

#[derive(Clone, Debug)]
pub struct GroupOutcome {
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
    pub aggregate: GroupAggregate,
}

#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    pub groups: Vec<GroupOutcome>,
    /// `(index, name, in-vocabulary questions)` of groups too small to split.
    pub skipped: Vec<(usize, String, usize)>,
}

struct GroupContext<'a> {
    manifest: &'a ExperimentManifest,
    store: &'a EmbeddingStore,
    split: &'a SplitGroup,
    questions_original: usize,
    rule: (f64, f64),
    dir: &'a Path,
    resume: bool,
}

fn run_one(ctx: &GroupContext<'_>, run_index: usize) -> Result<RunRecord, Error> {
    let m = ctx.manifest;
    let group = &ctx.split.group;
    let json_path = ctx.dir.join(format!("run-{run_index:02}.json"));
    let log_path = ctx.dir.join(format!("run-{run_index:02}.log.csv"));
    let seed = m.run_seed(run_index);

    if ctx.resume && json_path.exists() && log_path.exists() {
        let rec = load_run_record(&json_path)?;
        if rec.manifest == *m && rec.run_index == run_index && rec.group_index == group.index {
            info!("group {} run {run_index}: reusing {}", group.index, json_path.display());
            return Ok(rec);
        }
        warn!("{} was written by a different manifest; rerunning", json_path.display());
    }

    let cfg = m.config.to_config(seed).map_err(Error::Invalid)?;
    let result = evolve_run_with(&ctx.split.train, &ctx.split.test, ctx.store, &cfg, &Rayon, &mut |s, _| {
        debug!(
            "group {} run {run_index} gen {}: best {:.4} mean {:.4} {}",
            group.index, s.generation, s.best_fitness, s.mean_fitness, s.best_program
        )
    })
    .map_err(|source| Error::Run { group: group.index, run: run_index, source })?;

    let log = run_log_bytes(m, group.index, run_index, seed, &result.trace).map_err(|e| Error::io(&log_path, e))?;
    write_atomic(&log_path, &log)?;

    let record = RunRecord {
        manifest: m.clone(),
        group_index: group.index,
        group_name: group.name.clone(),
        run_index,
        seed,
        split_seed: ctx.split.split_seed,
        questions_original: ctx.questions_original,
        questions: group.questions.len(),
        train_questions: ctx.split.train.len(),
        test_questions: ctx.split.test.len(),
        generations_completed: result.generations_completed,
        evaluation_count: result.evaluation_count,
        best_program: result.best_program.to_string(),
        best_train_accuracy: result.best_train_accuracy,
        best_test_accuracy: result.best_test_accuracy,
        rule_train_accuracy: ctx.rule.0,
        rule_test_accuracy: ctx.rule.1,
        survivors: result.final_survivors.iter().map(SurvivorRecord::from).collect(),
    };
    // The record goes last: its presence marks the run as finished.
    save_run_record(&json_path, &record)?;
    info!(
        "group {} run {run_index}: train {:.4} test {:.4} {}",
        group.index, record.best_train_accuracy, record.best_test_accuracy, record.best_program
    );
    Ok(record)
}

/// Runs every selected group `manifest.runs` times and writes the artifacts
/// under `manifest.out_dir`.
pub fn cmd_evolve(manifest: &ExperimentManifest, opts: &EvolveOptions) -> Result<EvolveOutcome, Error> {
    let store = load_store(&manifest.embeddings, Some(manifest.format))?;
    let groups = load_groups(&manifest.questions, manifest.lowercase, &manifest.groups)?;
    let scoring = manifest.config.to_config(0).map_err(Error::Invalid)?.scoring();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;

    let out = &manifest.out_dir;
    create_dir(out)?;
    let manifest_path = out.join("manifest.json");
    write_atomic(&manifest_path, &to_json_bytes(manifest, &manifest_path)?)?;
    let echo = manifest.echo();

    let mut outcome = EvolveOutcome { groups: Vec::new(), skipped: Vec::new() };
    for g in &groups {
        let filtered = filter_oov(g, &store);
        let nq = filtered.questions.len();
        if nq < 2 {
            warn!("group {} ({}): {nq} in-vocabulary questions, skipped", g.index, g.name);
            outcome.skipped.push((g.index, g.name.clone(), nq));
            continue;
        }
        let split = split_train_test(&filtered, manifest.split_seed())?;
        let dir = out.join(group_dir_name(g.index, &g.name));
        create_dir(&dir)?;
        write_group_questions(&dir.join("train.txt"), g, &split.train)?;
        write_group_questions(&dir.join("test.txt"), g, &split.test)?;
        let rule = baseline_rule_program();
        let rule_acc = (
            evaluate_accuracy(&rule, &split.train, &store, &scoring)?,
            evaluate_accuracy(&rule, &split.test, &store, &scoring)?,
        );
        info!(
            "group {} ({}): {nq}/{} questions, {} train / {} test, rule {:.4}/{:.4}",
            g.index,
            g.name,
            g.questions.len(),
            split.train.len(),
            split.test.len(),
            rule_acc.0,
            rule_acc.1
        );

        let ctx = GroupContext {
            manifest,
            store: &store,
            split: &split,
            questions_original: g.questions.len(),
            rule: rule_acc,
            dir: &dir,
            resume: opts.resume,
        };
        let results: Vec<Result<RunRecord, Error>> =
            pool.install(|| (0..manifest.runs).into_par_iter().map(|r| run_one(&ctx, r)).collect());
        let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;

        let summary =
            aggregate_accuracies(records.iter().map(|r| (r.best_train_accuracy, r.best_test_accuracy)))?;
        let aggregate = GroupAggregate::new(&records[0], &summary);
        let path = dir.join("aggregate.csv");
        let buf = aggregate_bytes(Some(&echo), std::slice::from_ref(&aggregate)).map_err(|e| Error::io(&path, e))?;
        write_atomic(&path, &buf)?;
        outcome.groups.push(GroupOutcome { dir, records, aggregate });
    }

    let rows: Vec<GroupAggregate> = outcome.groups.iter().map(|g| g.aggregate.clone()).collect();
    let path = out.join("aggregate.csv");
    let buf = aggregate_bytes(Some(&echo), &rows).map_err(|e| Error::io(&path, e))?;
    write_atomic(&path, &buf)?;
    Ok(outcome)
}

#[derive(Clone, Debug)]
pub enum ProgramSource {
    File(PathBuf),
    Rule,
}

#[derive(Clone, Debug)]
pub struct EvalRequest {
    pub programs: ProgramSource,
    pub embeddings: PathBuf,
    pub format: Option<EmbeddingFormat>,
    pub questions: PathBuf,
    pub groups: Vec<String>,
    pub lowercase: bool,
    pub scoring: ScoringParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    /// Line in the program file; `None` for `--rule`.
    pub line: Option<usize>,
    pub program: String,
    pub group_index: usize,
    pub group_name: String,
    pub questions: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EvalOutcome {
    pub rows: Vec<EvalRow>,
    /// `(line, message)` for program lines that failed to parse.
    pub errors: Vec<(usize, String)>,
}

impl EvalOutcome {
    pub fn csv_bytes(&self) -> std::io::Result<Vec<u8>> {
        #[derive(Serialize)]
        struct Row<'a> {
            line: Option<usize>,
            program: &'a str,
            group_index: usize,
            group_name: &'a str,
            questions: usize,
            accuracy: f64,
        }
        let mut out = Vec::new();
        write_csv_rows(
            &mut out,
            self.rows.iter().map(|r| Row {
                line: r.line,
                program: &r.program,
                group_index: r.group_index,
                group_name: &r.group_name,
                questions: r.questions,
                accuracy: r.accuracy,
            }),
        )?;
        Ok(out)
    }
}

/// Accuracy of each program on each selected group, after OOV filtering.
pub fn cmd_eval(req: &EvalRequest) -> Result<EvalOutcome, Error> {
    let mut outcome = EvalOutcome::default();
    let programs: Vec<(Option<usize>, ProgramTree)> = match &req.programs {
        ProgramSource::Rule => vec![(None, baseline_rule_program())],
        ProgramSource::File(path) => read_program_file(path)
            .map_err(|e| Error::io(path, e))?
            .into_iter()
            .filter_map(|l| match l.program {
                Ok(p) => Some((Some(l.line), p)),
                Err(e) => {
                    outcome.errors.push((l.line, e.to_string()));
                    None
                }
            })
            .collect(),
    };
    let store = load_store(&req.embeddings, req.format)?;
    let groups = load_groups(&req.questions, req.lowercase, &req.groups)?;
    for g in &groups {
        let f = filter_oov(g, &store);
        if f.questions.is_empty() {
            warn!("group {} ({}): no in-vocabulary questions", g.index, g.name);
            continue;
        }
        for (line, p) in &programs {
            outcome.rows.push(EvalRow {
                line: *line,
                program: p.to_string(),
                group_index: g.index,
                group_name: g.name.clone(),
                questions: f.questions.len(),
                accuracy: evaluate_accuracy(p, &f.questions, &store, &req.scoring)?,
            });
        }
    }
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferRequest {
    /// Searched recursively for `run-*.json` records.
    pub programs_dir: PathBuf,
    pub embeddings: PathBuf,
    pub format: Option<EmbeddingFormat>,
    pub questions: PathBuf,
    pub groups: Vec<String>,
    pub lowercase: bool,
    /// `None` searches the whole vocabulary.
    pub restrict: Option<usize>,
    pub exclude_inputs: bool,
    pub rint: String,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug)]
pub struct TransferOutcome {
    /// Record file of each matrix row.
    pub sources: Vec<PathBuf>,
    pub programs: Vec<(ProgramTree, usize)>,
    pub matrix: TransferMatrix,
    pub matrix_csv: PathBuf,
    pub by_source_csv: PathBuf,
    pub best_csv: PathBuf,
}

fn csv_table(echo: &str, header: Vec<String>, rows: Vec<Vec<String>>) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    write_header_comment(&mut out, "transfer", echo)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

fn transfer_tables(
    req: &TransferRequest,
    programs: &[(ProgramTree, usize)],
    m: &TransferMatrix,
) -> std::io::Result<[Vec<u8>; 3]> {
    let echo = serde_json::to_string(req).expect("request serializes");
    let names = m.groups.iter().map(|g| g.name.clone());
    let accs = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>();

    let header = ["program_index", "source_group", "program"].map(String::from).into_iter().chain(names.clone());
    let mut rows: Vec<Vec<String>> = programs
        .iter()
        .enumerate()
        .map(|(p, (tree, src))| [p.to_string(), src.to_string(), tree.to_string()].into_iter().chain(accs(&m.cells[p])).collect())
        .collect();
    let rule_row = |first: Vec<String>| first.into_iter().chain(accs(&m.rule)).collect::<Vec<_>>();
    rows.push(rule_row(vec!["rule".into(), String::new(), baseline_rule_program().to_string()]));
    let matrix = csv_table(&echo, header.collect(), rows)?;

    // Best program per source group; `*` marks accuracy above the rule.
    let header = std::iter::once("source_group".to_string()).chain(names).collect();
    let mut rows: Vec<Vec<String>> = m
        .best_by_source
        .iter()
        .map(|(src, per_group)| {
            std::iter::once(src.to_string())
                .chain(per_group.iter().enumerate().map(|(g, &(_, acc))| {
                    if acc > m.rule[g] {
                        format!("{acc}*")
                    } else {
                        acc.to_string()
                    }
                }))
                .collect()
        })
        .collect();
    rows.push(rule_row(vec!["rule".into()]));
    let by_source = csv_table(&echo, header, rows)?;

    let header = [
        "group_index", "group_name", "questions", "best_program_index", "source_group", "accuracy", "rule",
        "beats_rule", "program",
    ]
    .map(String::from)
    .to_vec();
    let rows = m
        .groups
        .iter()
        .enumerate()
        .map(|(g, info)| {
            let p = m.best_program[g];
            vec![
                info.index.to_string(),
                info.name.clone(),
                info.questions.to_string(),
                p.to_string(),
                programs[p].1.to_string(),
                m.cells[p][g].to_string(),
                m.rule[g].to_string(),
                m.beats_rule(p, g).to_string(),
                programs[p].0.to_string(),
            ]
        })
        .collect();
    let best = csv_table(&echo, header, rows)?;
    Ok([matrix, by_source, best])
}

/// Scores every stored best program on every group of a second store.
pub fn cmd_transfer(req: &TransferRequest) -> Result<TransferOutcome, Error> {
    let files = find_run_records(&req.programs_dir)?;
    if files.is_empty() {
        return Err(Error::Invalid(format!("no run-*.json records under {}", req.programs_dir.display())));
    }
    let mut programs = Vec::with_capacity(files.len());
    for f in &files {
        let rec = load_run_record(f)?;
        programs.push((rec.best_tree()?, rec.group_index));
    }
    let store = load_store(&req.embeddings, req.format)?;
    let groups = load_groups(&req.questions, req.lowercase, &req.groups)?;
    let params = ScoringParams {
        restrict: req.restrict.unwrap_or(usize::MAX),
        exclude_inputs: req.exclude_inputs,
        rint: crate::manifest::parse_rint(&req.rint).map_err(Error::Invalid)?,
    };
    info!("transfer: {} programs x {} groups", programs.len(), groups.len());
    let matrix = transfer_evaluate(&programs, &store, &groups, &params)?;
    for s in &matrix.skipped {
        warn!("group {} ({}): no in-vocabulary questions, skipped", s.index, s.name);
    }

    create_dir(&req.out_dir)?;
    let [a, b, c] = transfer_tables(req, &programs, &matrix).map_err(|e| Error::io(&req.out_dir, e))?;
    let matrix_csv = req.out_dir.join("transfer-matrix.csv");
    let by_source_csv = req.out_dir.join("transfer-by-source.csv");
    let best_csv = req.out_dir.join("transfer-best.csv");
    write_atomic(&matrix_csv, &a)?;
    write_atomic(&by_source_csv, &b)?;
    write_atomic(&best_csv, &c)?;
    Ok(TransferOutcome { sources: files, programs, matrix, matrix_csv, by_source_csv, best_csv })
}

#[derive(Clone, Debug, PartialEq)]
pub enum NearestQuery {
    Word(String),
    Vector(Vec<f64>),
}

impl std::str::FromStr for NearestQuery {
    type Err = String;

    /// `v:1,0,-2` is a vector, anything else a word.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("v:") {
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("vector component `{x}`: {e}")))
                .collect::<Result<Vec<_>, _>>()
                .map(NearestQuery::Vector),
            None => Ok(NearestQuery::Word(s.to_string())),
        }
    }
}

/// The `k` nearest words to a word or vector.
pub fn cmd_nearest(
    store: &EmbeddingStore,
    query: &NearestQuery,
    k: usize,
    restrict: usize,
    exclude: &[String],
) -> Result<Vec<Neighbor>, Error> {
    let v: &[f64] = match query {
        NearestQuery::Word(w) => store
            .vector_of(w)
            .ok_or_else(|| Error::Invalid(format!("word `{w}` is not in the vocabulary")))?,
        NearestQuery::Vector(v) if v.len() == store.dim() => v,
        NearestQuery::Vector(v) => {
            return Err(Error::Invalid(format!("query has {} components, store has {}", v.len(), store.dim())))
        }
    };
    let exclude: Vec<&str> = exclude.iter().map(String::as_str).collect();
    store
        .nearest_words(v, k, restrict, &exclude)
        .map_err(|e| Error::Invalid(e.to_string()))
}

#[derive(Clone, Debug)]
pub enum PairSource {
    File(PathBuf),
    Generated { groups: usize, pairs: usize },
}

pub fn cmd_synth(source: &PairSource, spec: &SynthSpec, prefix: &Path) -> Result<FixturePaths, Error> {
    let groups = match source {
        PairSource::File(path) => parse_pairs(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
        PairSource::Generated { groups, pairs } => generated_pairs(*groups, *pairs),
    };
    let fixture = synthesize(&groups, spec)?;
    write_fixture(&fixture, prefix).map_err(|e| Error::io(prefix, e))
}

/// Re-aggregates every run record under `dir`, one row per group.
pub fn cmd_report(dir: &Path) -> Result<Vec<GroupAggregate>, Error> {
    let files = find_run_records(dir)?;
    if files.is_empty() {
        return Err(Error::Invalid(format!("no run-*.json records under {}", dir.display())));
    }
    let mut by_group: BTreeMap<usize, Vec<RunRecord>> = BTreeMap::new();
    for f in &files {
        let rec = load_run_record(f)?;
        by_group.entry(rec.group_index).or_default().push(rec);
    }
    by_group
        .values()
        .map(|recs| {
            let s = aggregate_accuracies(recs.iter().map(|r| (r.best_train_accuracy, r.best_test_accuracy)))?;
            Ok(GroupAggregate::new(&recs[0], &s))
        })
        .collect()
}
