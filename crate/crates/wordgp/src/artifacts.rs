//! Result files written by `evolve` and read back by `transfer` and `report`.
//!
//! Run records are pretty-printed JSON. Logs and aggregates are CSV files
//! whose leading `#` lines carry the manifest that produced them.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wordgp_core::benchmark::RunSummary;
use wordgp_core::evolve::GenerationStats;
use wordgp_core::fitness::EvaluatedProgram;
use wordgp_core::ProgramTree;
use walkdir::WalkDir;

use crate::manifest::ExperimentManifest;
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivorRecord {
    pub program: String,
    pub fitness: f64,
    pub questions_seen: usize,
    pub halted_early: bool,
    pub halted_nonfinite: bool,
}

impl From<&EvaluatedProgram> for SurvivorRecord {
    fn from(p: &EvaluatedProgram) -> Self {
        SurvivorRecord {
            program: p.tree.to_string(),
            fitness: p.fitness,
            questions_seen: p.questions_seen,
            halted_early: p.halted_early,
            halted_nonfinite: p.halted_nonfinite,
        }
    }
}

/// One evolutionary run and the program it selected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub manifest: ExperimentManifest,
    pub group_index: usize,
    pub group_name: String,
    pub run_index: usize,
    pub seed: u64,
    pub split_seed: u64,
    /// Questions in the group before and after OOV filtering.
    pub questions_original: usize,
    pub questions: usize,
    pub train_questions: usize,
    pub test_questions: usize,
    pub generations_completed: usize,
    pub evaluation_count: usize,
    pub best_program: String,
    pub best_train_accuracy: f64,
    pub best_test_accuracy: f64,
    pub rule_train_accuracy: f64,
    pub rule_test_accuracy: f64,
    pub survivors: Vec<SurvivorRecord>,
}

impl RunRecord {
    pub fn best_tree(&self) -> Result<ProgramTree, Error> {
        self.best_program
            .parse()
            .map_err(|e| Error::Invalid(format!("stored program `{}`: {e}", self.best_program)))
    }
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    Error::Json { path: path.to_path_buf(), source: e }
}

/// Writes `bytes` through a temporary sibling so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn to_json_bytes<T: Serialize>(value: &T, path: &Path) -> Result<Vec<u8>, Error> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| json_error(path, e))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn save_run_record(path: &Path, record: &RunRecord) -> Result<(), Error> {
    write_atomic(path, &to_json_bytes(record, path)?)
}

pub fn load_run_record(path: &Path) -> Result<RunRecord, Error> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| json_error(path, e))
}

/// Every `run-*.json` below `dir`, in sorted path order.
pub fn find_run_records(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut found = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(dir, e.into()))?;
        let name = entry.file_name().to_string_lossy();
        if entry.file_type().is_file() && name.starts_with("run-") && name.ends_with(".json") {
            found.push(entry.into_path());
        }
    }
    Ok(found)
}

/// A `#` comment line; CSV readers here skip them.
pub fn write_header_comment<W: Write>(w: &mut W, label: &str, echo: &str) -> io::Result<()> {
    writeln!(w, "# {label} {echo}")
}

/// Serializes `rows` as CSV below any comment lines already in `out`.
pub fn write_csv_rows<T: Serialize>(out: &mut Vec<u8>, rows: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    w.flush()
}

pub fn read_csv_rows<T: for<'de> Deserialize<'de>>(src: &str) -> Result<Vec<T>, csv::Error> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(src.as_bytes())
        .deserialize()
        .collect()
}

#[derive(Serialize)]
struct LogRow {
    generation: usize,
    best: f64,
    mean: f64,
    median: f64,
    evaluations: usize,
    best_program: String,
}

pub fn run_log_bytes(
    manifest: &ExperimentManifest,
    group_index: usize,
    run_index: usize,
    seed: u64,
    trace: &[GenerationStats],
) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    write_header_comment(&mut out, "manifest", &manifest.echo())?;
    writeln!(out, "# group {group_index} run {run_index} seed {seed}")?;
    write_csv_rows(
        &mut out,
        trace.iter().map(|s| LogRow {
            generation: s.generation,
            best: s.best_fitness,
            mean: s.mean_fitness,
            median: s.median_fitness,
            evaluations: s.evaluations,
            best_program: s.best_program.to_string(),
        }),
    )?;
    Ok(out)
}

/// One row of an aggregate table: a group's run summary beside the rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregate {
    pub group_index: usize,
    pub group_name: String,
    /// Questions before and after OOV filtering.
    #[serde(rename = "nq_orig")]
    pub questions_original: usize,
    #[serde(rename = "nq")]
    pub questions: usize,
    pub runs: usize,
    pub train_max: f64,
    pub train_mean: f64,
    pub test_max: f64,
    pub test_mean: f64,
    pub rule_train: f64,
    pub rule_test: f64,
}

impl GroupAggregate {
    pub fn new(record: &RunRecord, summary: &RunSummary) -> Self {
        GroupAggregate {
            group_index: record.group_index,
            group_name: record.group_name.clone(),
            questions_original: record.questions_original,
            questions: record.questions,
            runs: summary.runs,
            train_max: summary.train_max,
            train_mean: summary.train_mean,
            test_max: summary.test_max,
            test_mean: summary.test_mean,
            rule_train: record.rule_train_accuracy,
            rule_test: record.rule_test_accuracy,
        }
    }
}

pub fn aggregate_bytes(echo: Option<&str>, rows: &[GroupAggregate]) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    if let Some(echo) = echo {
        write_header_comment(&mut out, "manifest", echo)?;
    }
    write_csv_rows(&mut out, rows)?;
    Ok(out)
}

pub fn parse_aggregate(src: &str) -> Result<Vec<GroupAggregate>, csv::Error> {
    read_csv_rows(src)
}
