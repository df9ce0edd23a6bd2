use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::info;
use wordgp::commands::{
    cmd_eval, cmd_evolve, cmd_nearest, cmd_report, cmd_synth, cmd_transfer, load_store, EvalRequest,
    EvolveOptions, NearestQuery, PairSource, ProgramSource, TransferRequest,
};
use wordgp::artifacts::aggregate_bytes;
use wordgp::embeddings::EmbeddingFormat;
use wordgp::manifest::{parse_rint, resolve_input, ManifestArgs};
use wordgp::synth::SynthSpec;
use wordgp::Error;
use wordgp_core::ScoringParams;

#[derive(Parser)]
#[command(name = "wordgp", version, about = "Evolve vector composition programs for word analogies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DataArgs {
    /// Embedding file (word2vec text or binary).
    #[arg(long)]
    embeddings: PathBuf,
    /// Embedding file format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<EmbeddingFormat>,
    /// Analogy question file.
    #[arg(long)]
    questions: PathBuf,
    /// Groups to use, by 1-based index or name (comma separated).
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve programs for each selected question group.
    Evolve {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// `key = value` file with defaults for the flags above.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads (default: one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Keep finished runs from an interrupted invocation.
        #[arg(long)]
        resume: bool,
    },
    /// Accuracy of each program in a file, or of the baseline rule.
    Eval {
        /// One program per line.
        #[arg(required_unless_present = "rule")]
        programs: Option<PathBuf>,
        /// Evaluate add(ARG2,sub(ARG1,ARG0)).
        #[arg(long, conflicts_with = "programs")]
        rule: bool,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        lowercase: bool,
        #[arg(long, default_value_t = 30_000)]
        restrict: usize,
        #[arg(long = "exclude-inputs", default_value_t = true, action = clap::ArgAction::Set)]
        exclude_inputs: bool,
        #[arg(long, default_value = "half-even")]
        rint: String,
        /// Also write the CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score stored best programs on a second embedding store.
    Transfer {
        /// Directory searched for run-*.json records.
        programs: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
        lowercase: bool,
        /// Candidate words (default: the whole vocabulary).
        #[arg(long)]
        restrict: Option<usize>,
        #[arg(long = "exclude-inputs", default_value_t = true, action = clap::ArgAction::Set)]
        exclude_inputs: bool,
        #[arg(long, default_value = "half-even")]
        rint: String,
        #[arg(long, default_value = "transfer-out")]
        out: PathBuf,
    },
    /// Nearest words to a word or to `v:x1,x2,...`.
    Nearest {
        query: NearestQuery,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        format: Option<EmbeddingFormat>,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        #[arg(short, long, default_value_t = usize::MAX, hide_default_value = true)]
        l: usize,
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
    },
    /// Write a synthetic store with planted constant-offset relations.
    Synth {
        /// Pairs file; without it, --groups and --pairs generate word names.
        #[arg(long)]
        pairs_file: Option<PathBuf>,
        /// Number of generated relations.
        #[arg(long, default_value_t = 1)]
        groups: usize,
        /// Word pairs per generated relation.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        /// Vector dimension.
        #[arg(long, default_value_t = 16)]
        dim: usize,
        /// Standard deviation of the noise added to each answer vector.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Random words added to the vocabulary.
        #[arg(long, default_value_t = 100)]
        distractors: usize,
        /// Keep at most this many questions per group.
        #[arg(long)]
        max_questions: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes .bin, .txt and .questions files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate the run records under a directory.
    Report {
        dir: PathBuf,
    },
}

fn scoring(restrict: usize, exclude_inputs: bool, rint: &str) -> Result<ScoringParams, Error> {
    Ok(ScoringParams { restrict, exclude_inputs, rint: parse_rint(rint).map_err(Error::Invalid)? })
}

fn stdout_error(e: io::Error) -> Error {
    Error::io("<stdout>".as_ref(), e)
}

fn write_stdout(bytes: &[u8]) -> Result<(), Error> {
    io::stdout().write_all(bytes).map_err(stdout_error)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Evolve { manifest, config, jobs, resume } => {
            let args = match config {
                Some(path) => manifest.or(ManifestArgs::from_config_file(&path)?),
                None => manifest,
            };
            let manifest = args.build()?;
            let start = Instant::now();
            let outcome = cmd_evolve(&manifest, &EvolveOptions { resume, jobs })?;
            info!("finished in {:.1}s", start.elapsed().as_secs_f64());
            let rows: Vec<_> = outcome.groups.iter().map(|g| g.aggregate.clone()).collect();
            write_stdout(&aggregate_bytes(None, &rows).map_err(stdout_error)?)
        }
        Command::Eval { programs, rule, data, lowercase, restrict, exclude_inputs, rint, out } => {
            let req = EvalRequest {
                programs: match (rule, programs) {
                    (true, _) | (false, None) => ProgramSource::Rule,
                    (false, Some(p)) => ProgramSource::File(p),
                },
                embeddings: resolve_input(&data.embeddings)?,
                format: data.format,
                questions: resolve_input(&data.questions)?,
                groups: data.groups,
                lowercase,
                scoring: scoring(restrict, exclude_inputs, &rint)?,
            };
            let outcome = cmd_eval(&req)?;
            let csv = outcome.csv_bytes().map_err(stdout_error)?;
            if let Some(path) = out {
                wordgp::artifacts::write_atomic(&path, &csv)?;
            }
            write_stdout(&csv)?;
            match outcome.errors.as_slice() {
                [] => Ok(()),
                errs => {
                    let msgs: Vec<String> = errs.iter().map(|(l, m)| format!("line {l}: {m}")).collect();
                    Err(Error::Invalid(format!("bad program lines: {}", msgs.join("; "))))
                }
            }
        }
        Command::Transfer { programs, data, lowercase, restrict, exclude_inputs, rint, out } => {
            let req = TransferRequest {
                programs_dir: programs,
                embeddings: resolve_input(&data.embeddings)?,
                format: data.format,
                questions: resolve_input(&data.questions)?,
                groups: data.groups,
                lowercase,
                restrict,
                exclude_inputs,
                rint,
                out_dir: out,
            };
            let outcome = cmd_transfer(&req)?;
            let by_source = std::fs::read(&outcome.by_source_csv).map_err(|e| Error::io(&outcome.by_source_csv, e))?;
            write_stdout(&by_source)
        }
        Command::Nearest { query, embeddings, format, k, l, exclude } => {
            let store = load_store(&resolve_input(&embeddings)?, format)?;
            let hits = cmd_nearest(&store, &query, k, l, &exclude)?;
            let mut out = String::new();
            for h in hits {
                out.push_str(&format!("{}\t{:.6}\n", h.word, h.score));
            }
            write_stdout(out.as_bytes())
        }
        Command::Synth { pairs_file, groups, pairs, dim, noise, distractors, max_questions, seed, out } => {
            let source = match pairs_file {
                Some(p) => PairSource::File(p),
                None => PairSource::Generated { groups, pairs },
            };
            let spec = SynthSpec { dim, noise, distractors, max_questions, seed };
            let paths = cmd_synth(&source, &spec, &out)?;
            write_stdout(
                format!("{}\n{}\n{}\n", paths.binary.display(), paths.text.display(), paths.questions.display())
                    .as_bytes(),
            )
        }
        Command::Report { dir } => {
            let rows = cmd_report(&dir)?;
            write_stdout(&aggregate_bytes(None, &rows).map_err(stdout_error)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
