//! Experiment manifests: everything needed to replay an `evolve` run.
//!
//! Values come from command-line flags, then from an optional `key = value`
//! config file, then from the defaults. The config file uses the flag names
//! without the leading dashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wordgp_core::{EvolutionConfig, RintMode};

use crate::embeddings::EmbeddingFormat;
use crate::Error;

/// Directory searched for relative embedding and question paths that do not
/// exist relative to the working directory.
pub const DATA_DIR_ENV: &str = "WORDGP_DATA_DIR";

/// Serializable mirror of [`EvolutionConfig`] without the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub population_size: usize,
    pub generations: usize,
    pub survivors: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub depth_limit: usize,
    pub restrict_l: usize,
    pub subset_fraction: f64,
    pub halt_min_questions: usize,
    pub halt_threshold: f64,
    pub exclude_inputs: bool,
    pub rint: String,
    pub cache_fitness: bool,
}

pub fn rint_name(mode: RintMode) -> &'static str {
    match mode {
        RintMode::HalfEven => "half-even",
        RintMode::TowardZero => "toward-zero",
    }
}

pub fn parse_rint(s: &str) -> Result<RintMode, String> {
    match s {
        "half-even" | "even" => Ok(RintMode::HalfEven),
        "toward-zero" | "trunc" => Ok(RintMode::TowardZero),
        _ => Err(format!("unknown rint mode `{s}` (expected half-even or toward-zero)")),
    }
}

impl From<&EvolutionConfig> for ConfigRecord {
    fn from(c: &EvolutionConfig) -> Self {
        ConfigRecord {
            population_size: c.population_size,
            generations: c.generations,
            survivors: c.survivors,
            p_crossover: c.p_crossover,
            p_mutation: c.p_mutation,
            depth_limit: c.depth_limit,
            restrict_l: c.restrict_l,
            subset_fraction: c.subset_fraction,
            halt_min_questions: c.halt_min_questions,
            halt_threshold: c.halt_threshold,
            exclude_inputs: c.exclude_inputs,
            rint: rint_name(c.rint).to_string(),
            cache_fitness: c.cache_fitness,
        }
    }
}

impl ConfigRecord {
    pub fn to_config(&self, seed: u64) -> Result<EvolutionConfig, String> {
        Ok(EvolutionConfig {
            population_size: self.population_size,
            generations: self.generations,
            survivors: self.survivors,
            p_crossover: self.p_crossover,
            p_mutation: self.p_mutation,
            depth_limit: self.depth_limit,
            restrict_l: self.restrict_l,
            subset_fraction: self.subset_fraction,
            halt_min_questions: self.halt_min_questions,
            halt_threshold: self.halt_threshold,
            exclude_inputs: self.exclude_inputs,
            rint: parse_rint(&self.rint)?,
            cache_fitness: self.cache_fitness,
            seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub embeddings: PathBuf,
    pub format: EmbeddingFormat,
    pub questions: PathBuf,
    /// Group indices or names; empty selects every group.
    pub groups: Vec<String>,
    pub lowercase: bool,
    pub config: ConfigRecord,
    pub runs: usize,
    /// Run `i` uses seed `base_seed + i`; the train/test split uses `base_seed`.
    pub base_seed: u64,
    pub out_dir: PathBuf,
}

impl ExperimentManifest {
    pub fn run_seed(&self, run_index: usize) -> u64 {
        self.base_seed.wrapping_add(run_index as u64)
    }

    pub fn split_seed(&self) -> u64 {
        self.base_seed
    }

    /// One-line JSON echo embedded in every artifact.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

/// Manifest fields as given on the command line or in a config file.
#[derive(Clone, Debug, Default, PartialEq, clap::Args)]
pub struct ManifestArgs {
    /// Embedding file (word2vec text or binary).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Embedding file format; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<EmbeddingFormat>,
    /// Analogy question file.
    #[arg(long)]
    pub questions: Option<PathBuf>,
    /// Groups to run, by 1-based index or name (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<String>>,
    /// Lowercase question words (default true).
    #[arg(long)]
    pub lowercase: Option<bool>,
    /// Population size (default 500).
    #[arg(long)]
    pub pop: Option<usize>,
    /// Generations (default 250).
    #[arg(long)]
    pub gens: Option<usize>,
    /// Individuals kept by truncation selection (default 100).
    #[arg(long)]
    pub survivors: Option<usize>,
    /// Crossover probability (default 0.5).
    #[arg(long = "p-cx")]
    pub p_cx: Option<f64>,
    /// Mutation probability (default 0.5).
    #[arg(long = "p-mut")]
    pub p_mut: Option<f64>,
    /// Maximum tree depth (default 10).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Answer candidates are the first this many vocabulary rows (default 30000).
    #[arg(long)]
    pub restrict: Option<usize>,
    /// Fraction of the training questions seen by each fitness evaluation (default 0.2).
    #[arg(long)]
    pub subset: Option<f64>,
    /// Questions seen before early halting may trigger (default 10).
    #[arg(long = "halt-min")]
    pub halt_min: Option<usize>,
    /// Running accuracy below which fitness halts early (default 0.05).
    #[arg(long = "halt-threshold")]
    pub halt_threshold: Option<f64>,
    /// Exclude the three question words from the answer candidates.
    #[arg(long = "exclude-inputs")]
    pub exclude_inputs: Option<bool>,
    /// `half-even` (default) or `toward-zero`.
    #[arg(long)]
    pub rint: Option<String>,
    /// Keep the fitness of individuals untouched by variation.
    #[arg(long)]
    pub cache: Option<bool>,
    /// Independent runs per group (default 30).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default wordgp-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        ManifestArgs { $($f: $a.$f.or($b.$f)),* }
    };
}

impl ManifestArgs {
    /// Fields of `self` win over `other`.
    pub fn or(self, other: ManifestArgs) -> ManifestArgs {
        let a = self;
        let b = other;
        merge_fields!(a, b; embeddings, format, questions, groups, lowercase, pop, gens, survivors,
            p_cx, p_mut, depth, restrict, subset, halt_min, halt_threshold, exclude_inputs, rint,
            cache, runs, seed, out)
    }

    /// Parses a `key = value` config file.
    pub fn from_config_str(src: &str) -> Result<ManifestArgs, String> {
        let mut m = ManifestArgs::default();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| format!("config line {}: `{key}`: {e}", i + 1);
            macro_rules! num {
                () => {
                    Some(value.parse().map_err(|e| bad(&e))?)
                };
            }
            match key {
                "embeddings" => m.embeddings = Some(value.into()),
                "format" => m.format = Some(value.parse().map_err(|e: String| bad(&e))?),
                "questions" => m.questions = Some(value.into()),
                "groups" => m.groups = Some(value.split(',').map(|s| s.trim().to_string()).collect()),
                "lowercase" => m.lowercase = num!(),
                "pop" => m.pop = num!(),
                "gens" => m.gens = num!(),
                "survivors" => m.survivors = num!(),
                "p-cx" => m.p_cx = num!(),
                "p-mut" => m.p_mut = num!(),
                "depth" => m.depth = num!(),
                "restrict" => m.restrict = num!(),
                "subset" => m.subset = num!(),
                "halt-min" => m.halt_min = num!(),
                "halt-threshold" => m.halt_threshold = num!(),
                "exclude-inputs" => m.exclude_inputs = num!(),
                "rint" => m.rint = Some(value.into()),
                "cache" => m.cache = num!(),
                "runs" => m.runs = num!(),
                "seed" => m.seed = num!(),
                "out" => m.out = Some(value.into()),
                _ => return Err(format!("config line {}: unknown key `{key}`", i + 1)),
            }
        }
        Ok(m)
    }

    pub fn from_config_file(path: &Path) -> Result<ManifestArgs, Error> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ManifestArgs::from_config_str(&src).map_err(Error::Invalid)
    }

    /// Fills defaults, resolves input paths and validates the configuration.
    pub fn build(self) -> Result<ExperimentManifest, Error> {
        let d = EvolutionConfig::default();
        let embeddings = resolve_input(
            &self.embeddings.ok_or_else(|| Error::Invalid("--embeddings is required".into()))?,
        )?;
        let questions = resolve_input(
            &self.questions.ok_or_else(|| Error::Invalid("--questions is required".into()))?,
        )?;
        let format = self.format.unwrap_or_else(|| EmbeddingFormat::from_path(&embeddings));
        let rint = match &self.rint {
            Some(s) => parse_rint(s).map_err(Error::Invalid)?,
            None => d.rint,
        };
        let cfg = EvolutionConfig {
            population_size: self.pop.unwrap_or(d.population_size),
            generations: self.gens.unwrap_or(d.generations),
            survivors: self.survivors.unwrap_or(d.survivors),
            p_crossover: self.p_cx.unwrap_or(d.p_crossover),
            p_mutation: self.p_mut.unwrap_or(d.p_mutation),
            depth_limit: self.depth.unwrap_or(d.depth_limit),
            restrict_l: self.restrict.unwrap_or(d.restrict_l),
            subset_fraction: self.subset.unwrap_or(d.subset_fraction),
            halt_min_questions: self.halt_min.unwrap_or(d.halt_min_questions),
            halt_threshold: self.halt_threshold.unwrap_or(d.halt_threshold),
            exclude_inputs: self.exclude_inputs.unwrap_or(d.exclude_inputs),
            rint,
            cache_fitness: self.cache.unwrap_or(d.cache_fitness),
            seed: 0,
        };
        cfg.validate().map_err(|e| Error::Invalid(e.to_string()))?;
        let runs = self.runs.unwrap_or(30);
        if runs == 0 {
            return Err(Error::Invalid("--runs must be positive".into()));
        }
        Ok(ExperimentManifest {
            embeddings,
            format,
            questions,
            groups: self.groups.unwrap_or_default(),
            lowercase: self.lowercase.unwrap_or(true),
            config: ConfigRecord::from(&cfg),
            runs,
            base_seed: self.seed.unwrap_or(0),
            out_dir: self.out.unwrap_or_else(|| PathBuf::from("wordgp-out")),
        })
    }
}

/// Makes an input path absolute, falling back to [`DATA_DIR_ENV`] for
/// relative paths missing from the working directory.
pub fn resolve_input(path: &Path) -> Result<PathBuf, Error> {
    let candidate = if path.is_relative() && !path.exists() {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => Path::new(&dir).join(path),
            None => path.to_path_buf(),
        }
    } else {
        path.to_path_buf()
    };
    fs::canonicalize(&candidate).map_err(|e| Error::io(&candidate, e))
}
