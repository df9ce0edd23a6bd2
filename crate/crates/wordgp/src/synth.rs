//! Synthetic embedding spaces with planted constant-offset relations.
//!
//! Every relation group gets one random offset vector; each pair `(x, y)` in
//! the group is placed so that `y = x + offset` (plus optional Gaussian
//! noise). Random distractor words fill out the vocabulary. Questions pair
//! two word pairs of the same group, so `c - a + b` recovers the answer
//! exactly when the noise is zero.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use wordgp_core::{seeded_rng, EmbeddingStore, Question, QuestionGroup};

use crate::embeddings::{save_binary_embeddings, save_text_embeddings};
use crate::questions::write_questions;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("line {line}: expected 2 words, found {found}")]
    PairLine { line: usize, found: usize },
    #[error("word `{0}` appears more than once")]
    DuplicateWord(String),
    #[error("group `{0}` needs at least 2 pairs")]
    TooFewPairs(String),
    #[error("dimension must be positive")]
    ZeroDimension,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairGroup {
    pub name: String,
    pub pairs: Vec<(String, String)>,
}

/// Reads a pairs file: optional `: name` headers and two words per line.
/// Pairs before any header go to a group called `relation`.
pub fn parse_pairs(src: &str) -> Result<Vec<PairGroup>, SynthError> {
    let mut groups: Vec<PairGroup> = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(name) = t.strip_prefix(':') {
            groups.push(PairGroup { name: name.trim().into(), pairs: Vec::new() });
            continue;
        }
        let words: Vec<&str> = t.split_whitespace().collect();
        let [x, y] = words.as_slice() else {
            return Err(SynthError::PairLine { line: i + 1, found: words.len() });
        };
        if groups.is_empty() {
            groups.push(PairGroup { name: "relation".into(), pairs: Vec::new() });
        }
        groups.last_mut().unwrap().pairs.push((x.to_string(), y.to_string()));
    }
    Ok(groups)
}

/// `groups` relations of `pairs` pairs each, named `rel{g}` with words
/// `r{g}a{i}` / `r{g}b{i}`.
pub fn generated_pairs(groups: usize, pairs: usize) -> Vec<PairGroup> {
    (1..=groups)
        .map(|g| PairGroup {
            name: format!("rel{g}"),
            pairs: (0..pairs).map(|i| (format!("r{g}a{i}"), format!("r{g}b{i}"))).collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub dim: usize,
    /// Standard deviation of the per-component noise added to each `y`.
    pub noise: f64,
    pub distractors: usize,
    /// Keep at most this many questions per group.
    pub max_questions: Option<usize>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { dim: 16, noise: 0.0, distractors: 100, max_questions: None, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthFixture {
    pub store: EmbeddingStore,
    pub groups: Vec<QuestionGroup>,
}

fn normal_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn synthesize(pair_groups: &[PairGroup], spec: &SynthSpec) -> Result<SynthFixture, SynthError> {
    if spec.dim == 0 {
        return Err(SynthError::ZeroDimension);
    }
    let mut seen = BTreeSet::new();
    for g in pair_groups {
        if g.pairs.len() < 2 {
            return Err(SynthError::TooFewPairs(g.name.clone()));
        }
        for (x, y) in &g.pairs {
            for w in [x, y] {
                if !seen.insert(w.clone()) {
                    return Err(SynthError::DuplicateWord(w.clone()));
                }
            }
        }
    }

    let mut rng = seeded_rng(spec.seed);
    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    for g in pair_groups {
        let offset = normal_vec(&mut rng, spec.dim);
        for (x, y) in &g.pairs {
            let xv = normal_vec(&mut rng, spec.dim);
            let noise = normal_vec(&mut rng, spec.dim);
            let yv = xv
                .iter()
                .zip(&offset)
                .zip(&noise)
                .map(|((a, o), n)| (a + o + spec.noise * n) as f32)
                .collect();
            rows.push((x.clone(), xv.iter().map(|&v| v as f32).collect()));
            rows.push((y.clone(), yv));
        }
    }
    for i in 0..spec.distractors {
        let name = format!("distractor{i}");
        if seen.contains(&name) {
            return Err(SynthError::DuplicateWord(name));
        }
        rows.push((name, normal_vec(&mut rng, spec.dim).iter().map(|&v| v as f32).collect()));
    }
    rows.shuffle(&mut rng);

    let mut store = EmbeddingStore::with_capacity(spec.dim, rows.len()).expect("dim checked");
    for (word, v) in &rows {
        store.push(word.as_str(), v).expect("unique finite rows");
    }

    let groups = pair_groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let mut qs: Vec<Question> = Vec::new();
            for (i, (a, b)) in g.pairs.iter().enumerate() {
                for (j, (c, d)) in g.pairs.iter().enumerate() {
                    if i != j {
                        qs.push(Question::new(a, b, c, d));
                    }
                }
            }
            qs.shuffle(&mut rng);
            if let Some(m) = spec.max_questions {
                qs.truncate(m);
            }
            QuestionGroup { index: gi + 1, name: g.name.clone(), questions: qs }
        })
        .collect();
    Ok(SynthFixture { store, groups })
}

/// Paths written by [`write_fixture`].
#[derive(Clone, Debug)]
pub struct FixturePaths {
    pub binary: PathBuf,
    pub text: PathBuf,
    pub questions: PathBuf,
}

/// Writes `<prefix>.bin`, `<prefix>.txt` and `<prefix>.questions`.
pub fn write_fixture(fixture: &SynthFixture, prefix: &Path) -> io::Result<FixturePaths> {
    let with_ext = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    let paths = FixturePaths {
        binary: with_ext(".bin"),
        text: with_ext(".txt"),
        questions: with_ext(".questions"),
    };
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_binary_embeddings(&fixture.store, &paths.binary)?;
    save_text_embeddings(&fixture.store, &paths.text)?;
    let mut w = BufWriter::new(File::create(&paths.questions)?);
    write_questions(&mut w, &fixture.groups)?;
    w.flush()?;
    Ok(paths)
}
