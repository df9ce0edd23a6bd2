//! The analogy question file: `: <group name>` header lines followed by
//! four-word question lines.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use wordgp_core::{Question, QuestionGroup};

#[derive(Debug, thiserror::Error)]
pub enum QuestionFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: expected 4 words, found {found}")]
    TokenCount { line: usize, found: usize },
    #[error("line {line}: question before any `: group` header")]
    NoGroup { line: usize },
}

pub fn parse_questions(path: &Path, lowercase: bool) -> Result<Vec<QuestionGroup>, QuestionFileError> {
    read_questions(BufReader::new(File::open(path)?), lowercase)
}

pub fn read_questions<R: BufRead>(reader: R, lowercase: bool) -> Result<Vec<QuestionGroup>, QuestionFileError> {
    let mut groups: Vec<QuestionGroup> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix(':') {
            groups.push(QuestionGroup {
                index: groups.len() + 1,
                name: name.trim().to_string(),
                questions: Vec::new(),
            });
            continue;
        }
        let words: Vec<String> = trimmed
            .split_whitespace()
            .map(|w| if lowercase { w.to_lowercase() } else { w.to_string() })
            .collect();
        let [a, b, c, d] = words.as_slice() else {
            return Err(QuestionFileError::TokenCount { line: line_no, found: words.len() });
        };
        let group = groups.last_mut().ok_or(QuestionFileError::NoGroup { line: line_no })?;
        group.questions.push(Question::new(a, b, c, d));
    }
    Ok(groups)
}

pub fn write_questions<W: Write>(w: &mut W, groups: &[QuestionGroup]) -> io::Result<()> {
    for g in groups {
        writeln!(w, ": {}", g.name)?;
        for q in &g.questions {
            writeln!(w, "{q}")?;
        }
    }
    Ok(())
}

/// Picks groups by 1-based index or by name. An empty selector keeps all.
pub fn select_groups(groups: &[QuestionGroup], selector: &[String]) -> Result<Vec<QuestionGroup>, String> {
    if selector.is_empty() || selector.iter().any(|s| s == "all") {
        return Ok(groups.to_vec());
    }
    selector
        .iter()
        .map(|s| {
            groups
                .iter()
                .find(|g| s.parse::<usize>().map_or(g.name == *s, |i| g.index == i))
                .cloned()
                .ok_or_else(|| format!("no question group matches `{s}`"))
        })
        .collect()
}
