//! In-memory word-embedding space with restricted cosine search.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum StoreError {
    /// A vector's length differs from the store dimension.
    WrongDimension { row: usize, expected: usize, found: usize },
    DuplicateWord { row: usize, word: String },
    NonFiniteComponent { row: usize },
    NonFiniteQuery,
    ZeroDimension,
}

impl fmt::Display for StoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreError::WrongDimension { row, expected, found } => {
                write!(f, "row {row}: expected {expected} components, found {found}")
            }
            StoreError::DuplicateWord { row, word } => write!(f, "row {row}: duplicate word `{word}`"),
            StoreError::NonFiniteComponent { row } => write!(f, "row {row}: non-finite component"),
            StoreError::NonFiniteQuery => f.write_str("query vector has a non-finite component"),
            StoreError::ZeroDimension => f.write_str("dimension must be positive"),
        }
    }
}

impl core::error::Error for StoreError {}

/// A search hit.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub row: usize,
    pub word: String,
    pub score: f64,
}

/// A frequency-ordered vocabulary with raw and unit-normalised vectors.
///
/// Row 0 is the most frequent word. The store is immutable once built and
/// can be shared freely between threads.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f64>,
    unit_vectors: Vec<f64>,
    word_index: BTreeMap<String, usize>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(v: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let norm = libm::sqrt(dot(v, v));
    v.iter().map(move |&x| if norm == 0.0 { 0.0 } else { x / norm })
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, StoreError> {
        Self::with_capacity(dim, 0)
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::ZeroDimension);
        }
        Ok(EmbeddingStore {
            dim,
            words: Vec::with_capacity(rows),
            vectors: Vec::with_capacity(rows * dim),
            unit_vectors: Vec::with_capacity(rows * dim),
            word_index: BTreeMap::new(),
        })
    }

    /// Builds a store from `(word, vector)` rows in frequency order.
    pub fn from_rows<I, W>(dim: usize, rows: I) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = (W, Vec<f64>)>,
        W: Into<String>,
    {
        let mut store = Self::new(dim)?;
        for (word, v) in rows {
            store.push(word, &v)?;
        }
        Ok(store)
    }

    /// Appends a row. The vector may be any float type that widens to `f64`.
    pub fn push<W: Into<String>, T: Copy + Into<f64>>(
        &mut self,
        word: W,
        vector: &[T],
    ) -> Result<(), StoreError> {
        let row = self.words.len();
        let word = word.into();
        if vector.len() != self.dim {
            return Err(StoreError::WrongDimension { row, expected: self.dim, found: vector.len() });
        }
        if self.word_index.contains_key(&word) {
            return Err(StoreError::DuplicateWord { row, word });
        }
        let start = self.vectors.len();
        self.vectors.extend(vector.iter().map(|&x| x.into()));
        if !self.vectors[start..].iter().all(|x| x.is_finite()) {
            self.vectors.truncate(start);
            return Err(StoreError::NonFiniteComponent { row });
        }
        let raw = &self.vectors[start..];
        self.unit_vectors.extend(unit(raw));
        self.word_index.insert(word.clone(), row);
        self.words.push(word);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, row: usize) -> &str {
        &self.words[row]
    }

    /// Raw vector of a row.
    pub fn row(&self, row: usize) -> &[f64] {
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    pub fn unit_row(&self, row: usize) -> &[f64] {
        &self.unit_vectors[row * self.dim..(row + 1) * self.dim]
    }

    /// Exact, case-sensitive lookup.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.word_index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.word_index.contains_key(word)
    }

    /// Raw vector of `word`, or `None` when it is out of vocabulary.
    pub fn vector_of(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|r| self.row(r))
    }

    /// The `k` best rows by cosine similarity among the first `restrict`
    /// rows, skipping `exclude`. Ties go to the lower row.
    ///
    /// `restrict` is clamped to the vocabulary size. An all-zero query
    /// scores 0 against every row.
    pub fn nearest_rows(
        &self,
        query: &[f64],
        k: usize,
        restrict: usize,
        exclude: &[usize],
    ) -> Result<Vec<(usize, f64)>, StoreError> {
        assert_eq!(query.len(), self.dim, "query dimension");
        if !query.iter().all(|x| x.is_finite()) {
            return Err(StoreError::NonFiniteQuery);
        }
        let q: Vec<f64> = unit(query).collect();
        let limit = restrict.min(self.len());
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k == 0 {
            return Ok(best);
        }
        for row in 0..limit {
            if exclude.contains(&row) {
                continue;
            }
            let score = dot(self.unit_row(row), &q);
            // Rows arrive in increasing order, so an equal score never displaces.
            if best.len() == k && score <= best[k - 1].1 {
                continue;
            }
            let pos = best.iter().position(|&(_, s)| score > s).unwrap_or(best.len());
            best.insert(pos, (row, score));
            best.truncate(k);
        }
        Ok(best)
    }

    /// Word-level wrapper over [`nearest_rows`](Self::nearest_rows).
    /// Excluded words that are not in the vocabulary are ignored.
    pub fn nearest_words(
        &self,
        query: &[f64],
        k: usize,
        restrict: usize,
        exclude: &[&str],
    ) -> Result<Vec<Neighbor>, StoreError> {
        let rows: Vec<usize> = exclude.iter().filter_map(|w| self.index_of(w)).collect();
        Ok(self
            .nearest_rows(query, k, restrict, &rows)?
            .into_iter()
            .map(|(row, score)| Neighbor { row, word: self.words[row].clone(), score })
            .collect())
    }
}
