//! word2vec text and binary embedding files.
//!
//! Text: a `<count> <dim>` header line, then `<word> <v1> ... <vdim>` per
//! line. Binary: the same ASCII header, then per word its bytes, one space,
//! `dim` little-endian `f32` values and an optional newline.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use wordgp_core::store::StoreError;
use wordgp_core::EmbeddingStore;

/// Longest word accepted by the binary reader, in bytes.
pub const MAX_WORD_BYTES: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("line {line}: expected {expected} components, found {found}")]
    ComponentCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: `{token}` is not a number")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: duplicate word `{word}`")]
    DuplicateWord { line: usize, word: String },
    #[error("line {line}: {source}")]
    Row { line: usize, source: StoreError },
    #[error("header declares {declared} words but the file holds {found}")]
    WordCount { declared: usize, found: usize },
    #[error("file truncated while reading word {word_index}")]
    Truncated { word_index: usize },
    #[error("word {word_index} is longer than {MAX_WORD_BYTES} bytes")]
    WordTooLong { word_index: usize },
    #[error("word {word_index} is not valid UTF-8")]
    InvalidWord { word_index: usize },
    #[error("word {word_index}: {source}")]
    Word { word_index: usize, source: StoreError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

impl EmbeddingFormat {
    /// `.bin` means binary, anything else text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => EmbeddingFormat::Binary,
            _ => EmbeddingFormat::Text,
        }
    }
}

impl std::str::FromStr for EmbeddingFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(EmbeddingFormat::Text),
            "binary" | "bin" => Ok(EmbeddingFormat::Binary),
            _ => Err(format!("unknown embedding format `{s}` (expected text or binary)")),
        }
    }
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingStore, EmbeddingFileError> {
    match format {
        EmbeddingFormat::Text => load_text_embeddings(path),
        EmbeddingFormat::Binary => load_binary_embeddings(path),
    }
}

fn parse_header(line: &str) -> Result<(usize, usize), EmbeddingFileError> {
    let mut it = line.split_whitespace();
    let bad = || EmbeddingFileError::Header(line.trim_end().to_string());
    let count = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    let dim: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    if it.next().is_some() || dim == 0 {
        return Err(bad());
    }
    Ok((count, dim))
}

pub fn load_text_embeddings(path: &Path) -> Result<EmbeddingStore, EmbeddingFileError> {
    read_text_embeddings(BufReader::new(File::open(path)?))
}

pub fn read_text_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingStore, EmbeddingFileError> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(EmbeddingFileError::Header("empty file".into())),
    };
    let (count, dim) = parse_header(&header)?;
    let mut store = EmbeddingStore::with_capacity(dim, count).expect("dim checked");
    let mut values = Vec::with_capacity(dim);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let word = tokens.next().expect("non-empty line");
        values.clear();
        for token in tokens {
            let v: f64 = token
                .parse()
                .map_err(|_| EmbeddingFileError::NonNumeric { line: line_no, token: token.into() })?;
            values.push(v);
        }
        if values.len() != dim {
            return Err(EmbeddingFileError::ComponentCount { line: line_no, expected: dim, found: values.len() });
        }
        store.push(word, &values).map_err(|e| match e {
            StoreError::DuplicateWord { word, .. } => EmbeddingFileError::DuplicateWord { line: line_no, word },
            source => EmbeddingFileError::Row { line: line_no, source },
        })?;
    }
    if store.len() != count {
        return Err(EmbeddingFileError::WordCount { declared: count, found: store.len() });
    }
    Ok(store)
}

pub fn load_binary_embeddings(path: &Path) -> Result<EmbeddingStore, EmbeddingFileError> {
    read_binary_embeddings(BufReader::new(File::open(path)?))
}

pub fn read_binary_embeddings<R: BufRead>(mut reader: R) -> Result<EmbeddingStore, EmbeddingFileError> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    if header.last() != Some(&b'\n') {
        return Err(EmbeddingFileError::Header(String::from_utf8_lossy(&header).into_owned()));
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| EmbeddingFileError::Header("header is not ASCII".into()))?;
    let (count, dim) = parse_header(header)?;

    let mut store = EmbeddingStore::with_capacity(dim, count).expect("dim checked");
    let mut word = Vec::new();
    let mut raw = vec![0u8; 4 * dim];
    let mut values = vec![0f32; dim];
    for word_index in 0..count {
        word.clear();
        // Records written with a trailing newline leave it in front of the next word.
        if reader.fill_buf()?.first() == Some(&b'\n') {
            reader.consume(1);
        }
        let n = (&mut reader).take(MAX_WORD_BYTES as u64 + 1).read_until(b' ', &mut word)?;
        if word.last() != Some(&b' ') {
            if n > MAX_WORD_BYTES {
                return Err(EmbeddingFileError::WordTooLong { word_index });
            }
            return Err(EmbeddingFileError::Truncated { word_index });
        }
        word.pop();
        let text = std::str::from_utf8(&word)
            .map_err(|_| EmbeddingFileError::InvalidWord { word_index })?;

        reader.read_exact(&mut raw).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => EmbeddingFileError::Truncated { word_index },
            _ => EmbeddingFileError::Io(e),
        })?;
        for (v, bytes) in values.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(bytes.try_into().unwrap());
        }
        store
            .push(text, &values)
            .map_err(|source| EmbeddingFileError::Word { word_index, source })?;
    }
    Ok(store)
}

/// Writes `store` in binary format. Components are narrowed to `f32`, so
/// the round trip is exact for stores loaded from binary files.
pub fn save_binary_embeddings(store: &EmbeddingStore, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_binary_embeddings(store, &mut w)?;
    w.flush()
}

pub fn write_binary_embeddings<W: Write>(store: &EmbeddingStore, w: &mut W) -> io::Result<()> {
    writeln!(w, "{} {}", store.len(), store.dim())?;
    for (row, word) in store.words().iter().enumerate() {
        w.write_all(word.as_bytes())?;
        w.write_all(b" ")?;
        for &v in store.row(row) {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes `store` in text format with shortest round-trip `f64` digits.
pub fn save_text_embeddings(store: &EmbeddingStore, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_text_embeddings(store, &mut w)?;
    w.flush()
}

pub fn write_text_embeddings<W: Write>(store: &EmbeddingStore, w: &mut W) -> io::Result<()> {
    writeln!(w, "{} {}", store.len(), store.dim())?;
    for (row, word) in store.words().iter().enumerate() {
        w.write_all(word.as_bytes())?;
        for v in store.row(row) {
            write!(w, " {v}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}
