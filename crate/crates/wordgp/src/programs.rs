//! Program files: one canonical program per line, `#` comments.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use wordgp_core::program::{parse_program, ParseError};
use wordgp_core::ProgramTree;

/// A program line and its parse result.
#[derive(Debug)]
pub struct ProgramLine {
    pub line: usize,
    pub text: String,
    pub program: Result<ProgramTree, ParseError>,
}

/// Parses every non-blank, non-comment line. Bad lines are reported in place
/// so the rest of the file stays usable.
pub fn read_program_lines(src: &str) -> Vec<ProgramLine> {
    src.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                return None;
            }
            Some(ProgramLine { line: i + 1, text: text.to_string(), program: parse_program(text) })
        })
        .collect()
}

pub fn read_program_file(path: &Path) -> io::Result<Vec<ProgramLine>> {
    Ok(read_program_lines(&fs::read_to_string(path)?))
}

pub fn write_programs<W: Write>(w: &mut W, programs: &[ProgramTree]) -> io::Result<()> {
    for p in programs {
        writeln!(w, "{p}")?;
    }
    Ok(())
}
