//! File helpers shared by the subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crosstalk::corpus::{read_pairs, UtterancePair};
use crosstalk::error::read_to_string;
use crosstalk::{join_tokens, split_tokens, Error, Result, Tokens};

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

/// Inputs as pairs: `.jsonl` pair files keep their context and reference,
/// anything else is one tokenized utterance per line.
pub fn read_inputs(path: &Path) -> Result<Vec<UtterancePair>> {
    if is_jsonl(path) {
        return read_pairs(path);
    }
    Ok(read_to_string(path)?
        .lines()
        .map(|line| UtterancePair {
            source: split_tokens(line),
            reference: Tokens::new(),
            dialogue_id: String::new(),
            turn_index: 0,
            context: Vec::new(),
        })
        .collect())
}

/// References from a pair file, or one tokenized sentence per line.
pub fn read_references(path: &Path) -> Result<Vec<Tokens>> {
    if is_jsonl(path) {
        return Ok(read_pairs(path)?.into_iter().map(|p| p.reference).collect());
    }
    read_lines(path)
}

pub fn read_lines(path: &Path) -> Result<Vec<Tokens>> {
    Ok(read_to_string(path)?.lines().map(split_tokens).collect())
}

/// Creates `path` (and its parent directories) and hands a buffered writer to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let wrap = |e| Error::io(path, e);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}

pub fn write_token_lines(path: &Path, lines: &[Tokens]) -> Result<()> {
    write_file(path, |w| {
        for l in lines {
            writeln!(w, "{}", join_tokens(l))?;
        }
        Ok(())
    })
}
