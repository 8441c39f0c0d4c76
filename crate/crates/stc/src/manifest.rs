//! JSONL chunk manifests: one JSON object per line, stable field order
//! (`chunk_index`, `strategy`, `source_id`, `sheet`, `row_first`,
//! `row_last`, `fragment`, `tokens`, `oversized`, `text`), no trailing
//! whitespace beyond the newline after each line. Writing the same chunks
//! always produces byte-identical output.

use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{Chunk, Strategy};

/// One manifest line. Field order here is the wire order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLine {
    pub chunk_index: usize,
    pub strategy: Strategy,
    pub source_id: String,
    pub sheet: Option<String>,
    pub row_first: Option<usize>,
    pub row_last: Option<usize>,
    pub fragment: Option<String>,
    pub tokens: usize,
    pub oversized: bool,
    pub text: String,
}

impl From<&Chunk> for ManifestLine {
    fn from(chunk: &Chunk) -> ManifestLine {
        ManifestLine {
            chunk_index: chunk.chunk_index,
            strategy: chunk.strategy,
            source_id: chunk.source_id.clone(),
            sheet: chunk.sheet_name.clone(),
            row_first: chunk.row_first,
            row_last: chunk.row_last,
            fragment: chunk.fragment.clone(),
            tokens: chunk.token_count,
            oversized: chunk.oversized,
            text: chunk.text.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_manifest(chunks: &[Chunk], mut out: impl Write) -> io::Result<()> {
    for chunk in chunks {
        serde_json::to_writer(&mut out, &ManifestLine::from(chunk))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn manifest_to_string(chunks: &[Chunk]) -> String {
    let mut out = Vec::new();
    write_manifest(chunks, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// Parse a manifest, skipping blank lines. Errors carry 1-based line numbers.
pub fn read_manifest(reader: impl BufRead) -> Result<Vec<ManifestLine>, ManifestError> {
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str(&line).map_err(|e| ManifestError::Line {
            line: i + 1,
            msg: e.to_string(),
        })?;
        lines.push(parsed);
    }
    Ok(lines)
}

pub fn read_manifest_path(path: &Path) -> Result<Vec<ManifestLine>, ManifestError> {
    let file = std::fs::File::open(path)?;
    read_manifest(io::BufReader::new(file))
}
