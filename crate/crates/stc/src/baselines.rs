//! Baseline chunkers that ignore table structure.
//!
//! Both baselines flatten the document to one string and run recursive
//! character splitting over it:
//!
//! * **Recursive** ([`linearize_raw`]): the document as CSV text; sheets
//!   after the first are introduced by `\n\n# sheet: <name>\n`.
//! * **KV+Recursive** ([`linearize_kv`]): every row rendered as its
//!   marker + `key: value` block, blocks joined by `\n\n` — the same text
//!   STC produces, but split with no knowledge of block boundaries.
//!
//! [`split_text`] splits on a separator ladder (paragraph, line, space,
//! character), keeping each separator attached to the piece before it so the
//! pieces concatenate back to the input. Pieces are then packed into chunks
//! of at most `chunk_size_tokens`, and each chunk after the first starts with
//! a verbatim suffix of its predecessor of up to `overlap_tokens` tokens,
//! shortened when the next piece leaves less room but never below one token:
//! a nonzero overlap always shares something across a budget-limited
//! boundary. Token accounting while packing sums per-piece counts, which for
//! the built-in schemes never undercounts the joined text, so chunks stay
//! within size except when a piece alone fills the whole budget — the
//! mandatory one-token overlap then pushes that chunk one token over.

use std::time::Instant;

use crate::chunker::{next_char_boundary, Budget, Chunk, Strategy};
use crate::ingest::TabularDocument;
use crate::metrics::{self, ChunkReport};
use crate::row_tree::{render_kv_block, KvPair};
use crate::tokens::TokenCount;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecursiveSplitConfig {
    pub chunk_size_tokens: usize,
    pub overlap_tokens: usize,
    /// Tried in order; an empty string means "split between characters" and
    /// should come last. Splitting keeps the separator on the preceding piece.
    pub separators: Vec<String>,
}

impl Default for RecursiveSplitConfig {
    fn default() -> Self {
        RecursiveSplitConfig {
            chunk_size_tokens: 512,
            overlap_tokens: 100,
            separators: default_separators(),
        }
    }
}

pub fn default_separators() -> Vec<String> {
    vec!["\n\n".to_string(), "\n".to_string(), " ".to_string(), String::new()]
}

/// One assembled chunk: `text` starts with `seed_bytes` bytes of overlap
/// carried over from the previous chunk, so stripping every chunk's seed and
/// concatenating the remainders restores the input exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitChunk {
    pub text: String,
    pub seed_bytes: usize,
}

/// Recursively split `text` and pack the pieces into overlapping chunks.
pub fn split_text(
    text: &str,
    config: &RecursiveSplitConfig,
    counter: &dyn TokenCount,
) -> Vec<SplitChunk> {
    let size = config.chunk_size_tokens.max(1);
    let mut pieces = Vec::new();
    collect_pieces(text, &config.separators, size, counter, &mut pieces);

    let mut chunks: Vec<SplitChunk> = Vec::new();
    let mut cur = String::new();
    let mut cur_seed_bytes = 0usize;
    let mut cur_sum = 0usize;
    let mut has_content = false;
    for piece in pieces {
        let piece_tokens = counter.count(piece);
        if has_content && cur_sum + piece_tokens > size {
            let closed = std::mem::take(&mut cur);
            let (seed, seed_tokens) = if config.overlap_tokens == 0 {
                (String::new(), 0)
            } else {
                // leave room for the piece that forced the close
                let limit = config.overlap_tokens.min(size.saturating_sub(piece_tokens));
                let mut start = largest_suffix_start(&closed, limit, counter);
                let mut seed_tokens = counter.count(&closed[start..]);
                if seed_tokens == 0 {
                    // A budget-limited boundary must still share one token
                    // with the previous chunk even when the next piece
                    // leaves no room; the receiving chunk may run over
                    // size by that token.
                    start = smallest_token_suffix_start(&closed, counter);
                    seed_tokens = counter.count(&closed[start..]);
                }
                (closed[start..].to_string(), seed_tokens)
            };
            chunks.push(SplitChunk {
                text: closed,
                seed_bytes: cur_seed_bytes,
            });
            cur_seed_bytes = seed.len();
            cur_sum = seed_tokens;
            cur = seed;
        }
        cur.push_str(piece);
        cur_sum += piece_tokens;
        has_content = true;
    }
    if has_content {
        chunks.push(SplitChunk {
            text: cur,
            seed_bytes: cur_seed_bytes,
        });
    }
    chunks
}

/// Split `text` into pieces no larger than `size`, trying each separator in
/// turn and falling back to single characters. Pieces concatenate to `text`.
fn collect_pieces<'a>(
    text: &'a str,
    separators: &[String],
    size: usize,
    counter: &dyn TokenCount,
    out: &mut Vec<&'a str>,
) {
    if text.is_empty() {
        return;
    }
    if counter.count(text) <= size {
        out.push(text);
        return;
    }
    let Some(sep) = separators.first() else {
        // nothing left to split by; emit whole rather than lose text
        out.push(text);
        return;
    };
    if sep.is_empty() {
        let mut rest = text;
        while !rest.is_empty() {
            let end = next_char_boundary(rest, 0);
            out.push(&rest[..end]);
            rest = &rest[end..];
        }
        return;
    }
    let mut last = 0;
    for (start, _) in text.match_indices(sep.as_str()) {
        let end = start + sep.len();
        collect_pieces(&text[last..end], &separators[1..], size, counter, out);
        last = end;
    }
    if last == 0 {
        // separator absent; move down the ladder
        collect_pieces(text, &separators[1..], size, counter, out);
    } else if last < text.len() {
        collect_pieces(&text[last..], &separators[1..], size, counter, out);
    }
}

/// Byte offset where the largest suffix of `text` with at most `max_tokens`
/// tokens starts. Assumes prepending characters never lowers the count,
/// which holds for the built-in schemes.
fn largest_suffix_start(text: &str, max_tokens: usize, counter: &dyn TokenCount) -> usize {
    if counter.count(text) <= max_tokens {
        return 0;
    }
    // invariant: the suffix at `lo` exceeds max_tokens, the one at `hi` fits
    let mut lo = 0usize;
    let mut hi = text.len();
    while hi - lo > 4 {
        let mid = crate::chunker::floor_char_boundary(text, lo + (hi - lo) / 2);
        if mid <= lo {
            break;
        }
        if counter.count(&text[mid..]) <= max_tokens {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut i = next_char_boundary(text, lo);
    while i < hi && counter.count(&text[i..]) > max_tokens {
        i = next_char_boundary(text, i);
    }
    i
}

/// Byte offset of the smallest suffix of `text` that still counts at least
/// one token, or `text.len()` when the whole text counts zero.
fn smallest_token_suffix_start(text: &str, counter: &dyn TokenCount) -> usize {
    if counter.count(text) == 0 {
        return text.len();
    }
    // invariant: the suffix at `lo` has a token, the one at `hi` has none
    let mut lo = 0usize;
    let mut hi = text.len();
    while hi - lo > 1 {
        let mut mid = crate::chunker::floor_char_boundary(text, lo + (hi - lo) / 2);
        if mid <= lo {
            mid = next_char_boundary(text, lo);
            if mid >= hi {
                break;
            }
        }
        if counter.count(&text[mid..]) >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// The document as CSV text: header line then rows, RFC 4180 quoting with a
/// comma delimiter regardless of the input delimiter. Sheets after the first
/// are prefixed with `\n\n# sheet: <name>\n`.
pub fn linearize_raw(doc: &TabularDocument) -> String {
    let mut out = String::new();
    for (sheet_index, sheet) in doc.sheets.iter().enumerate() {
        if sheet_index > 0 {
            out.push_str("\n\n# sheet: ");
            out.push_str(&sheet.name);
            out.push('\n');
        }
        push_csv_line(&mut out, sheet.headers.iter().map(String::as_str));
        for row in &sheet.rows {
            out.push('\n');
            push_csv_line(&mut out, row.iter().map(|c| c.as_str()));
        }
    }
    out
}

fn push_csv_line<'a>(out: &mut String, fields: impl Iterator<Item = &'a str>) {
    for (i, field) in fields.enumerate() {
        if i > 0 {
            out.push(',');
        }
        if field.contains(['"', ',', '\n', '\r']) {
            out.push('"');
            for ch in field.chars() {
                if ch == '"' {
                    out.push('"');
                }
                out.push(ch);
            }
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
}

/// Every row rendered as its `[row i @ sheet]` + `key: value` block, blocks
/// joined by `\n\n` across all sheets.
pub fn linearize_kv(doc: &TabularDocument) -> String {
    let mut blocks: Vec<String> = Vec::new();
    for sheet in &doc.sheets {
        for (row_index, cells) in sheet.rows.iter().enumerate() {
            let pairs: Vec<KvPair> = sheet
                .headers
                .iter()
                .zip(cells)
                .filter(|(_, cell)| !cell.is_empty())
                .map(|(header, cell)| KvPair {
                    key: header.clone(),
                    value: cell.0.clone(),
                })
                .collect();
            blocks.push(render_kv_block(&sheet.name, row_index, &pairs));
        }
    }
    blocks.join("\n\n")
}

/// Linearize and split `doc` with the given baseline strategy. The elapsed
/// time covers linearization, splitting, and chunk construction.
pub fn run_baseline(
    doc: &TabularDocument,
    strategy: Strategy,
    config: &RecursiveSplitConfig,
    counter: &dyn TokenCount,
) -> (Vec<Chunk>, ChunkReport) {
    let budget = Budget::new(config.chunk_size_tokens).expect("chunk size must be at least 1");
    let start = Instant::now();
    let text = match strategy {
        Strategy::Recursive => linearize_raw(doc),
        Strategy::KvRecursive => linearize_kv(doc),
        Strategy::Stc => panic!("run_baseline covers the linearizing baselines, not stc"),
    };
    let chunks: Vec<Chunk> = split_text(&text, config, counter)
        .into_iter()
        .enumerate()
        .map(|(chunk_index, piece)| {
            let token_count = counter.count(&piece.text);
            Chunk {
                text: piece.text,
                token_count,
                source_id: doc.source_id.clone(),
                sheet_name: None,
                row_first: None,
                row_last: None,
                fragment: None,
                strategy,
                chunk_index,
                oversized: token_count > budget.get(),
            }
        })
        .collect();
    let elapsed = start.elapsed();
    let report = metrics::report(
        &chunks,
        budget,
        elapsed,
        strategy,
        &doc.source_id,
        counter.name(),
    );
    (chunks, report)
}
