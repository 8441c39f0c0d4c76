//! The row tree: a hierarchical view of a document as key-value blocks.
//!
//! Root holds one group per sheet; each group holds one node per row. A row
//! node renders as a marker line plus one `key: value` line per non-empty
//! cell:
//!
//! ```text
//! [row 12 @ default]
//! name: Alice
//! age: 30
//! ```
//!
//! Rows split into fragments carry a `| part <k>/<N>` suffix in the marker.
//! Newlines inside keys, values, and sheet names are flattened to single
//! spaces so a rendered block's line structure is exactly its pair structure.

use std::borrow::Cow;

use crate::ingest::TabularDocument;
use crate::tokens::TokenCount;

/// One non-empty cell as a key-value pair. Values are verbatim cell text;
/// flattening happens at render time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvPair {
    pub key: String,
    pub value: String,
}

/// One row: its pairs plus the rendered block and its token count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowNode {
    pub sheet_name: String,
    /// 0-based data row index within the sheet.
    pub row_index: usize,
    pub pairs: Vec<KvPair>,
    pub rendered: String,
    pub token_count: usize,
}

/// All rows of one sheet, in source order. Merging never crosses groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowGroup {
    pub sheet_name: String,
    pub rows: Vec<RowNode>,
}

/// The full tree for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowTree {
    pub source_id: String,
    pub groups: Vec<RowGroup>,
}

impl RowTree {
    pub fn row_count(&self) -> usize {
        self.groups.iter().map(|g| g.rows.len()).sum()
    }
}

/// Replace newlines (`\r\n`, `\r`, `\n`) with single spaces.
pub fn flatten_newlines(text: &str) -> Cow<'_, str> {
    if !text.contains(['\r', '\n']) {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                out.push(' ');
            }
            '\n' => out.push(' '),
            _ => out.push(c),
        }
    }
    Cow::Owned(out)
}

/// Marker line for a whole row: `[row <i> @ <sheet>]`.
pub fn render_marker(sheet_name: &str, row_index: usize) -> String {
    format!("[row {row_index} @ {}]", flatten_newlines(sheet_name))
}

/// Marker line for fragment `k` of `n`: `[row <i> @ <sheet> | part <k>/<n>]`.
pub fn render_fragment_marker(sheet_name: &str, row_index: usize, k: usize, n: usize) -> String {
    format!(
        "[row {row_index} @ {} | part {k}/{n}]",
        flatten_newlines(sheet_name)
    )
}

/// One `key: value` line, newline-flattened.
pub fn render_pair_line(key: &str, value: &str) -> String {
    format!("{}: {}", flatten_newlines(key), flatten_newlines(value))
}

/// Render a whole-row block: marker line plus pair lines joined with `\n`,
/// no trailing newline.
pub fn render_kv_block(sheet_name: &str, row_index: usize, pairs: &[KvPair]) -> String {
    let mut out = render_marker(sheet_name, row_index);
    for pair in pairs {
        out.push('\n');
        out.push_str(&render_pair_line(&pair.key, &pair.value));
    }
    out
}

/// Build the row tree for a document: one group per sheet, one node per row,
/// pairing each header with its cell and dropping empty cells.
pub fn build_row_tree(doc: &TabularDocument, counter: &dyn TokenCount) -> RowTree {
    let groups = doc
        .sheets
        .iter()
        .map(|sheet| {
            let rows = sheet
                .rows
                .iter()
                .enumerate()
                .map(|(row_index, cells)| {
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
                    let rendered = render_kv_block(&sheet.name, row_index, &pairs);
                    let token_count = counter.count(&rendered);
                    RowNode {
                        sheet_name: sheet.name.clone(),
                        row_index,
                        pairs,
                        rendered,
                        token_count,
                    }
                })
                .collect();
            RowGroup {
                sheet_name: sheet.name.clone(),
                rows,
            }
        })
        .collect();
    RowTree {
        source_id: doc.source_id.clone(),
        groups,
    }
}
