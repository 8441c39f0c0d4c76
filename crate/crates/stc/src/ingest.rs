//! Parsing tabular inputs into a common document model.
//!
//! Three front ends produce the same [`TabularDocument`]: strict RFC 4180 CSV
//! (configurable delimiter, optional header row), a multi-sheet workbook JSON
//! format, and a convenience loader for MAUD-style QA CSVs that additionally
//! extracts per-row question/answer records for retrieval evaluation.
//!
//! Parsing is strict about structure (malformed quoting, unknown workbook
//! keys, and over-wide rows are errors) and forgiving about content: short
//! rows are padded with empty cells, empty lines become all-empty rows, and
//! cell text is preserved verbatim.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One cell value with all format-level escaping already resolved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cell(pub String);

impl Cell {
    pub fn new(value: impl Into<String>) -> Self {
        Cell(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&str> for Cell {
    fn from(value: &str) -> Self {
        Cell(value.to_string())
    }
}

/// A named grid of cells. Every row has exactly `headers.len()` cells and
/// header names are non-empty and unique (see [`normalize_headers`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sheet {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// A parsed document: one sheet for CSV, one or more for workbooks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabularDocument {
    /// File path or logical name; carried through to chunk provenance.
    pub source_id: String,
    pub sheets: Vec<Sheet>,
}

impl TabularDocument {
    pub fn row_count(&self) -> usize {
        self.sheets.iter().map(|s| s.rows.len()).sum()
    }
}

/// CSV parsing options.
#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: char,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: ',',
            has_header: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("input is empty")]
    EmptyInput,
    #[error("sheet `{sheet}` row {row}: {width} cells but the sheet has {expected} columns")]
    RowWidth {
        sheet: String,
        row: usize,
        width: usize,
        expected: usize,
    },
    #[error("input is not valid UTF-8: {0}")]
    Utf8(#[from] std::str::Utf8Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("duplicate sheet name `{0}`")]
    DuplicateSheet(String),
    #[error("missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse CSV bytes into a single-sheet document named `default`.
///
/// Strict RFC 4180: fields may be quoted with `"`, quotes inside quoted
/// fields double up, and quoted fields may contain delimiters and newlines.
/// A bare quote inside an unquoted field, text after a closing quote, an
/// unterminated quote, or a carriage return outside `\r\n` is a
/// [`IngestError::Parse`] with a 1-based line number.
pub fn parse_csv(
    bytes: &[u8],
    source_id: &str,
    options: &CsvOptions,
) -> Result<TabularDocument, IngestError> {
    assert!(
        !['"', '\n', '\r'].contains(&options.delimiter),
        "delimiter must not be a quote or line break"
    );
    if bytes.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let text = std::str::from_utf8(bytes)?;
    let records = parse_records(text, options.delimiter)?;
    let sheet = sheet_from_records("default", records, options.has_header)?;
    Ok(TabularDocument {
        source_id: source_id.to_string(),
        sheets: vec![sheet],
    })
}

/// Read and parse a CSV file; the path becomes the document's `source_id`.
pub fn parse_csv_path(path: &Path, options: &CsvOptions) -> Result<TabularDocument, IngestError> {
    let bytes = std::fs::read(path)?;
    parse_csv(&bytes, &path.display().to_string(), options)
}

#[derive(PartialEq)]
enum CsvState {
    FieldStart,
    Unquoted,
    Quoted,
    QuoteClosed,
}

fn parse_records(text: &str, delimiter: char) -> Result<Vec<Vec<String>>, IngestError> {
    let mut records: Vec<Vec<String>> = Vec::new();
    let mut record: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut state = CsvState::FieldStart;
    let mut line = 1usize;
    let mut quote_line = 1usize;
    let mut chars = text.chars().peekable();

    // Consumes an optional pending `\r\n`; a lone `\r` outside quotes is an error.
    macro_rules! expect_lf {
        () => {
            if chars.peek() == Some(&'\n') {
                chars.next();
            } else {
                return Err(IngestError::Parse {
                    line,
                    msg: "carriage return not followed by line feed".to_string(),
                });
            }
        };
    }

    while let Some(c) = chars.next() {
        match state {
            CsvState::FieldStart => {
                if c == '"' {
                    quote_line = line;
                    state = CsvState::Quoted;
                } else if c == delimiter {
                    record.push(String::new());
                } else if c == '\n' || c == '\r' {
                    if c == '\r' {
                        expect_lf!();
                    }
                    line += 1;
                    record.push(String::new());
                    records.push(std::mem::take(&mut record));
                } else {
                    field.push(c);
                    state = CsvState::Unquoted;
                }
            }
            CsvState::Unquoted => {
                if c == '"' {
                    return Err(IngestError::Parse {
                        line,
                        msg: "quote inside unquoted field".to_string(),
                    });
                } else if c == delimiter {
                    record.push(std::mem::take(&mut field));
                    state = CsvState::FieldStart;
                } else if c == '\n' || c == '\r' {
                    if c == '\r' {
                        expect_lf!();
                    }
                    line += 1;
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                    state = CsvState::FieldStart;
                } else {
                    field.push(c);
                }
            }
            CsvState::Quoted => {
                if c == '"' {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        state = CsvState::QuoteClosed;
                    }
                } else {
                    if c == '\n' {
                        line += 1;
                    }
                    field.push(c);
                }
            }
            CsvState::QuoteClosed => {
                if c == delimiter {
                    record.push(std::mem::take(&mut field));
                    state = CsvState::FieldStart;
                } else if c == '\n' || c == '\r' {
                    if c == '\r' {
                        expect_lf!();
                    }
                    line += 1;
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                    state = CsvState::FieldStart;
                } else {
                    return Err(IngestError::Parse {
                        line,
                        msg: format!("unexpected `{c}` after closing quote"),
                    });
                }
            }
        }
    }

    match state {
        CsvState::Quoted => {
            return Err(IngestError::Parse {
                line: quote_line,
                msg: "unterminated quoted field".to_string(),
            });
        }
        CsvState::Unquoted | CsvState::QuoteClosed => {
            record.push(field);
            records.push(record);
        }
        CsvState::FieldStart => {
            if !record.is_empty() {
                record.push(field);
                records.push(record);
            }
        }
    }
    Ok(records)
}

fn sheet_from_records(
    name: &str,
    records: Vec<Vec<String>>,
    has_header: bool,
) -> Result<Sheet, IngestError> {
    let (raw_headers, data) = if has_header {
        let mut it = records.into_iter();
        let headers = it.next().expect("caller guarantees at least one record");
        (headers, it.collect::<Vec<_>>())
    } else {
        let width = records.first().map_or(0, Vec::len);
        let headers = (1..=width).map(|i| format!("col_{i}")).collect();
        (headers, records)
    };
    let headers = normalize_headers(&raw_headers);
    let rows = rows_from_records(name, &headers, data)?;
    Ok(Sheet {
        name: name.to_string(),
        headers,
        rows,
    })
}

fn rows_from_records(
    sheet: &str,
    headers: &[String],
    records: Vec<Vec<String>>,
) -> Result<Vec<Vec<Cell>>, IngestError> {
    let expected = headers.len();
    let mut rows = Vec::with_capacity(records.len());
    for (row, record) in records.into_iter().enumerate() {
        if record.len() > expected {
            return Err(IngestError::RowWidth {
                sheet: sheet.to_string(),
                row,
                width: record.len(),
                expected,
            });
        }
        let mut cells: Vec<Cell> = record.into_iter().map(Cell).collect();
        cells.resize(expected, Cell::default());
        rows.push(cells);
    }
    Ok(rows)
}

/// Make raw header names usable as KV keys: trim whitespace, replace names
/// that are empty after trimming with `col_<i>` (1-based), and disambiguate
/// duplicates with `_2`, `_3`, ... suffixes in first-come order. A suffixed
/// name that collides with a later original keeps probing upward, so
/// `[a, a, a_2]` becomes `[a, a_2, a_2_2]`.
pub fn normalize_headers(raw: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    let mut used: HashSet<String> = HashSet::with_capacity(raw.len());
    for (i, header) in raw.iter().enumerate() {
        let trimmed = header.trim();
        let base = if trimmed.is_empty() {
            format!("col_{}", i + 1)
        } else {
            trimmed.to_string()
        };
        let name = if used.contains(&base) {
            let mut k = 2;
            loop {
                let candidate = format!("{base}_{k}");
                if !used.contains(&candidate) {
                    break candidate;
                }
                k += 1;
            }
        } else {
            base
        };
        used.insert(name.clone());
        out.push(name);
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireWorkbook {
    sheets: Vec<WireSheet>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSheet {
    name: String,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Parse workbook JSON: `{"sheets": [{"name", "headers", "rows"}, ...]}`.
///
/// Unknown keys, missing fields, and wrong types are [`IngestError::Schema`]
/// errors naming the offending field; JSON syntax errors carry the line they
/// occurred on. Sheet names must be non-empty and unique.
pub fn parse_workbook_json(bytes: &[u8], source_id: &str) -> Result<TabularDocument, IngestError> {
    if bytes.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let wire: WireWorkbook = serde_json::from_slice(bytes).map_err(|e| {
        if e.is_data() {
            IngestError::Schema(e.to_string())
        } else {
            IngestError::Parse {
                line: e.line(),
                msg: e.to_string(),
            }
        }
    })?;
    if wire.sheets.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut seen: HashSet<String> = HashSet::new();
    let mut sheets = Vec::with_capacity(wire.sheets.len());
    for (i, ws) in wire.sheets.into_iter().enumerate() {
        if ws.name.is_empty() {
            return Err(IngestError::Schema(format!(
                "sheets[{i}].name must be non-empty"
            )));
        }
        if !seen.insert(ws.name.clone()) {
            return Err(IngestError::DuplicateSheet(ws.name));
        }
        let headers = normalize_headers(&ws.headers);
        let rows = rows_from_records(&ws.name, &headers, ws.rows)?;
        sheets.push(Sheet {
            name: ws.name,
            headers,
            rows,
        });
    }
    Ok(TabularDocument {
        source_id: source_id.to_string(),
        sheets,
    })
}

/// Serialize a document back into workbook JSON. `parse_workbook_json` of the
/// output reproduces the document (headers are already normalized).
pub fn serialize_workbook(doc: &TabularDocument) -> String {
    let wire = WireWorkbook {
        sheets: doc
            .sheets
            .iter()
            .map(|s| WireSheet {
                name: s.name.clone(),
                headers: s.headers.clone(),
                rows: s
                    .rows
                    .iter()
                    .map(|r| r.iter().map(|c| c.0.clone()).collect())
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("workbook serialization cannot fail")
}

/// Which MAUD split file to load from a dataset directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaudSplit {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for MaudSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaudSplit::Train => "train",
            MaudSplit::Val => "val",
            MaudSplit::Test => "test",
        })
    }
}

impl std::str::FromStr for MaudSplit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(MaudSplit::Train),
            "val" => Ok(MaudSplit::Val),
            "test" => Ok(MaudSplit::Test),
            other => Err(format!("unknown split `{other}` (train|val|test)")),
        }
    }
}

/// Column-name mapping for MAUD-style CSVs.
#[derive(Debug, Clone)]
pub struct MaudColumns {
    pub text: String,
    pub question: String,
    pub answer: String,
    pub contract_name: String,
    pub deal_point_category: String,
    pub deal_point_type: String,
    /// Optional dedicated question-label column; when absent, the full
    /// question text doubles as the label.
    pub label: Option<String>,
}

impl Default for MaudColumns {
    fn default() -> Self {
        MaudColumns {
            text: "text".to_string(),
            question: "question".to_string(),
            answer: "answer".to_string(),
            contract_name: "contract_name".to_string(),
            deal_point_category: "deal_point_category".to_string(),
            deal_point_type: "deal_point_type".to_string(),
            label: None,
        }
    }
}

/// One QA row from a MAUD-style CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaudRecord {
    /// 0-based data row index in the source sheet.
    pub row_index: usize,
    pub text: String,
    pub question: String,
    pub answer: String,
    pub contract_name: String,
    pub deal_point_category: Option<String>,
    pub deal_point_type: Option<String>,
    pub label: Option<String>,
}

/// A MAUD-style CSV parsed both ways: as a chunkable document and as QA records.
#[derive(Debug, Clone)]
pub struct MaudDataset {
    pub document: TabularDocument,
    pub records: Vec<MaudRecord>,
}

/// Load a MAUD split. `path` may be the dataset directory (the file is then
/// `<split>.csv` inside it) or a CSV file directly.
pub fn load_maud(
    path: &Path,
    split: MaudSplit,
    columns: &MaudColumns,
) -> Result<MaudDataset, IngestError> {
    let file = if path.is_dir() {
        path.join(format!("{split}.csv"))
    } else {
        path.to_path_buf()
    };
    let bytes = std::fs::read(&file)?;
    load_maud_bytes(&bytes, &file.display().to_string(), columns)
}

/// Parse MAUD-style CSV bytes. The required columns are `text`, `question`,
/// `answer`, and `contract_name` (under `columns`' names); missing ones are
/// all reported in one [`IngestError::MissingColumns`]. Category/type columns
/// are optional; an explicitly configured label column is required.
pub fn load_maud_bytes(
    bytes: &[u8],
    source_id: &str,
    columns: &MaudColumns,
) -> Result<MaudDataset, IngestError> {
    let document = parse_csv(bytes, source_id, &CsvOptions::default())?;
    let sheet = &document.sheets[0];
    let find = |name: &str| sheet.headers.iter().position(|h| h == name);

    let mut missing: Vec<String> = Vec::new();
    let mut require = |name: &str| {
        let idx = find(name);
        if idx.is_none() {
            missing.push(name.to_string());
        }
        idx
    };
    let text_idx = require(&columns.text);
    let question_idx = require(&columns.question);
    let answer_idx = require(&columns.answer);
    let contract_idx = require(&columns.contract_name);
    let label_idx = columns.label.as_deref().and_then(require);
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns(missing));
    }
    let (text_idx, question_idx, answer_idx, contract_idx) = (
        text_idx.unwrap(),
        question_idx.unwrap(),
        answer_idx.unwrap(),
        contract_idx.unwrap(),
    );
    let category_idx = find(&columns.deal_point_category);
    let type_idx = find(&columns.deal_point_type);

    let records = sheet
        .rows
        .iter()
        .enumerate()
        .map(|(row_index, row)| MaudRecord {
            row_index,
            text: row[text_idx].0.clone(),
            question: row[question_idx].0.clone(),
            answer: row[answer_idx].0.clone(),
            contract_name: row[contract_idx].0.clone(),
            deal_point_category: category_idx.map(|i| row[i].0.clone()),
            deal_point_type: type_idx.map(|i| row[i].0.clone()),
            label: label_idx.map(|i| row[i].0.clone()),
        })
        .collect();
    Ok(MaudDataset { document, records })
}
