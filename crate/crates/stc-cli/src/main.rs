//! `stc` command line: chunk tabular files into JSONL manifests, summarize
//! and compare manifests, time the strategies on a synthetic corpus, and run
//! the BM25 retrieval harness over MAUD-style QA CSVs.
//!
//! Exit codes follow sysexits where clap doesn't get there first: 0 on
//! success, 2 for flag syntax (clap), 64 for arguments that parse but make
//! no sense together, 65 for inputs that can't be read or parsed. Set
//! `STC_THREADS` to cap the rayon pool; output is identical at any width.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stc::baselines::{default_separators, run_baseline, RecursiveSplitConfig};
use stc::chunker::{chunk_document, Budget, Chunk, Strategy};
use stc::ingest::{
    load_maud, parse_csv, parse_workbook_json, CsvOptions, IngestError, MaudColumns, MaudSplit,
    TabularDocument,
};
use stc::manifest::{read_manifest_path, write_manifest, ManifestError};
use stc::metrics::ChunkReport;
use stc::retrieval::{evaluate, sample_queries, Bm25Index, Bm25Params, RetrievalError};
use stc::synth::uniform_document;
use stc::tokens::{TokenCounter, TokenScheme};

#[derive(Parser)]
#[command(name = "stc", version, about = "Structure-aware tabular chunking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk a tabular file into a JSONL manifest
    Chunk(ChunkArgs),
    /// Summarize manifests; with several, compare each against the first
    Stats(StatsArgs),
    /// Time every strategy on a synthetic corpus
    Bench(BenchArgs),
    /// BM25 retrieval evaluation over a MAUD-style QA CSV
    Eval(EvalArgs),
}

#[derive(Args)]
struct ChunkArgs {
    /// Input file; `-` reads stdin
    input: PathBuf,
    /// Input format: csv | workbook (default: workbook for .json, else csv)
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long, default_value = "stc", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Token budget per chunk
    #[arg(long, default_value_t = 512)]
    budget: usize,
    /// Overlap tokens between consecutive baseline chunks (ignored by stc)
    #[arg(long, default_value_t = 100)]
    overlap: usize,
    /// Token counting scheme: word-punct | chars4
    #[arg(long, default_value = "word-punct", value_parser = parse_scheme)]
    scheme: TokenScheme,
    /// CSV field delimiter
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Treat the first CSV row as data instead of headers
    #[arg(long)]
    no_header: bool,
    /// Manifest destination; `-` writes stdout
    #[arg(long, short, default_value = "-")]
    output: PathBuf,
    /// Also write the run's stats as JSON (`-` for stdout, after the manifest)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Manifest files from `stc chunk`; the first is the comparison baseline
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    /// Budget the manifests were produced under; enables utilization
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Rows in the synthetic corpus
    #[arg(long, default_value_t = 10_000)]
    rows: usize,
    /// Timed runs per strategy; the median is reported
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 512)]
    budget: usize,
    #[arg(long, default_value_t = 100)]
    overlap: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "word-punct", value_parser = parse_scheme)]
    scheme: TokenScheme,
}

#[derive(Args)]
struct EvalArgs {
    /// MAUD-style CSV file, or a dataset directory holding `<split>.csv`
    input: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: MaudSplit,
    #[arg(long, default_value = "stc", value_parser = parse_strategy)]
    strategy: Strategy,
    /// How many rows to sample as queries
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    /// Query sampling seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Ranking depth; ranks past it count as misses (at least 5)
    #[arg(long, default_value_t = 10)]
    cutoff: usize,
    #[arg(long, default_value_t = 512)]
    budget: usize,
    #[arg(long, default_value_t = 100)]
    overlap: usize,
    #[arg(long, default_value = "word-punct", value_parser = parse_scheme)]
    scheme: TokenScheme,
    /// Question-label column, when the CSV has one separate from `question`
    #[arg(long)]
    label_column: Option<String>,
    /// Write a per-query TSV trace here
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Workbook,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "workbook" => Ok(Format::Workbook),
        other => Err(format!("unknown format `{other}` (csv|workbook)")),
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn parse_scheme(s: &str) -> Result<TokenScheme, String> {
    s.parse()
}

fn parse_split(s: &str) -> Result<MaudSplit, String> {
    s.parse()
}

/// Error carrying its process exit code: 64 when arguments that parsed fine
/// still make no sense, 65 when an input can't be read or parsed.
struct CliError {
    code: i32,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> CliError {
        CliError { code: 64, msg: msg.into() }
    }

    fn data(msg: impl Into<String>) -> CliError {
        CliError { code: 65, msg: msg.into() }
    }
}

impl From<io::Error> for CliError {
    fn from(err: io::Error) -> CliError {
        CliError::data(err.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> CliError {
        CliError::data(err.to_string())
    }
}

impl From<ManifestError> for CliError {
    fn from(err: ManifestError) -> CliError {
        CliError::data(err.to_string())
    }
}

impl From<RetrievalError> for CliError {
    fn from(err: RetrievalError) -> CliError {
        CliError::data(err.to_string())
    }
}

fn main() {
    let result = init_threads().and_then(|()| match Cli::parse().command {
        Command::Chunk(args) => run_chunk(args),
        Command::Stats(args) => run_stats(args),
        Command::Bench(args) => run_bench(args),
        Command::Eval(args) => run_eval(args),
    });
    if let Err(err) = result {
        eprintln!("stc: {}", err.msg);
        std::process::exit(err.code);
    }
}

/// Honor `STC_THREADS` before any parallel work happens.
fn init_threads() -> Result<(), CliError> {
    match std::env::var("STC_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    CliError::usage(format!("STC_THREADS must be a positive integer, got `{raw}`"))
                })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::usage(format!("thread pool: {e}")))
        }
    }
}

fn run_chunk(args: ChunkArgs) -> Result<(), CliError> {
    let (doc, budget, counter) = load_document(
        &args.input,
        args.format,
        args.delimiter,
        args.no_header,
        args.budget,
        args.scheme,
    )?;
    let (chunks, report) = chunk_with(
        &doc,
        args.strategy,
        budget,
        args.overlap,
        args.budget,
        &counter,
    )?;

    let mut out = writer_for(&args.output)?;
    write_manifest(&chunks, &mut out)?;
    out.flush()?;
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    Ok(())
}

/// Shared by `chunk` and `eval`: budget/overlap checks plus strategy dispatch.
fn chunk_with(
    doc: &TabularDocument,
    strategy: Strategy,
    budget: Budget,
    overlap: usize,
    budget_raw: usize,
    counter: &TokenCounter,
) -> Result<(Vec<Chunk>, ChunkReport), CliError> {
    Ok(match strategy {
        Strategy::Stc => chunk_document(doc, budget, counter),
        baseline => {
            if overlap >= budget_raw {
                return Err(CliError::usage(format!(
                    "--overlap {overlap} must be smaller than --budget {budget_raw}"
                )));
            }
            let config = RecursiveSplitConfig {
                chunk_size_tokens: budget_raw,
                overlap_tokens: overlap,
                separators: default_separators(),
            };
            run_baseline(doc, baseline, &config, counter)
        }
    })
}

fn load_document(
    input: &Path,
    format: Option<Format>,
    delimiter: char,
    no_header: bool,
    budget_raw: usize,
    scheme: TokenScheme,
) -> Result<(TabularDocument, Budget, TokenCounter), CliError> {
    let budget = Budget::new(budget_raw)
        .ok_or_else(|| CliError::usage("--budget must be at least 1"))?;
    if ['"', '\n', '\r'].contains(&delimiter) {
        return Err(CliError::usage("--delimiter must not be a quote or line break"));
    }
    let counter = TokenCounter::new(scheme);
    let (bytes, source_id) = read_input(input)?;
    let format = format.unwrap_or_else(|| infer_format(input));
    let doc = match format {
        Format::Csv => {
            let options = CsvOptions { delimiter, has_header: !no_header };
            parse_csv(&bytes, &source_id, &options)
        }
        Format::Workbook => parse_workbook_json(&bytes, &source_id),
    }
    .map_err(|e| CliError::data(format!("{source_id}: {e}")))?;
    Ok((doc, budget, counter))
}

fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Workbook,
        _ => Format::Csv,
    }
}

fn read_input(path: &Path) -> Result<(Vec<u8>, String), CliError> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        Ok((buf, "stdin".to_string()))
    } else {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Ok((bytes, path.display().to_string()))
    }
}

fn writer_for(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path == Path::new("-") {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let file = File::create(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut out = writer_for(path)?;
    let text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// One manifest summarized. Aggregates are `null` for an empty manifest.
#[derive(Serialize)]
struct ManifestSummary {
    file: String,
    strategy: String,
    chunks: usize,
    total_tokens: u64,
    avg_tokens: Option<f64>,
    min_tokens: Option<usize>,
    max_tokens: Option<usize>,
    oversized: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    utilization: Option<f64>,
    /// `1 - chunks/chunks_first`; `null` on the first row.
    #[serde(skip_serializing_if = "Option::is_none")]
    chunk_count_reduction: Option<f64>,
}

fn run_stats(args: StatsArgs) -> Result<(), CliError> {
    let mut summaries = Vec::new();
    let mut first_count: Option<usize> = None;
    for path in &args.manifests {
        let lines = read_manifest_path(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let chunks = lines.len();
        let total_tokens: u64 = lines.iter().map(|l| l.tokens as u64).sum();
        let avg = (chunks > 0).then(|| total_tokens as f64 / chunks as f64);
        let mut strategies: Vec<&str> =
            lines.iter().map(|l| l.strategy.name()).collect();
        strategies.dedup();
        let reduction = match first_count {
            Some(first) if first > 0 => Some(1.0 - chunks as f64 / first as f64),
            Some(_) => None,
            None => {
                first_count = Some(chunks);
                None
            }
        };
        summaries.push(ManifestSummary {
            file: path.display().to_string(),
            strategy: match strategies[..] {
                [] => "none".to_string(),
                [one] => one.to_string(),
                _ => "mixed".to_string(),
            },
            chunks,
            total_tokens,
            avg_tokens: avg,
            min_tokens: lines.iter().map(|l| l.tokens).min(),
            max_tokens: lines.iter().map(|l| l.tokens).max(),
            oversized: lines.iter().filter(|l| l.oversized).count(),
            utilization: match (avg, args.budget) {
                (Some(avg), Some(budget)) if budget > 0 => Some(avg / budget as f64),
                _ => None,
            },
            chunk_count_reduction: reduction,
        });
    }
    print_json(&summaries)
}

#[derive(Serialize)]
struct BenchRow {
    strategy: String,
    rows: usize,
    budget: usize,
    chunk_count: usize,
    median_ms: f64,
    runs_ms: Vec<f64>,
}

fn run_bench(args: BenchArgs) -> Result<(), CliError> {
    let budget = Budget::new(args.budget)
        .ok_or_else(|| CliError::usage("--budget must be at least 1"))?;
    if args.overlap >= args.budget {
        return Err(CliError::usage(format!(
            "--overlap {} must be smaller than --budget {}",
            args.overlap, args.budget
        )));
    }
    if args.runs == 0 {
        return Err(CliError::usage("--runs must be at least 1"));
    }
    let counter = TokenCounter::new(args.scheme);
    let doc = uniform_document(args.rows, args.seed);
    let split = RecursiveSplitConfig {
        chunk_size_tokens: args.budget,
        overlap_tokens: args.overlap,
        separators: default_separators(),
    };

    let mut out = Vec::new();
    for strategy in [Strategy::Stc, Strategy::Recursive, Strategy::KvRecursive] {
        let mut runs_ms = Vec::with_capacity(args.runs);
        let mut chunk_count = 0;
        for _ in 0..args.runs {
            let report = match strategy {
                Strategy::Stc => chunk_document(&doc, budget, &counter).1,
                baseline => run_baseline(&doc, baseline, &split, &counter).1,
            };
            chunk_count = report.chunk_count;
            runs_ms.push(report.elapsed_ms);
        }
        out.push(BenchRow {
            strategy: strategy.name().to_string(),
            rows: args.rows,
            budget: args.budget,
            chunk_count,
            median_ms: median(&mut runs_ms.clone()),
            runs_ms,
        });
    }
    print_json(&out)
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}

#[derive(Serialize)]
struct EvalOutput {
    strategy: String,
    n_queries: usize,
    seed: u64,
    cutoff: usize,
    /// Recall at ranks 1, 3, and 5.
    recall: BTreeMap<String, f64>,
    mrr: f64,
    k1: f64,
    b: f64,
}

fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let budget = Budget::new(args.budget)
        .ok_or_else(|| CliError::usage("--budget must be at least 1"))?;
    if args.cutoff < 5 {
        return Err(CliError::usage("--cutoff must be at least 5 (recall@5 is reported)"));
    }
    let counter = TokenCounter::new(args.scheme);
    let columns = MaudColumns { label: args.label_column.clone(), ..MaudColumns::default() };
    let dataset = load_maud(&args.input, args.split, &columns)
        .map_err(|e| CliError::data(format!("{}: {e}", args.input.display())))?;

    let (chunks, _) = chunk_with(
        &dataset.document,
        args.strategy,
        budget,
        args.overlap,
        args.budget,
        &counter,
    )?;
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let params = Bm25Params::default();
    let index = Bm25Index::build(texts, params)?;
    let queries = sample_queries(&dataset, args.queries, args.seed)?;
    let (mut result, traces) = evaluate(&index, &queries, args.cutoff);
    result.seed = Some(args.seed);

    if let Some(path) = &args.trace {
        let mut out = writer_for(path)?;
        writeln!(out, "query_id\trank_of_first_hit\ttop1_chunk_id")?;
        for trace in &traces {
            let rank = trace.first_hit_rank.map(|r| r.to_string()).unwrap_or_default();
            let top1 = trace.top1_chunk.map(|c| c.to_string()).unwrap_or_default();
            writeln!(out, "{}\t{rank}\t{top1}", trace.query_id)?;
        }
        out.flush()?;
    }

    print_json(&EvalOutput {
        strategy: args.strategy.name().to_string(),
        n_queries: result.n_queries,
        seed: args.seed,
        cutoff: result.cutoff,
        recall: result
            .recall_at
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
        mrr: result.mrr,
        k1: params.k1,
        b: params.b,
    })
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("output serialization cannot fail");
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}
