//! Chunk-run statistics and cross-run comparison.
//!
//! A [`ChunkReport`] summarizes one chunking run (count, token spread,
//! budget utilization, wall time). [`compare`] lines up several reports
//! against the first one — chunk-count reduction, utilization delta,
//! speedup — refusing to compare runs over different corpora or token
//! schemes.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{Budget, Chunk, Strategy};

/// Statistics for one chunking run. Aggregate fields are `None` when the run
/// produced no chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkReport {
    pub strategy: Strategy,
    pub source_id: String,
    pub budget: usize,
    pub token_scheme: String,
    pub chunk_count: usize,
    pub avg_tokens: Option<f64>,
    pub min_tokens: Option<usize>,
    pub max_tokens: Option<usize>,
    /// Mean fill ratio: `avg_tokens / budget`. Above 1 when chunks run
    /// over budget (baselines may; see [`crate::baselines`]).
    pub utilization: Option<f64>,
    pub elapsed_ms: f64,
}

/// Summarize one run. Aggregates are order-invariant in the chunk list.
pub fn report(
    chunks: &[Chunk],
    budget: Budget,
    elapsed: Duration,
    strategy: Strategy,
    source_id: &str,
    token_scheme: &str,
) -> ChunkReport {
    let chunk_count = chunks.len();
    let (avg_tokens, min_tokens, max_tokens, utilization) = if chunk_count == 0 {
        (None, None, None, None)
    } else {
        let total: u64 = chunks.iter().map(|c| c.token_count as u64).sum();
        let min = chunks.iter().map(|c| c.token_count).min().unwrap();
        let max = chunks.iter().map(|c| c.token_count).max().unwrap();
        let avg = total as f64 / chunk_count as f64;
        (Some(avg), Some(min), Some(max), Some(avg / budget.get() as f64))
    };
    ChunkReport {
        strategy,
        source_id: source_id.to_string(),
        budget: budget.get(),
        token_scheme: token_scheme.to_string(),
        chunk_count,
        avg_tokens,
        min_tokens,
        max_tokens,
        utilization,
        elapsed_ms: elapsed.as_secs_f64() * 1000.0,
    }
}

impl ChunkReport {
    pub fn render_text(&self) -> String {
        let fmt_opt_f = |v: Option<f64>, digits: usize| match v {
            Some(x) => format!("{x:.digits$}"),
            None => "-".to_string(),
        };
        let fmt_opt_u = |v: Option<usize>| match v {
            Some(x) => x.to_string(),
            None => "-".to_string(),
        };
        format!(
            "strategy      {}\n\
             source        {}\n\
             budget        {} ({})\n\
             chunks        {}\n\
             avg tokens    {}\n\
             min tokens    {}\n\
             max tokens    {}\n\
             utilization   {}\n\
             elapsed       {:.1} ms\n",
            self.strategy,
            self.source_id,
            self.budget,
            self.token_scheme,
            self.chunk_count,
            fmt_opt_f(self.avg_tokens, 1),
            fmt_opt_u(self.min_tokens),
            fmt_opt_u(self.max_tokens),
            fmt_opt_f(self.utilization, 3),
            self.elapsed_ms,
        )
    }
}

/// Deltas of one run against the reference run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDelta {
    /// `1 - chunks/chunks_ref`: positive means fewer chunks than the reference.
    pub chunk_count_reduction: f64,
    /// `utilization - utilization_ref` (0 when either side is undefined).
    pub utilization_delta: f64,
    /// `elapsed_ref / elapsed`: above 1 means faster than the reference.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub report: ChunkReport,
    /// `None` for the reference row.
    pub delta: Option<RunDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("need at least two reports to compare")]
    NotEnoughReports,
    #[error("runs are not comparable: {field} differs (`{a}` vs `{b}`)")]
    MismatchedRun {
        field: &'static str,
        a: String,
        b: String,
    },
}

/// Compare reports against the first one (the reference). All reports must
/// describe the same corpus and token scheme.
pub fn compare(reports: &[ChunkReport]) -> Result<ComparisonTable, CompareError> {
    if reports.len() < 2 {
        return Err(CompareError::NotEnoughReports);
    }
    let reference = &reports[0];
    for other in &reports[1..] {
        if other.source_id != reference.source_id {
            return Err(CompareError::MismatchedRun {
                field: "source_id",
                a: reference.source_id.clone(),
                b: other.source_id.clone(),
            });
        }
        if other.token_scheme != reference.token_scheme {
            return Err(CompareError::MismatchedRun {
                field: "token_scheme",
                a: reference.token_scheme.clone(),
                b: other.token_scheme.clone(),
            });
        }
    }
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, report)| ComparisonRow {
            report: report.clone(),
            delta: (i > 0).then(|| run_delta(reference, report)),
        })
        .collect();
    Ok(ComparisonTable { rows })
}

fn run_delta(reference: &ChunkReport, report: &ChunkReport) -> RunDelta {
    let chunk_count_reduction = if reference.chunk_count == 0 {
        0.0
    } else {
        1.0 - report.chunk_count as f64 / reference.chunk_count as f64
    };
    let utilization_delta = match (report.utilization, reference.utilization) {
        (Some(a), Some(b)) => a - b,
        _ => 0.0,
    };
    let speedup = if report.elapsed_ms == 0.0 {
        f64::INFINITY
    } else {
        reference.elapsed_ms / report.elapsed_ms
    };
    RunDelta {
        chunk_count_reduction,
        utilization_delta,
        speedup,
    }
}

impl ComparisonTable {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:>8} {:>8} {:>6} {:>6} {:>6} {:>12} {:>10} {:>8}\n",
            "strategy", "chunks", "avg", "min", "max", "util", "elapsed_ms", "reduction", "speedup"
        ));
        for row in &self.rows {
            let r = &row.report;
            let avg = r.avg_tokens.map_or("-".into(), |v| format!("{v:.1}"));
            let min = r.min_tokens.map_or("-".into(), |v| v.to_string());
            let max = r.max_tokens.map_or("-".into(), |v| v.to_string());
            let util = r.utilization.map_or("-".into(), |v| format!("{v:.3}"));
            let (reduction, speedup) = match &row.delta {
                Some(d) => (
                    format!("{:+.1}%", d.chunk_count_reduction * 100.0),
                    format!("{:.2}x", d.speedup),
                ),
                None => ("-".into(), "-".into()),
            };
            out.push_str(&format!(
                "{:<14} {:>8} {:>8} {:>6} {:>6} {:>6} {:>12.1} {:>10} {:>8}\n",
                r.strategy.name(),
                r.chunk_count,
                avg,
                min,
                max,
                util,
                r.elapsed_ms,
                reduction,
                speedup
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(tokens: usize) -> Chunk {
        Chunk {
            text: String::new(),
            token_count: tokens,
            source_id: "src".to_string(),
            sheet_name: None,
            row_first: None,
            row_last: None,
            fragment: None,
            strategy: Strategy::Stc,
            chunk_index: 0,
            oversized: false,
        }
    }

    fn report_of(counts: &[usize], budget: usize, elapsed_ms: u64, strategy: Strategy) -> ChunkReport {
        let chunks: Vec<Chunk> = counts.iter().map(|&t| chunk(t)).collect();
        report(
            &chunks,
            Budget::new(budget).unwrap(),
            Duration::from_millis(elapsed_ms),
            strategy,
            "src",
            "word-punct",
        )
    }

    #[test]
    fn aggregates_are_hand_checked() {
        let r = report_of(&[10, 30], 40, 250, Strategy::Stc);
        assert_eq!(r.chunk_count, 2);
        assert_eq!(r.avg_tokens, Some(20.0));
        assert_eq!(r.min_tokens, Some(10));
        assert_eq!(r.max_tokens, Some(30));
        // 40 tokens used of 2 x 40 capacity
        assert_eq!(r.utilization, Some(0.5));
        assert_eq!(r.elapsed_ms, 250.0);
    }

    #[test]
    fn empty_run_has_no_aggregates() {
        let r = report_of(&[], 40, 1, Strategy::Stc);
        assert_eq!(r.chunk_count, 0);
        assert_eq!(r.avg_tokens, None);
        assert_eq!(r.min_tokens, None);
        assert_eq!(r.max_tokens, None);
        assert_eq!(r.utilization, None);
    }

    #[test]
    fn aggregates_ignore_chunk_order() {
        let a = report_of(&[5, 17, 9, 30], 32, 10, Strategy::Stc);
        let b = report_of(&[30, 9, 17, 5], 32, 10, Strategy::Stc);
        assert_eq!(a, b);
    }

    #[test]
    fn compare_uses_first_report_as_reference() {
        let reference = report_of(&[300; 60], 512, 1000, Strategy::Recursive);
        let other = report_of(&[400; 30], 512, 250, Strategy::Stc);
        let table = compare(&[reference, other]).unwrap();
        assert!(table.rows[0].delta.is_none());
        let delta = table.rows[1].delta.as_ref().unwrap();
        assert!((delta.chunk_count_reduction - 0.5).abs() < 1e-12);
        assert!((delta.speedup - 4.0).abs() < 1e-12);
        let expected_util = 400.0 / 512.0 - 300.0 / 512.0;
        assert!((delta.utilization_delta - expected_util).abs() < 1e-12);
    }

    #[test]
    fn compare_is_antisymmetric_under_swap() {
        let a = report_of(&[200; 50], 512, 800, Strategy::Recursive);
        let b = report_of(&[450; 20], 512, 200, Strategy::Stc);
        let ab = compare(&[a.clone(), b.clone()]).unwrap();
        let ba = compare(&[b, a]).unwrap();
        let d_ab = ab.rows[1].delta.as_ref().unwrap();
        let d_ba = ba.rows[1].delta.as_ref().unwrap();
        // utilization deltas flip sign; speedups invert; count ratios invert
        assert!((d_ab.utilization_delta + d_ba.utilization_delta).abs() < 1e-12);
        assert!((d_ab.speedup * d_ba.speedup - 1.0).abs() < 1e-12);
        assert!(
            ((1.0 - d_ab.chunk_count_reduction) * (1.0 - d_ba.chunk_count_reduction) - 1.0).abs()
                < 1e-12
        );
    }

    #[test]
    fn compare_rejects_mismatched_runs() {
        let mut a = report_of(&[10], 64, 10, Strategy::Stc);
        let b = report_of(&[10], 64, 10, Strategy::Recursive);
        a.source_id = "other.csv".to_string();
        assert!(matches!(
            compare(&[a, b.clone()]),
            Err(CompareError::MismatchedRun { field: "source_id", .. })
        ));
        let mut c = report_of(&[10], 64, 10, Strategy::Stc);
        c.token_scheme = "chars4".to_string();
        assert!(matches!(
            compare(&[b.clone(), c]),
            Err(CompareError::MismatchedRun { field: "token_scheme", .. })
        ));
        assert_eq!(compare(&[b]).unwrap_err(), CompareError::NotEnoughReports);
    }

    #[test]
    fn report_json_round_trips() {
        let r = report_of(&[10, 20], 64, 42, Strategy::KvRecursive);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"strategy\":\"kv_recursive\""));
        let back: ChunkReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn renders_without_panicking() {
        let a = report_of(&[10, 20], 64, 42, Strategy::Recursive);
        let b = report_of(&[25], 64, 21, Strategy::Stc);
        assert!(a.render_text().contains("recursive"));
        let table = compare(&[a, b]).unwrap();
        let text = table.render_text();
        assert!(text.contains("speedup"));
        assert!(text.contains("2.00x"));
    }
}
