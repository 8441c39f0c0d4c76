//! End-to-end tests for the `stc` binary: real process spawns, real files.

use std::path::Path;
use std::process::{Command, Output};

use stc::baselines::linearize_raw;
use stc::synth::{maud_corpus, SynthConfig};

fn stc_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stc"))
}

fn run(args: &[&str]) -> Output {
    stc_bin().args(args).output().expect("binary runs")
}

fn stdout_of(output: &Output) -> &str {
    std::str::from_utf8(&output.stdout).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> &str {
    std::str::from_utf8(&output.stderr).expect("stderr is UTF-8")
}

fn write_sample_csv(dir: &Path) -> String {
    let path = dir.join("people.csv");
    std::fs::write(&path, "name,role\nAda,engineer\nGrace,admiral\nAlan,logician\n").unwrap();
    path.display().to_string()
}

#[test]
fn chunk_writes_a_parseable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_csv(dir.path());
    let output = run(&["chunk", &input, "--budget", "16"]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let lines: Vec<serde_json::Value> = stdout_of(&output)
        .lines()
        .map(|l| serde_json::from_str(l).expect("manifest line is JSON"))
        .collect();
    assert!(!lines.is_empty());
    for (i, line) in lines.iter().enumerate() {
        assert_eq!(line["chunk_index"], i as u64);
        assert_eq!(line["strategy"], "stc");
        assert_eq!(line["source_id"], input);
        assert!(line["tokens"].as_u64().unwrap() <= 16);
    }
}

#[test]
fn chunk_reads_stdin_when_dash() {
    use std::io::Write;
    use std::process::Stdio;

    let mut child = stc_bin()
        .args(["chunk", "-", "--budget", "32"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"k,v\na,b\n")
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let line: serde_json::Value = serde_json::from_str(stdout_of(&output).trim()).unwrap();
    assert_eq!(line["source_id"], "stdin");
    assert_eq!(line["text"], "[row 0 @ default]\nk: a\nv: b");
}

#[test]
fn chunk_infers_workbook_format_from_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("book.json");
    std::fs::write(
        &path,
        r#"{"sheets":[{"name":"s1","headers":["a"],"rows":[["x"]]}]}"#,
    )
    .unwrap();
    let output = run(&["chunk", path.to_str().unwrap(), "--budget", "32"]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let line: serde_json::Value = serde_json::from_str(stdout_of(&output).trim()).unwrap();
    assert_eq!(line["sheet"], "s1");
}

#[test]
fn chunk_output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = maud_corpus(&SynthConfig::small(120, 3));
    let input = dir.path().join("maud.csv");
    std::fs::write(&input, linearize_raw(&data.document)).unwrap();

    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let output = stc_bin()
            .args(["chunk", input.to_str().unwrap(), "--budget", "128"])
            .env("STC_THREADS", threads)
            .output()
            .unwrap();
        assert!(output.status.success(), "stderr: {}", stderr_of(&output));
        outputs.push(output.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn chunk_rejects_overlap_at_or_over_budget() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_csv(dir.path());
    // default overlap is 100; stc ignores it, the baselines must not
    let output = run(&["chunk", &input, "--budget", "24", "--strategy", "recursive"]);
    assert_eq!(output.status.code(), Some(64));
    assert!(stderr_of(&output).contains("--overlap"));
}

#[test]
fn chunk_missing_input_is_a_data_error() {
    let output = run(&["chunk", "/nonexistent/nope.csv"]);
    assert_eq!(output.status.code(), Some(65));
}

#[test]
fn chunk_malformed_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b\nx\"y,z\n").unwrap();
    let output = run(&["chunk", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(65));
    assert!(stderr_of(&output).contains("bad.csv"));
}

#[test]
fn chunk_rejects_bad_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_csv(dir.path());
    let output = stc_bin()
        .args(["chunk", &input])
        .env("STC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(64));
    assert!(stderr_of(&output).contains("STC_THREADS"));
}

#[test]
fn stats_compares_manifests_against_the_first() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_csv(dir.path());
    let stc_manifest = dir.path().join("stc.jsonl");
    let rec_manifest = dir.path().join("rec.jsonl");
    let output = run(&[
        "chunk", &input, "--budget", "16",
        "-o", stc_manifest.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let output = run(&[
        "chunk", &input, "--budget", "16", "--strategy", "recursive", "--overlap", "4",
        "-o", rec_manifest.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let output = run(&[
        "stats",
        stc_manifest.to_str().unwrap(),
        rec_manifest.to_str().unwrap(),
        "--budget", "16",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let rows: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["strategy"], "stc");
    assert!(rows[0].get("chunk_count_reduction").is_none());
    assert_eq!(rows[1]["strategy"], "recursive");
    assert!(rows[1]["chunk_count_reduction"].is_number());
    assert!(rows[0]["utilization"].as_f64().unwrap() > 0.0);
}

#[test]
fn bench_times_every_strategy() {
    let output = run(&["bench", "--rows", "120", "--runs", "2", "--budget", "64", "--overlap", "16"]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let rows: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    let rows = rows.as_array().unwrap();
    let strategies: Vec<&str> = rows.iter().map(|r| r["strategy"].as_str().unwrap()).collect();
    assert_eq!(strategies, ["stc", "recursive", "kv_recursive"]);
    for row in rows {
        assert!(row["chunk_count"].as_u64().unwrap() > 0);
        assert_eq!(row["runs_ms"].as_array().unwrap().len(), 2);
        assert!(row["median_ms"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn eval_scores_queries_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = maud_corpus(&SynthConfig::small(200, 5));
    let input = dir.path().join("maud.csv");
    std::fs::write(&input, linearize_raw(&data.document)).unwrap();
    let trace = dir.path().join("trace.tsv");

    let output = run(&[
        "eval", input.to_str().unwrap(),
        "--queries", "25", "--cutoff", "5", "--seed", "9",
        "--trace", trace.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let report: serde_json::Value = serde_json::from_str(stdout_of(&output)).unwrap();
    assert_eq!(report["strategy"], "stc");
    assert_eq!(report["n_queries"], 25);
    assert_eq!(report["seed"], 9);
    assert_eq!(report["cutoff"], 5);
    for rank in ["1", "3", "5"] {
        let r = report["recall"][rank].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&r));
    }
    assert!(report["mrr"].as_f64().unwrap() > 0.0);
    assert_eq!(report["k1"], 1.2);
    assert_eq!(report["b"], 0.75);

    let trace_text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = trace_text.lines();
    assert_eq!(lines.next(), Some("query_id\trank_of_first_hit\ttop1_chunk_id"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 25);
    for row in rows {
        let fields: Vec<&str> = row.split('\t').collect();
        assert_eq!(fields.len(), 3);
        if !fields[1].is_empty() {
            let rank: usize = fields[1].parse().unwrap();
            assert!((1..=5).contains(&rank));
        }
    }
}

#[test]
fn eval_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = maud_corpus(&SynthConfig::small(150, 11));
    let input = dir.path().join("maud.csv");
    std::fs::write(&input, linearize_raw(&data.document)).unwrap();

    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let output = stc_bin()
            .args(["eval", input.to_str().unwrap(), "--queries", "30", "--cutoff", "5"])
            .env("STC_THREADS", threads)
            .output()
            .unwrap();
        assert!(output.status.success(), "stderr: {}", stderr_of(&output));
        outputs.push(output.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn eval_rejects_cutoff_below_five() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample_csv(dir.path());
    let output = run(&["eval", &input, "--queries", "1", "--cutoff", "3"]);
    assert_eq!(output.status.code(), Some(64));
    assert!(stderr_of(&output).contains("--cutoff"));
}
