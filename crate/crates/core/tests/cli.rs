//! End-to-end runs of the `zshar` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zeroshot_har::embedding::{cache_write, EmbeddingProvider, TestEmbedder};
use zeroshot_har::textgen::load_descriptors;

fn zshar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zshar"))
        .args(args)
        .env_remove("EMBED_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// A scratch copy of the hermetic fixture with `experiment` as the run body.
fn hermetic_dir(experiment: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in ["corpus.jsonl", "layout.toml", "descriptors.toml"] {
        fs::copy(fixtures().join("hermetic").join(f), dir.path().join(f)).unwrap();
    }
    let config = format!(
        r#"output_dir = "out"
seeds = [1, 2, 3, 4, 5]

[provider]
backend = "test"
dim = 384

{experiment}

[[dataset]]
name = "hermetic"
adapter = "corpus"
paths = ["corpus.jsonl"]
layout = "layout.toml"
descriptors = "descriptors.toml"
"#
    );
    fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn read_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn casas_log(windows: usize) -> String {
    let mut log = String::new();
    for i in 0..windows {
        let h = 6 + i;
        log.push_str(&format!(
            "2024-02-01 {h:02}:00:00.000000 M001 ON Cook begin\n"
        ));
        log.push_str(&format!("2024-02-01 {h:02}:04:10.500000 M002 ON\n"));
        log.push_str(&format!(
            "2024-02-01 {h:02}:09:00.000000 M001 OFF Cook end\n"
        ));
        log.push_str(&format!("2024-02-01 {h:02}:30:00.000000 M003 ON\n"));
    }
    log
}

#[test]
fn help_names_every_subcommand() {
    let o = zshar(&["--help"]);
    assert!(o.status.success());
    for sub in ["ingest", "summarize", "run", "validate-config"] {
        assert!(stdout(&o).contains(sub), "{sub} missing from help");
    }
}

#[test]
fn empty_log_ingests_to_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.txt");
    let out = dir.path().join("corpus.jsonl");
    fs::write(&log, "").unwrap();
    let o = zshar(&["ingest", "-o", s(&out), s(&log)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("windows written      0"),
        "{}",
        stdout(&o)
    );
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn missing_input_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.txt");
    let o = zshar(&["ingest", "-o", s(&dir.path().join("c.jsonl")), s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.txt"), "{}", stderr(&o));
}

#[test]
fn summarize_is_one_line_per_window_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("home.txt");
    let corpus = dir.path().join("corpus.jsonl");
    fs::write(&log, casas_log(10)).unwrap();
    let o = zshar(&["ingest", "-o", s(&corpus), s(&log)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let layout = fixtures().join("milan/layout.toml");
    let mut outputs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = dir.path().join(name);
        let o = zshar(&[
            "summarize",
            "--corpus",
            s(&corpus),
            "--layout",
            s(&layout),
            "-o",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.swap_remove(0)).unwrap();
    assert_eq!(text.lines().count(), 10);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let summary = v["text"].as_str().unwrap();
        assert!(summary.contains("nine minutes"), "{summary}");
        assert!(!summary.chars().any(|c| c.is_ascii_digit()), "{summary}");
    }
}

#[test]
fn summarize_exports_ablation_texts() {
    let dir = tempfile::tempdir().unwrap();
    let h = fixtures().join("hermetic");
    let (texts, descs) = (dir.path().join("t.jsonl"), dir.path().join("d.jsonl"));
    let o = zshar(&[
        "summarize",
        "--corpus",
        s(&h.join("corpus.jsonl")),
        "--layout",
        s(&h.join("layout.toml")),
        "-o",
        s(&texts),
        "--descriptors",
        s(&h.join("descriptors.toml")),
        "--descriptors-out",
        s(&descs),
        "--with-ablation-texts",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let texts = fs::read_to_string(texts).unwrap();
    assert_eq!(texts.lines().count(), 16);
    assert_eq!(texts.lines().filter(|l| l.contains("\"raw:")).count(), 8);
    let descs = fs::read_to_string(descs).unwrap();
    assert_eq!(
        descs
            .lines()
            .filter(|l| l.contains("\"descriptor:"))
            .count(),
        4
    );
    assert_eq!(descs.lines().filter(|l| l.contains("\"label:")).count(), 4);
}

#[test]
fn invalid_window_is_rejected_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    fs::write(
        &corpus,
        concat!(
            r#"{"window_id":"ok-1","ground_truth":"Cook","events":[["2024-03-04T07:10:00","K001","motion","ON"]]}"#,
            "\n",
            r#"{"window_id":"broken-7","ground_truth":"Cook","events":[["2024-03-04T07:10:00","K001","motion","ON"],["2024-03-04T07:00:00","K002","motion","ON"]]}"#,
            "\n"
        ),
    )
    .unwrap();
    let o = zshar(&[
        "summarize",
        "--corpus",
        s(&corpus),
        "--layout",
        s(&fixtures().join("hermetic/layout.toml")),
        "-o",
        s(&dir.path().join("out.jsonl")),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("broken-7"), "{}", stderr(&o));
}

#[test]
fn hermetic_zero_shot_is_perfect_and_reproducible() {
    let dir = hermetic_dir("[experiment]\nkind = \"zero_shot\"");
    let config = dir.path().join("run.toml");
    let o = zshar(&["run", s(&config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("hermetic"))
        .unwrap()
        .to_string();
    assert!(line.ends_with("1.0000   1.0000   1.0000"), "{line}");

    let out = dir.path().join("out");
    let first = read_tree(&out);
    let names: Vec<String> = first.iter().map(|(p, _)| p.display().to_string()).collect();
    for expected in [
        "hermetic/zero_shot.report.json",
        "hermetic/predictions.jsonl",
        "hermetic/confusion.csv",
        "hermetic/heatmap.txt",
        "metrics.csv",
        "run.toml",
    ] {
        assert!(
            names.iter().any(|n| n == expected),
            "{expected} missing from {names:?}"
        );
    }

    let digest = stdout(&zshar(&["validate-config", s(&config)]))
        .trim()
        .strip_prefix("ok ")
        .unwrap()
        .to_string();
    for (path, bytes) in &first {
        if path
            .extension()
            .is_some_and(|e| e == "csv" || e == "jsonl" || e == "json")
        {
            assert!(
                String::from_utf8_lossy(bytes).contains(&digest),
                "{} lacks the run digest",
                path.display()
            );
        }
    }

    fs::remove_dir_all(&out).unwrap();
    assert!(zshar(&["run", s(&config)]).status.success());
    assert_eq!(read_tree(&out), first, "rerun differs");
}

#[test]
fn ablation_writes_five_rows() {
    let dir = hermetic_dir("[experiment]\nkind = \"ablation\"");
    let o = zshar(&["run", s(&dir.path().join("run.toml"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/ablation.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5, "{csv}");
    assert!(
        rows[0].starts_with("hermetic,Ours (proposed),1,1,1,ok,"),
        "{}",
        rows[0]
    );
    assert!(
        rows[4].starts_with("hermetic,w L2-Norm,1,1,1,ok,"),
        "{}",
        rows[4]
    );
    assert!(rows.iter().all(|r| r.contains(",ok,")), "{csv}");
    for key in [
        "proposed",
        "no_summary",
        "no_descriptor",
        "alt_encoder",
        "l2_metric",
    ] {
        assert!(
            dir.path()
                .join(format!("out/hermetic/ablation/{key}.report.json"))
                .is_file(),
            "{key}"
        );
    }
}

#[test]
fn few_shot_sweep_writes_every_run() {
    let dir = hermetic_dir(
        "[experiment]\nkind = \"few_shot\"\nshots = [1, 2, 3, 4, 5]\n\n[experiment.support]\npolicy = \"earliest\"\nper_class = 1",
    );
    let o = zshar(&["run", s(&dir.path().join("run.toml"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let few = dir.path().join("out/hermetic/few_shot");
    let reports = fs::read_dir(&few)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("shots-") && n.ends_with(".report.json"))
        .count();
    assert_eq!(reports, 25);
    assert!(few.join("baseline.report.json").is_file());
    assert!(few.join("sweep.json").is_file());
    let agg = fs::read_to_string(dir.path().join("out/few_shot.csv")).unwrap();
    assert_eq!(agg.lines().count(), 6, "{agg}");
}

#[test]
fn cache_backend_runs_and_misses_exit_with_provider_code() {
    let dir = hermetic_dir("[experiment]\nkind = \"zero_shot\"");
    // Hermetic summaries equal their descriptors, so caching the descriptor
    // texts covers every text the run embeds.
    let reg = load_descriptors(dir.path().join("descriptors.toml")).unwrap();
    let texts: Vec<String> = reg.iter().map(|d| d.text.clone()).collect();
    let enc = TestEmbedder::new(8);
    let entries: Vec<_> = texts
        .iter()
        .cloned()
        .zip(enc.embed_batch(&texts).unwrap())
        .collect();
    let cache = dir.path().join("cache.emb");
    let config = fs::read_to_string(dir.path().join("run.toml"))
        .unwrap()
        .replace(
            "backend = \"test\"\ndim = 384",
            "backend = \"cache\"\ndim = 8\ncache_path = \"cache.emb\"",
        );
    fs::write(dir.path().join("run.toml"), config).unwrap();

    cache_write(&cache, "all-distilroberta-v1", 8, &entries).unwrap();
    let o = zshar(&["run", s(&dir.path().join("run.toml"))]);
    assert!(o.status.success(), "{}", stderr(&o));

    cache_write(&cache, "all-distilroberta-v1", 8, &entries[1..]).unwrap();
    let o = zshar(&["run", s(&dir.path().join("run.toml"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("missing"), "{}", stderr(&o));
}

#[test]
fn validate_config_reports_problems() {
    let dir = hermetic_dir("[experiment]\nkind = \"zero_shot\"");
    let config = dir.path().join("run.toml");
    let o = zshar(&["validate-config", s(&config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let digest = line.trim().strip_prefix("ok ").unwrap();
    assert_eq!(digest.len(), 64);

    fs::remove_file(dir.path().join("layout.toml")).unwrap();
    let o = zshar(&["validate-config", s(&config)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("layout.toml"), "{}", stderr(&o));

    fs::write(&config, "output_dir = \"out\"\nunexpected = true\n").unwrap();
    assert_eq!(
        zshar(&["validate-config", s(&config)]).status.code(),
        Some(1)
    );
}
