//! End-to-end tests of the drcwatch binary: every subcommand, determinism of
//! outputs, and nonzero exits on bad input.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn drcwatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drcwatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn synth_scores(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let out = dir.to_str().unwrap();
    let output = drcwatch(&[
        "synth",
        "--n-subjects",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        out,
    ]);
    assert_ok(&output);
    dir.join("scores.csv")
}

#[test]
fn synth_is_deterministic_and_round_trips() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = synth_scores(dir_a.path(), 12, 7);
    let b = synth_scores(dir_b.path(), 12, 7);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir_a.path().join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth.as_object().unwrap().len(), 12);

    // a different seed changes the bytes
    let dir_c = tempfile::tempdir().unwrap();
    let c = synth_scores(dir_c.path(), 12, 8);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn synth_rejects_bad_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let output = drcwatch(&[
        "synth",
        "--n-subjects",
        "12",
        "--goat-frac",
        "0.6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!output.status.success());
}

#[test]
fn landscape_outputs_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 14, 5);
    let out = dir.path().to_str().unwrap();
    let scores_arg = scores.to_str().unwrap();

    let stdout = assert_ok(&drcwatch(&["landscape", "--scores", scores_arg, "--out", out]));
    assert!(stdout.contains("category,proportion"));
    assert!(stdout.contains("goat,"));
    let first_json = fs::read(dir.path().join("landscape.json")).unwrap();
    let first_csv = fs::read(dir.path().join("assignment.csv")).unwrap();

    assert_ok(&drcwatch(&["landscape", "--scores", scores_arg, "--out", out]));
    assert_eq!(first_json, fs::read(dir.path().join("landscape.json")).unwrap());
    assert_eq!(first_csv, fs::read(dir.path().join("assignment.csv")).unwrap());

    // input file untouched by the run
    let scores_bytes = fs::read(&scores).unwrap();
    assert_ok(&drcwatch(&["landscape", "--scores", scores_arg, "--out", out]));
    assert_eq!(scores_bytes, fs::read(&scores).unwrap());
}

#[test]
fn landscape_rejects_empty_and_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "subject_a,subject_b,tier_a,tier_b,score\n").unwrap();
    let output = drcwatch(&[
        "landscape",
        "--scores",
        empty.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("empty"), "stderr: {stderr}");

    let output = drcwatch(&[
        "landscape",
        "--scores",
        "/nonexistent.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!output.status.success());
}

#[test]
fn assess_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 14, 5);
    let out = dir.path().to_str().unwrap();
    let stdout = assert_ok(&drcwatch(&[
        "assess",
        "--scores",
        scores.to_str().unwrap(),
        "--subject",
        "s0004",
        "--metrics",
        "euclidean",
        "--out",
        out,
    ]));
    assert!(stdout.contains("subject,avg_risk,level,variant_set,landscape_version"));
    assert!(stdout.contains("s0004,"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("risk_s0004.json")).unwrap())
            .unwrap();
    assert_eq!(report["subject"], "s0004");
    assert_eq!(report["metric"], "euclidean");
    assert!(report["cells"].as_array().unwrap().len() >= 5);
    let avg = report["average_risk"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&avg));

    let grid = fs::read_to_string(dir.path().join("metric_grid_s0004.csv")).unwrap();
    let data_rows = grid
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("metric,"))
        .count();
    assert_eq!(data_rows, 6, "one euclidean row per populated cell");
}

#[test]
fn assess_unknown_subject_fails() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 12, 5);
    let output = drcwatch(&[
        "assess",
        "--scores",
        scores.to_str().unwrap(),
        "--subject",
        "ghost",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("ghost"));
}

#[test]
fn evaluate_emits_grid_with_expected_cell_count() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 12, 5);
    let out = dir.path().to_str().unwrap();
    // one metric, both classifiers: 1 x 2 x 2 x 3 = 12 cells
    let stdout = assert_ok(&drcwatch(&[
        "evaluate",
        "--scores",
        scores.to_str().unwrap(),
        "--metrics",
        "euclidean",
        "--classifiers",
        "min,margin",
        "--out",
        out,
    ]));
    assert!(stdout.contains("12 cells"), "stdout: {stdout}");

    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sensitivity.json")).unwrap())
            .unwrap();
    assert_eq!(table["cells"].as_array().unwrap().len(), 12);

    let csv = fs::read_to_string(dir.path().join("sensitivity.csv")).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap();
    assert!(header.starts_with("metric,"));
    assert_eq!(header.split(',').count(), 13, "metric column plus 12 cells");
    assert_eq!(lines.count(), 1, "one metric row");
}

#[test]
fn evaluate_full_grid_has_252_cells() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 10, 5);
    let out = dir.path().to_str().unwrap();
    let stdout = assert_ok(&drcwatch(&[
        "evaluate",
        "--scores",
        scores.to_str().unwrap(),
        "--out",
        out,
    ]));
    assert!(stdout.contains("252 cells"), "stdout: {stdout}");
    let csv = fs::read_to_string(dir.path().join("sensitivity.csv")).unwrap();
    let rows = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("metric,"))
        .count();
    assert_eq!(rows, 21, "one row per metric");
}

#[test]
fn assess_planted_wolf_lamb_reports_high_cost_in_impostor_cells() {
    let dir = tempfile::tempdir().unwrap();
    // two planted wolves: the landscape keeps elevated impostor evidence
    // even with the assessed wolf excluded
    let out = dir.path().to_str().unwrap();
    assert_ok(&drcwatch(&[
        "synth",
        "--n-subjects",
        "40",
        "--wolf-frac",
        "0.05",
        "--seed",
        "7",
        "--out",
        out,
    ]));
    let scores = dir.path().join("scores.csv");
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("truth.json")).unwrap()).unwrap();
    let wolf = truth
        .as_object()
        .unwrap()
        .iter()
        .find(|(_, v)| *v == "wolf_lamb")
        .map(|(k, _)| k.clone())
        .expect("one wolf/lamb is planted");

    assert_ok(&drcwatch(&[
        "assess",
        "--scores",
        scores.to_str().unwrap(),
        "--subject",
        &wolf,
        "--metrics",
        "euclidean",
        "--classifiers",
        "min",
        "--out",
        out,
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(format!("risk_{wolf}.json"))).unwrap())
            .unwrap();
    for cell in report["cells"].as_array().unwrap() {
        if cell["kind"] == "impostor" {
            assert_eq!(cell["predicted_min"], "wolf_lamb", "cell {cell}");
            assert_eq!(cell["r2"], 0.6);
        }
    }
}

#[test]
fn monitor_remove_then_re_add_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 12, 5);
    let out = dir.path().to_str().unwrap();

    // extract s0003's records from the generated csv to re-add them
    let text = fs::read_to_string(&scores).unwrap();
    let records: Vec<serde_json::Value> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("subject_a") && l.contains("s0003"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            serde_json::json!({
                "subject_a": f[0], "subject_b": f[1],
                "tier_a": f[2], "tier_b": f[3],
                "score": f[4].parse::<f64>().unwrap(),
                "sample_a": f[5], "sample_b": f[6],
            })
        })
        .collect();
    assert!(!records.is_empty());
    let spec = serde_json::json!({
        "ops": [
            {"op": "remove", "subject": "s0003"},
            {"op": "add", "records": records},
        ]
    });
    let spec_path = dir.path().join("mutation.json");
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();

    let stdout = assert_ok(&drcwatch(&[
        "monitor",
        "--scores",
        scores.to_str().unwrap(),
        "--mutation",
        spec_path.to_str().unwrap(),
        "--out",
        out,
    ]));
    assert!(stdout.contains("version 1 -> 3"), "stdout: {stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("monitor.json")).unwrap()).unwrap();
    assert_eq!(report["before_version"], 1);
    assert_eq!(report["after_version"], 3);
    for delta in report["cell_deltas"].as_array().unwrap() {
        let l1 = delta["l1_delta"].as_f64().unwrap();
        assert!(l1 < 1e-9, "cell drifted by {l1}");
    }
    assert_eq!(report["category_changes"].as_array().unwrap().len(), 0);
}

#[test]
fn monitor_unknown_subject_fails() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 12, 5);
    let spec_path = dir.path().join("mutation.json");
    fs::write(&spec_path, r#"{"ops":[{"op":"remove","subject":"ghost"}]}"#).unwrap();
    let output = drcwatch(&[
        "monitor",
        "--scores",
        scores.to_str().unwrap(),
        "--mutation",
        spec_path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!output.status.success());
}

#[test]
fn plotdata_flattens_all_populated_cells() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 14, 5);
    let out = dir.path().to_str().unwrap();
    assert_ok(&drcwatch(&["landscape", "--scores", scores.to_str().unwrap(), "--out", out]));
    let stdout = assert_ok(&drcwatch(&[
        "plotdata",
        "--landscape",
        dir.path().join("landscape.json").to_str().unwrap(),
        "--out",
        out,
    ]));
    assert!(stdout.contains("1800 data rows"), "stdout: {stdout}");

    let csv = fs::read_to_string(dir.path().join("plotdata.csv")).unwrap();
    let data_rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("category,"))
        .collect();
    assert_eq!(data_rows.len(), 18 * 100);

    // per-cell mass sums to 1 within 1e-6
    let mut sums: std::collections::BTreeMap<String, f64> = std::collections::BTreeMap::new();
    for row in &data_rows {
        let fields: Vec<&str> = row.split(',').collect();
        let key = format!("{},{},{}", fields[0], fields[1], fields[2]);
        *sums.entry(key).or_insert(0.0) += fields[4].parse::<f64>().unwrap();
    }
    assert_eq!(sums.len(), 18);
    for (cell, total) in sums {
        assert!((total - 1.0).abs() < 1e-6, "cell {cell} mass sums to {total}");
    }
}

#[test]
fn plotdata_marks_empty_cells_with_comments() {
    let dir = tempfile::tempdir().unwrap();
    // high-tier-only handmade set: every LQ/VQ cell is empty
    let scores = dir.path().join("scores.csv");
    let mut text = String::from("subject_a,subject_b,tier_a,tier_b,score\n");
    for i in 0..8 {
        text.push_str(&format!("a{i},a{i},high,high,{}\n", 0.5 + 0.05 * i as f64));
        text.push_str(&format!("a{i},a{},high,high,0.1\n", (i + 1) % 8));
    }
    fs::write(&scores, text).unwrap();
    let out = dir.path().to_str().unwrap();
    assert_ok(&drcwatch(&["landscape", "--scores", scores.to_str().unwrap(), "--out", out]));
    assert_ok(&drcwatch(&[
        "plotdata",
        "--landscape",
        dir.path().join("landscape.json").to_str().unwrap(),
        "--out",
        out,
    ]));
    let csv = fs::read_to_string(dir.path().join("plotdata.csv")).unwrap();
    let empties = csv.lines().filter(|l| l.starts_with("# empty cell:")).count();
    assert_eq!(empties, 12, "twelve low/various cells are empty");
    assert!(csv.lines().any(|l| l.starts_with("# empty cell: goat,low,genuine")));

    let output = drcwatch(&[
        "plotdata",
        "--landscape",
        scores.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert!(!output.status.success(), "malformed landscape must fail");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 14, 5);
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        serde_json::json!({
            "percentile": 0.10,
            "bins": 40,
            "bandwidth": "auto",
            "metrics": ["euclidean", "hellinger"],
            "classifiers": ["min"],
            "seed": 9,
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.path().to_str().unwrap();
    let scores_arg = scores.to_str().unwrap();

    assert_ok(&drcwatch(&[
        "landscape", "--scores", scores_arg, "--config", config.to_str().unwrap(), "--out", out,
    ]));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("landscape.json")).unwrap())
            .unwrap();
    assert_eq!(doc["bins"], 40);
    assert_eq!(doc["percentile"], 0.10);

    // flags win over the file
    assert_ok(&drcwatch(&[
        "landscape", "--scores", scores_arg, "--config", config.to_str().unwrap(),
        "--bins", "25", "--percentile", "0.05", "--out", out,
    ]));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("landscape.json")).unwrap())
            .unwrap();
    assert_eq!(doc["bins"], 25);
    assert_eq!(doc["percentile"], 0.05);

    // invalid knobs fail fast
    let output = drcwatch(&[
        "landscape", "--scores", scores_arg, "--percentile", "0.9", "--out", out,
    ]);
    assert!(!output.status.success());
    let output = drcwatch(&[
        "landscape", "--scores", scores_arg, "--metrics", "euclid", "--out", out,
    ]);
    assert!(!output.status.success());
}

#[test]
fn custom_cost_profile_reaches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let scores = synth_scores(dir.path(), 12, 5);
    let costs = dir.path().join("costs.json");
    fs::write(
        &costs,
        r#"{"name": "strict", "lambda": {"sheep": 0.05, "goat": 0.25, "wolf_lamb": 0.70}}"#,
    )
    .unwrap();
    let out = dir.path().to_str().unwrap();
    assert_ok(&drcwatch(&[
        "assess",
        "--scores",
        scores.to_str().unwrap(),
        "--subject",
        "s0002",
        "--metrics",
        "euclidean",
        "--costs",
        costs.to_str().unwrap(),
        "--out",
        out,
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("risk_s0002.json")).unwrap())
            .unwrap();
    assert_eq!(report["cost_profile"], "strict");
}
