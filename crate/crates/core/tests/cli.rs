use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn jwalk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn trace_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("j25.csv");
    let res = jwalk(&[
        "trace",
        "--graph",
        "25,2",
        "--coin",
        "g",
        "--loop",
        "1",
        "--targets",
        "1,3,6",
        "--steps",
        "120",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let (header, rows) = read_csv(&out);
    assert_eq!(header, vec!["step", "p_M1", "p_M3", "p_M6"]);
    assert_eq!(rows.len(), 121);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i);
    }
    let p0: Vec<f64> = rows[0][1..].iter().map(|x| x.parse().unwrap()).collect();
    for (p, m) in p0.iter().zip([1.0, 3.0, 6.0]) {
        assert!((p - m / 300.0).abs() < 1e-12);
    }

    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("j25.json")).unwrap()).unwrap();
    let keys: Vec<&str> = sidecar
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    let mut expected = vec![
        "graph_n",
        "graph_k",
        "N",
        "d",
        "coin",
        "l",
        "targets",
        "t_max",
        "peak_rule",
        "t_peak",
        "p_peak",
    ];
    expected.sort_unstable();
    let mut keys_sorted = keys.clone();
    keys_sorted.sort_unstable();
    assert_eq!(keys_sorted, expected);
    assert_eq!(sidecar["N"], 300);
    assert_eq!(sidecar["d"], 46);
    assert_eq!(sidecar["coin"], "g");
    assert_eq!(sidecar["t_max"], 120);
    assert_eq!(sidecar["peak_rule"], "first");
    assert_eq!(sidecar["targets"][1], serde_json::json!([0, 1, 2]));
    assert_eq!(sidecar["p_peak"].as_array().unwrap().len(), 3);
}

#[test]
fn csv_round_trips_to_twelve_digits() {
    use jwalk::engine::{CoinKind, WalkConfig};
    use jwalk::experiments::{PeakRule, ProbabilityTrace};
    use jwalk::graph::GraphSpec;

    let spec = GraphSpec::new(10, 3).unwrap();
    let traces: Vec<_> = [1, 3]
        .iter()
        .map(|&m| {
            let cfg = WalkConfig::with_prefix_targets(spec, CoinKind::Cl, 0.3, m, 200).unwrap();
            ProbabilityTrace::run(cfg, PeakRule::FirstLocalMax).unwrap()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.csv");
    jwalk::cli::emit_trace_csv(&traces, &path).unwrap();
    let (_, rows) = read_csv(&path);
    for (t, row) in rows.iter().enumerate() {
        for (col, trace) in traces.iter().enumerate() {
            let parsed: f64 = row[col + 1].parse().unwrap();
            let exact = trace.probabilities[t];
            assert!(
                (parsed - exact).abs() <= 5e-12 * exact.abs().max(1e-300),
                "{parsed} vs {exact}"
            );
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let res = jwalk(&[
            "trace",
            "--graph",
            "13,3",
            "--coin",
            "skw",
            "--targets",
            "3",
            "--steps",
            "300",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(a.with_extension("json")).unwrap(),
        fs::read(b.with_extension("json")).unwrap()
    );
}

#[test]
fn trace_to_stdout_and_explicit_targets() {
    let res = jwalk(&[
        "trace",
        "--graph",
        "5,2",
        "--coin",
        "grov",
        "--target-set",
        "0,5,9",
        "--steps",
        "4",
    ]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "step,p_M3");
    assert_eq!(lines[1], "0,3.00000000000e-1");
}

#[test]
fn validation_errors_exit_with_one() {
    for args in [
        &[
            "trace",
            "--graph",
            "4,2",
            "--coin",
            "skw",
            "--loop",
            "1",
            "--targets",
            "1",
        ][..],
        &["trace", "--graph", "4,2", "--coin", "x", "--targets", "1"],
        &[
            "trace",
            "--graph",
            "4,2",
            "--coin",
            "grov",
            "--targets",
            "9",
        ],
        &[
            "trace",
            "--graph",
            "3,2",
            "--coin",
            "grov",
            "--targets",
            "1",
        ],
        &["bogus"],
    ] {
        let res = jwalk(args);
        assert_eq!(res.status.code(), Some(1), "{args:?}");
        assert!(!res.stderr.is_empty());
    }
    let res = jwalk(&[
        "trace",
        "--graph",
        "4,2",
        "--coin",
        "skw",
        "--loop",
        "1",
        "--targets",
        "1",
    ]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("--loop"));
}

#[test]
fn bad_thread_cap_is_a_validation_error() {
    let res = Command::new(env!("CARGO_BIN_EXE_jwalk"))
        .args(["preset", "--list"])
        .env("JWALK_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("x.csv");
    let res = jwalk(&[
        "trace",
        "--graph",
        "4,2",
        "--coin",
        "grov",
        "--targets",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("x.csv"));
}

#[test]
fn preset_list_is_exactly_the_figure_panels() {
    let res = jwalk(&["preset", "--list"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let names: Vec<&str> = text
        .lines()
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    let mut expected = vec!["fig2a".to_string(), "fig2b".to_string()];
    for fig in ["fig3", "fig4"] {
        for c in ['a', 'b', 'c', 'd'] {
            expected.push(format!("{fig}{c}"));
        }
    }
    for row in 1..=4 {
        for col in 1..=4 {
            expected.push(format!("fig5-row{row}-col{col}"));
        }
    }
    assert_eq!(names, expected);

    let res = jwalk(&["preset", "--variants"]);
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("fig5-row1-col3-l1"));
}

#[test]
fn preset_run_writes_panel_files() {
    let dir = tempfile::tempdir().unwrap();
    let res = jwalk(&[
        "preset",
        "fig4d",
        "--steps",
        "60",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("fig4d.csv"));
    assert_eq!(header, vec!["step", "p_M1", "p_M3", "p_M6"]);
    assert_eq!(rows.len(), 61);
    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig4d.json")).unwrap()).unwrap();
    assert_eq!(sidecar["coin"], "skw");
    assert_eq!(sidecar["l"], 0.0);
}

#[test]
fn sweep_writes_both_coins() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let res = jwalk(&[
        "sweep",
        "--graph",
        "10,3",
        "--grid",
        "0.1,10,5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let (header, rows) = read_csv(&out);
    assert_eq!(
        header,
        vec!["l", "p_peak_g", "t_peak_g", "p_peak_l", "t_peak_l"]
    );
    assert_eq!(rows.len(), 5);
    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["coin"], serde_json::json!(["g", "l"]));
    assert_eq!(sidecar["l"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_oracle_passes_and_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let res = jwalk(&["verify", "--oracle", "--report", report.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stdout)
    );
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("[PASS] oracle J(5,2) coin=g"));
    assert!(!text.contains("[FAIL]"));
    let json: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["checks"].as_array().unwrap().len(), 3 * 6 * 2);
}

#[test]
fn verify_unitarity_and_grover_law() {
    let res = jwalk(&["verify", "--unitarity", "--steps", "1000"]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stdout)
    );
    let res = jwalk(&["verify", "--grover-law"]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stdout)
    );
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(text.matches("[PASS] grover-law").count(), 3);
}
