use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forecal_core::baselines::TemperatureParams;
use forecal_core::data::CsvTable;
use forecal_core::synthetic::{generate, save_with_rates, DistortionSpec};
use forecal_core::{save_csv, CalibrationDataset, Calibrator};

fn forecal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forecal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = forecal(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synthetic(dir: &Path, name: &str, n: usize, k: f64, seed: u64) -> PathBuf {
    let path = dir.join(name);
    let (d, q) = generate(n, &DistortionSpec::sigmoid(k), seed).unwrap();
    save_with_rates(&d, &q, &path).unwrap();
    path
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    CsvTable::read(path).unwrap().numeric_column(path, name).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn fit_temperature_reports_severity() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 20_000, 3.0, 1);
    let model = dir.path().join("t.json");
    let out = ok(&["fit", "--input", s(&data), "--method", "temperature", "--out", s(&model)]);
    let t: f64 = out
        .split_whitespace()
        .find_map(|w| w.strip_prefix("t="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((t - 3.0).abs() < 0.15, "{out}");
    assert!(out.contains("method=temperature") && out.contains("n=20000"));
}

#[test]
fn forecal_fit_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 3000, 3.0, 2);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for m in [&a, &b] {
        ok(&[
            "fit", "--input", s(&data), "--method", "forecal", "--bins", "10", "--bootstrap",
            "100", "--seed", "7", "--out", s(m),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn unknown_method_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 100, 2.0, 3);
    let out = forecal(&["fit", "--input", s(&data), "--method", "nosuch", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = forecal(&["fit", "--input", s(&data), "--method", "forecal", "--bins", "0", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = forecal(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_one_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "p,y\n0.5,1\n1.5,0\n").unwrap();
    let out = forecal(&["fit", "--input", s(&bad), "--method", "platt", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = dir.path().join("missing.csv");
    let out = forecal(&["fit", "--input", s(&missing), "--method", "platt", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identity_temperature_leaves_probabilities_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 500, 2.0, 4);
    let model = dir.path().join("id.json");
    fs::write(&model, Calibrator::Temperature(TemperatureParams { t: 1.0 }).to_json().unwrap()).unwrap();
    let out = dir.path().join("cal.csv");
    ok(&["apply", "--model", s(&model), "--input", s(&data), "--out", s(&out)]);
    assert_eq!(CsvTable::read(&out).unwrap().header, vec!["p", "y", "p_cal"]);
    assert_eq!(column(&out, "p_cal"), column(&out, "p"));
    assert_eq!(column(&out, "p"), column(&data, "p"));
}

#[test]
fn forecal_apply_is_monotone_in_p() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 4000, 3.0, 5);
    let model = dir.path().join("f.json");
    let out = dir.path().join("cal.csv");
    ok(&["fit", "--input", s(&data), "--method", "forecal", "--trees", "50", "--out", s(&model)]);
    ok(&["apply", "--model", s(&model), "--input", s(&data), "--out", s(&out)]);
    let p = column(&out, "p");
    let c = column(&out, "p_cal");
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    assert!(idx.windows(2).all(|w| c[w[0]] <= c[w[1]] + 1e-12));
}

#[test]
fn apply_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("id.json");
    fs::write(&model, Calibrator::Temperature(TemperatureParams { t: 1.0 }).to_json().unwrap()).unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "p,y\n").unwrap();
    let out = forecal(&["apply", "--model", s(&model), "--input", s(&empty), "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_reports_zero_deltas_for_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    fs::write(&path, "p,y,p_cal\n0.2,0,0.2\n0.7,1,0.7\n0.4,1,0.4\n").unwrap();
    let rows = csv_rows(&ok(&["evaluate", "--input", s(&path)]));
    assert_eq!(rows[0].join(","), "method,ece_before,ece_after,auc_before,auc_after,ece_delta_pct,auc_delta_pct");
    assert_eq!(rows[1][5], "0");
    assert_eq!(rows[1][6], "0");
}

#[test]
fn evaluate_reproduces_hand_ece() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    fs::write(&path, "p,y,p_cal\n0.2,0,0.5\n0.2,1,0.5\n0.8,1,0.5\n0.8,1,0.5\n").unwrap();
    let report = dir.path().join("r.csv");
    let out = ok(&["evaluate", "--input", s(&path), "--ece-bins", "2", "--out", s(&report)]);
    assert_eq!(fs::read_to_string(&report).unwrap(), out);
    let ece_before: f64 = csv_rows(&out)[1][1].parse().unwrap();
    assert!((ece_before - 0.25).abs() <= 1e-15);
}

#[test]
fn evaluate_single_class_leaves_auc_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    fs::write(&path, "p,y,p_cal\n0.2,1,0.3\n0.9,1,0.8\n").unwrap();
    let rows = csv_rows(&ok(&["evaluate", "--input", s(&path)]));
    assert!(!rows[1][1].is_empty() && !rows[1][2].is_empty());
    assert!(rows[1][3].is_empty() && rows[1][4].is_empty() && rows[1][6].is_empty());
}

#[test]
fn evaluate_with_model_matches_apply() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 2000, 2.0, 6);
    let model = dir.path().join("p.json");
    let applied = dir.path().join("a.csv");
    ok(&["fit", "--input", s(&data), "--method", "platt", "--out", s(&model)]);
    ok(&["apply", "--model", s(&model), "--input", s(&data), "--out", s(&applied)]);
    let via_model = csv_rows(&ok(&["evaluate", "--input", s(&data), "--model", s(&model)]));
    let via_column = csv_rows(&ok(&["evaluate", "--input", s(&applied)]));
    assert_eq!(via_model[1][0], "platt");
    assert_eq!(via_model[1][1..], via_column[1][1..]);
}

fn reliability_points(dir: &Path, data: &Path, bins: &str) -> Vec<(usize, f64, f64)> {
    let out = dir.join("rel.csv");
    ok(&["reliability", "--input", s(data), "--bins", bins, "--out", s(&out)]);
    csv_rows(&fs::read_to_string(&out).unwrap())[1..]
        .iter()
        .filter(|r| !r[2].is_empty())
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect()
}

#[test]
fn reliability_of_calibrated_data_hugs_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 20_000, 1.0, 7);
    let points = reliability_points(dir.path(), &data, "10");
    assert_eq!(points.len(), 10);
    for (n, mp, my) in points {
        let se = (mp * (1.0 - mp) / n as f64).sqrt();
        assert!((my - mp).abs() <= 3.0 * se, "bin ({mp}, {my}) n={n}");
    }
}

#[test]
fn reliability_of_overconfident_data_crosses_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "d.csv", 20_000, 3.0, 8);
    let points = reliability_points(dir.path(), &data, "10");
    for &(_, mp, my) in &points[..3] {
        assert!(my > mp, "low bin ({mp}, {my}) should sit above the diagonal");
    }
    for &(_, mp, my) in &points[points.len() - 3..] {
        assert!(my < mp, "high bin ({mp}, {my}) should sit below the diagonal");
    }
}

#[test]
fn reliability_with_one_bin_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let d = CalibrationDataset::new(vec![0.1, 0.4, 0.7], vec![0, 1, 1]).unwrap();
    save_csv(&d, &path).unwrap();
    let points = reliability_points(dir.path(), &path, "1");
    assert_eq!(points.len(), 1);
    let (n, mp, my) = points[0];
    assert_eq!(n, 3);
    assert!((mp - 0.4).abs() < 1e-15 && (my - 2.0 / 3.0).abs() < 1e-15);

    let svg = dir.path().join("r.svg");
    ok(&["reliability", "--input", s(&path), "--out", s(&dir.path().join("x.csv")), "--svg", s(&svg)]);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<line") && text.trim_end().ends_with("</svg>"));
}

#[test]
fn synth_writes_rates_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    ok(&["synth", "--n", "300", "--k", "2", "--seed", "9", "--out", s(&out)]);
    assert_eq!(CsvTable::read(&out).unwrap().header, vec!["p", "y", "q"]);
    assert_eq!(column(&out, "q").len(), 300);
    let bad = forecal(&["synth", "--k", "0.5", "--distortion", "overconfident", "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn benchmark_temperature_on_calibrated_data() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.csv");
    ok(&[
        "benchmark", "--k", "1", "--method", "temperature", "--seeds", "5", "--n-cal", "5000",
        "--n-test", "5000", "--out", s(&report),
    ]);
    let rows = csv_rows(&fs::read_to_string(&report).unwrap());
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "temperature");
    let ece: f64 = rows[1][1].parse().unwrap();
    // base ECE is pure sampling noise here, so relative changes are noisy too
    assert!(ece.abs() < 50.0, "{ece}");
    assert_eq!(rows[1][3], "0");
}

#[test]
fn benchmark_all_methods_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.csv");
    let detail = dir.path().join("d.csv");
    let stdout = ok(&[
        "benchmark", "--seeds", "3", "--n-cal", "3000", "--n-test", "3000", "--out", s(&report),
        "--detail", s(&detail),
    ]);
    assert!(stdout.contains("-75.93") && stdout.contains("-0.65"));
    let rows = csv_rows(&fs::read_to_string(&report).unwrap());
    assert_eq!(
        rows[0].join(","),
        "method,median_ece_delta_pct,se_ece_delta_pct,median_auc_delta_pct,se_auc_delta_pct"
    );
    assert_eq!(rows.len(), 7);
    for r in &rows[1..] {
        if r[0] == "platt" || r[0] == "temperature" {
            assert_eq!((r[3].as_str(), r[4].as_str()), ("0", "0"));
        }
    }
    // every delta in the detail file follows from its before/after columns
    let detail = csv_rows(&fs::read_to_string(&detail).unwrap());
    assert_eq!(detail.len(), 1 + 3 * 6);
    for r in &detail[1..] {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        assert!((f(7) - 100.0 * (f(4) - f(3)) / f(3)).abs() < 1e-9);
        assert!((f(8) - 100.0 * (f(6) - f(5)) / f(5)).abs() < 1e-9);
    }
}

#[test]
fn benchmark_failure_names_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rare.csv");
    let d = CalibrationDataset::new(
        (0..10).map(|i| i as f64 / 10.0).collect(),
        (0..10).map(|i| u8::from(i == 9)).collect(),
    )
    .unwrap();
    save_csv(&d, &path).unwrap();
    let out = forecal(&["benchmark", "--input", s(&path), "--method", "platt", "--seeds", "20"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed "), "{err}");
}

#[test]
fn benchmark_rejects_bad_configuration() {
    for args in [
        &["benchmark", "--seeds", "0"][..],
        &["benchmark", "--cal-fraction", "1.5"][..],
        &["benchmark", "--method", "nosuch"][..],
        &["benchmark", "--threads", "0"][..],
    ] {
        assert_eq!(forecal(args).status.code(), Some(2), "{args:?}");
    }
}
