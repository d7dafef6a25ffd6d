use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

use eb_shrink_cli::render::{parse_csv, RunReport, TableReport};

fn eb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eb-shrink"))
        .args(args)
        .output()
        .expect("spawn eb-shrink")
}

fn ok(args: &[&str]) -> String {
    let out = eb(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn read_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect()
}

const MINIMAL: &str = r#"{"n": 100, "signal": {"kind": "point_mass", "k": 0, "u1": 0},
 "replications": 5, "seed": 1, "estimators": [{"name": "identity", "kind": "identity"}]}"#;

#[test]
fn minimal_spec_identity_risk_is_about_n() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.json", MINIMAL);
    let run: RunReport = serde_json::from_str(&ok(&["run", "--spec", &spec, "--format", "json"])).unwrap();
    let e = &run.report.entries[0];
    // sum of 100 squared standard normals, averaged over 5 replications
    let sd = (2.0 * 100.0f64 / 5.0).sqrt();
    assert!((e.risk - 100.0).abs() < 4.0 * sd, "{}", e.risk);
    assert_eq!(run.provenance.seed, 1);
    assert_eq!(run.provenance.replications, 5);
}

#[test]
fn oversized_k_names_the_field() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"n": 10, "signal": {"kind": "point_mass", "k": 20, "u1": 3}, "estimators": [{"name": "i", "kind": "identity"}]}"#,
    );
    let out = eb(&["run", "--spec", &spec]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[invalid-argument]"), "{err}");
    assert!(err.contains("signal.k"), "{err}");
}

#[test]
fn malformed_spec_reports_line_and_field() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        "{\"n\": 10,\n \"signal\": {\"kind\": \"point_mass\", \"k\": 2, \"u1\": 3},\n \"estimatorz\": []}",
    );
    let out = eb(&["run", "--spec", &spec]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[parse-error]"), "{err}");
    assert!(err.contains("estimatorz") && err.contains("line 3"), "{err}");
}

#[test]
fn spec_matching_a_table1_column_gives_identical_numbers() {
    let dir = TempDir::new().unwrap();
    let table: TableReport =
        serde_json::from_str(&ok(&["table1", "--reps", "3", "--seed", "7", "--format", "json"])).unwrap();
    let spec = write(
        &dir,
        "spec.json",
        r#"{"n": 1000, "signal": {"kind": "point_mass", "k": 50, "u1": 4}, "replications": 3, "seed": 7,
            "estimators": [{"name": "tilde_1.15", "kind": "shrinkage", "v": 1.15}]}"#,
    );
    let run: RunReport = serde_json::from_str(&ok(&["run", "--spec", &spec, "--format", "json"])).unwrap();
    let column = table.columns.iter().find(|c| c.label == "k=50 u1=4").unwrap();
    assert_eq!(column.report.entries, run.report.entries);
}

#[test]
fn table1_has_twelve_columns_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.md");
    let b = dir.path().join("b.md");
    for p in [&a, &b] {
        ok(&["table1", "--reps", "2", "--seed", "11", "--out", p.to_str().unwrap()]);
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let header = text.lines().find(|l| l.starts_with("| estimator")).unwrap();
    assert_eq!(header.matches("k=").count(), 12);
    assert!(text.contains("seed: 11") && text.contains("quad_step: 0.01") && text.contains("window_tau: 10"));
}

#[test]
fn markdown_cells_are_rounded_json_values() {
    let md = ok(&["table1", "--reps", "2"]);
    let table: TableReport = serde_json::from_str(&ok(&["table1", "--reps", "2", "--format", "json"])).unwrap();
    let row = md.lines().find(|l| l.starts_with("| tilde_1.15 |")).unwrap();
    let cells: Vec<i64> = row
        .split('|')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .skip(1)
        .map(|c| c.parse().unwrap())
        .collect();
    let expected: Vec<i64> = table.row("tilde_1.15").iter().map(|x| x.round() as i64).collect();
    assert_eq!(cells, expected);
}

#[test]
fn table2_rows() {
    let md = ok(&["table2", "--reps", "1"]);
    for needle in ["| tilde_1.1 |", "| SO |", "k=100", "k=300", "k=500"] {
        assert!(md.contains(needle), "{needle} missing from\n{md}");
    }
}

#[test]
fn csv_and_json_round_trip() {
    let table: TableReport = serde_json::from_str(&ok(&["table1", "--reps", "2", "--format", "json"])).unwrap();
    let rows = parse_csv(&ok(&["table1", "--reps", "2", "--format", "csv"])).unwrap();
    assert_eq!(rows.len(), 12);
    for (row, col) in rows.iter().zip(&table.columns) {
        let e = &col.report.entries[0];
        assert_eq!(row.config, col.label);
        assert_eq!(row.estimator, e.name);
        assert_eq!(row.risk, e.risk);
        assert_eq!(row.se, e.se);
        assert_eq!(row.ratio, e.ratio);
    }
    let again: TableReport = serde_json::from_str(&serde_json::to_string(&table).unwrap()).unwrap();
    assert_eq!(again, table);
}

#[test]
fn csv_header_and_precision() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.json", MINIMAL);
    let csv = ok(&["run", "--spec", &spec, "--format", "csv"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("estimator,config,risk,se,ratio"));
    let risk = lines.next().unwrap().split(',').nth(2).unwrap();
    let mantissa = risk.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{risk}");
}

#[test]
fn heavy_preset_needs_the_flag() {
    let out = eb(&["table3"]);
    assert_eq!(out.status.code(), Some(5));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[refused]") && err.contains("--heavy"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn quad_step_override_reaches_the_header() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.json", MINIMAL);
    let md = ok(&["--quad-step", "0.02", "--window-tau", "0", "run", "--spec", &spec]);
    assert!(
        md.contains("quad_step: 0.02") && md.contains("window_tau: exact"),
        "{md}"
    );
    let out = eb(&["--quad-step", "1", "run", "--spec", &spec]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn denoise_identical_values_stay_put() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", &"1.5\n".repeat(20));
    let out = ok(&["denoise", "--input", &input]);
    let vals: Vec<f64> = out.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals.len(), 20);
    for v in vals {
        assert!((v - 1.5).abs() < 1e-12, "{v}");
    }
}

#[test]
fn denoise_shuffle_carries_through() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ys: Vec<f64> = (0..500)
        .map(|i| if i % 10 == 0 { 3.0 } else { 0.0 } + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut perm: Vec<usize> = (0..ys.len()).collect();
    perm.shuffle(&mut rng);
    let text = |order: &[usize]| order.iter().map(|&i| format!("{}\n", ys[i])).collect::<String>();
    let a = dir.path().join("a.out");
    let b = dir.path().join("b.out");
    let ident: Vec<usize> = (0..ys.len()).collect();
    ok(&[
        "denoise",
        "--input",
        &write(&dir, "a.txt", &text(&ident)),
        "--out",
        a.to_str().unwrap(),
    ]);
    ok(&[
        "denoise",
        "--input",
        &write(&dir, "b.txt", &text(&perm)),
        "--out",
        b.to_str().unwrap(),
    ]);
    let (a, b) = (read_values(&a), read_values(&b));
    for (j, &i) in perm.iter().enumerate() {
        assert!(
            (b[j] - a[i]).abs() <= 1e-12 * a[i].abs().max(1.0),
            "{} vs {}",
            b[j],
            a[i]
        );
    }
}

#[test]
fn denoise_gaussian_input_follows_linear_rule() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 100_000;
    let v = 1.1;
    let ys: Vec<f64> = (0..n).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let text: String = ys.iter().map(|y| format!("{y}\n")).collect();
    let input = write(&dir, "in.txt", &text);
    let out = dir.path().join("out.txt");
    ok(&[
        "denoise",
        "--input",
        &input,
        "--v",
        "1.1",
        "--variant",
        "hat",
        "--out",
        out.to_str().unwrap(),
    ]);
    let est = read_values(&out);
    assert_eq!(est.len(), n);
    let slope = 1.0 - 1.0 / (v + 3.0);
    let worst = ys
        .iter()
        .zip(&est)
        .filter(|(y, _)| y.abs() <= 3.0)
        .map(|(y, e)| (e - slope * y).abs())
        .fold(0.0f64, f64::max);
    // every data point, not a coarse grid, so allow more than the grid-based bound
    assert!(worst <= 0.1, "max deviation {worst}");
}

#[test]
fn denoise_bad_line_is_reported_by_number() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", "1.0\n2.0\nthree\n4.0\n");
    let out = eb(&["denoise", "--input", &input]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn denoise_refuses_a_single_value() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", "1.0\n");
    let out = eb(&["denoise", "--input", &input]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[refused]"));
}

#[test]
fn missing_input_is_an_io_error() {
    let out = eb(&["denoise", "--input", "/nonexistent/values.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[io-error]"));
}
