use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polychaos::experiment::{read_report_str, Table};

fn polychaos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polychaos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const RADEMACHER: &str = r#"
scenario = "prohorov_negative"
degree = 1
family = "mean_field"
n_list = [10, 50]
samples = 20000
seed = 1
bins = 400
range = [-4.0, 4.0]
law_x = { type = "rademacher" }
"#;

const GAUSSIAN_OFFDIAG: &str = r#"
scenario = "fourth_moment_equiv"
degree = 2
family = "offdiag_constant"
n_list = [4, 16]
samples = 10000
law_x = { type = "gaussian" }
"#;

#[test]
fn scenario_writes_report_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", RADEMACHER);
    let out = dir.path().join("out.csv");
    let o = polychaos(&["scenario", "prohorov_negative", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));

    let blocks = read_report_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(blocks.len(), 1);
    assert_eq!(blocks[0].scenario, "prohorov_negative");
    match &blocks[0].table {
        Table::Distance(rows) => {
            assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), [10, 50]);
            assert!(rows.iter().all(|r| r.tv_hist >= 0.9 && r.bins == 400));
        }
        other => panic!("unexpected table {other:?}"),
    }
}

#[test]
fn failed_predicate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", GAUSSIAN_OFFDIAG);
    let o = polychaos(&["scenario", "fourth_moment_equiv", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
    let blocks = read_report_str(&stdout(&o)).unwrap();
    assert!(blocks.iter().any(|b| matches!(b.table, Table::Moment(_))));
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", RADEMACHER);
    assert_eq!(polychaos(&["scenario", "no_such_scenario", "--config", &cfg]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", "degree = 0\n");
    assert_eq!(polychaos(&["scenario", "prohorov_negative", "--config", &bad]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    let o = polychaos(&["scenario", "prohorov_negative", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_independent_of_workers_and_seed_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", RADEMACHER);
    let run = |workers: &str, seed: &str| {
        stdout(&polychaos(&["scenario", "prohorov_negative", "--config", &cfg, "--workers", workers, "--seed", seed]))
    };
    let base = run("1", "7");
    assert_eq!(base, run("3", "7"));
    assert!(base.contains("seed=7"));
    assert_ne!(base, run("1", "8"));
}

#[test]
fn append_adds_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", RADEMACHER);
    let out = dir.path().join("out.csv");
    let out = out.to_str().unwrap();
    for _ in 0..2 {
        let o = polychaos(&["scenario", "prohorov_negative", "--config", &cfg, "--out", out, "--append"]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(read_report_str(&fs::read_to_string(out).unwrap()).unwrap().len(), 2);
}

#[test]
fn moments_wick_excess() {
    let o = polychaos(&["moments", "--family", "offdiag_constant", "--degree", "2", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let blocks = read_report_str(&stdout(&o)).unwrap();
    let Table::Moment(rows) = &blocks[0].table else { panic!("expected moments") };
    assert!((rows[0].second - 1.0).abs() < 1e-12);
    assert!((rows[0].excess - 7.0).abs() < 1e-9);
}

#[test]
fn moments_from_tensor_file_by_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    // x1 x2 with unit variance.
    let t = write(dir.path(), "t.json", r#"{"degree":2,"dimension":2,"entries":[[[1,2],0.5]]}"#);
    let o = polychaos(&["moments", "--tensor", &t, "--method", "enumeration", "--law", r#"{"type":"rademacher"}"#]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let blocks = read_report_str(&stdout(&o)).unwrap();
    let Table::Moment(rows) = &blocks[0].table else { panic!("expected moments") };
    assert!((rows[0].fourth - 1.0).abs() < 1e-12);
    assert!((rows[0].excess + 2.0).abs() < 1e-12);
}

#[test]
fn distances_between_files() {
    let dir = tempfile::tempdir().unwrap();
    let x: String = (0..200).map(|i| format!("{}\n", (i as f64 - 99.5) / 50.0)).collect();
    let y: String = (0..200).map(|i| format!("{}\n", (i as f64 + 25.0 - 99.5) / 50.0)).collect();
    let xp = write(dir.path(), "x.txt", &x);
    let yp = write(dir.path(), "y.txt", &y);
    let o = polychaos(&["distances", "--x", &xp, "--y", &yp, "--bins", "20", "--range", "-3,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let blocks = read_report_str(&stdout(&o)).unwrap();
    let Table::Distance(rows) = &blocks[0].table else { panic!("expected distances") };
    assert!((rows[0].w1 - 0.5).abs() < 1e-9);
    assert!((rows[0].ks - 0.125).abs() < 1e-12);
    assert_eq!(rows[0].bins, 20);

    let empty = write(dir.path(), "empty.txt", "");
    assert_eq!(polychaos(&["distances", "--x", &empty]).status.code(), Some(2));
}

#[test]
fn jacobi_check_sweep_and_literal() {
    let o = polychaos(&["jacobi-check", "--cases", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("FAIL"));

    let dir = tempfile::tempdir().unwrap();
    // x1^2
    let p = write(dir.path(), "p.json", "[[[2], 1, 1]]");
    let o = polychaos(&["jacobi-check", "--poly", &p]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("lambda = 0: 1/3"), "{text}");
    assert!(text.contains("lambda = 6: x1^2 - 1/3"), "{text}");
}

#[test]
fn scans_emit_grids() {
    let o = polychaos(&[
        "cw-scan", "--family", "mean_field", "--degree", "1", "--n", "2", "--hi", "0.1", "--lo", "1e-4", "--samples", "20000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let blocks = read_report_str(&stdout(&o)).unwrap();
    let Table::Scan(rows) = &blocks[0].table else { panic!("expected scan") };
    assert_eq!(rows.len(), 7);

    let o = polychaos(&[
        "claim3-scan", "--family", "dominant_pair", "--degree", "2", "--n", "2", "--hi", "1", "--lo", "1e-4", "--samples", "20000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    // Three decades are too few for the reciprocal scan.
    let o = polychaos(&["claim3-scan", "--family", "mean_field", "--degree", "1", "--n", "2", "--hi", "0.1", "--lo", "1e-4"]);
    assert_eq!(o.status.code(), Some(2));
}
