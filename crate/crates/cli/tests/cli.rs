use std::path::Path;
use std::process::{Command, Output};

use routerq::scenario::{MetricsReport, ReportRow};
use routerq::{Estimate, Metric};
use routerq_cli::chart::{render_svg, series_for};
use routerq_cli::{load_csv, write_csv};

fn routerq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_routerq"))
        .args(args)
        .env_remove("ROUTERQ_SEED")
        .output()
        .expect("spawn routerq")
}

fn small_run(dir: &Path, scenario: &str, seed: &str, parallel: &str) -> Vec<u8> {
    let out = routerq(&[
        "simulate",
        "--scenario",
        scenario,
        "--seed",
        seed,
        "--parallel",
        parallel,
        "--replications",
        "3",
        "--arrivals",
        "5000",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(dir.join(format!("scenario_{scenario}.csv"))).unwrap()
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = routerq(&["simulate", "--scenario", "Z", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
    assert!(!dir.path().join("scenario_Z.csv").exists());
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(routerq(&["simulate"]).status.code(), Some(2));
    assert_eq!(routerq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(routerq(&["chart", "--in", "x.csv", "--metric", "XYZ", "--out", "y.svg"]).status.code(), Some(2));
    assert_eq!(routerq(&["simulate", "--scenario", "A", "--parallel", "0"]).status.code(), Some(2));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "scenario = A\nmu = 12x\n").unwrap();
    let out = routerq(&["simulate", "--scenario", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn scenarios_lists_all_four() {
    let out = routerq(&["scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["A", "B", "C", "D"] {
        assert!(text.contains(&format!("scenario = {id}")), "{text}");
    }
}

#[test]
fn scenario_a_grid_shape_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = small_run(a.path(), "A", "7", "1");
    let second = small_run(b.path(), "A", "7", "3");
    assert_eq!(first, second);

    let report = load_csv(&a.path().join("scenario_A.csv")).unwrap();
    // 2 arms × 10 points × (VT, FF, total) × 4 metrics
    assert_eq!(report.rows.len(), 240);
    assert_eq!(report.arms(), vec!["FCFS".to_string(), "HOL".to_string()]);
    assert!(report.rows.iter().all(|r| r.estimate.replications == 3));

    let manifest = std::fs::read_to_string(a.path().join("scenario_A.manifest")).unwrap();
    assert!(manifest.contains("base_seed = 7"));
    assert!(manifest.contains("rows[FCFS] = 120"));
    assert!(manifest.lines().any(|l| l.starts_with("config_hash = ") && l.len() == "config_hash = ".len() + 64));

    let other = tempfile::tempdir().unwrap();
    assert_ne!(small_run(other.path(), "A", "8", "1"), first);
}

#[test]
fn seed_falls_back_to_environment() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let explicit = small_run(a.path(), "C", "11", "1");
    let out = Command::new(env!("CARGO_BIN_EXE_routerq"))
        .args(["simulate", "--scenario", "C", "--replications", "3", "--arrivals", "5000", "--out"])
        .arg(b.path())
        .env("ROUTERQ_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(b.path().join("scenario_C.csv")).unwrap(), explicit);
}

#[test]
fn chart_from_csv_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    small_run(dir.path(), "D", "5", "1");
    let svg_path = dir.path().join("d_pl.svg");
    let out = routerq(&[
        "chart",
        "--in",
        dir.path().join("scenario_D.csv").to_str().unwrap(),
        "--metric",
        "PL",
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&svg_path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let series = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("series"))
        .count();
    assert_eq!(series, 4);
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("legend")).count(), 4);

    let missing = routerq(&[
        "chart",
        "--in",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--metric",
        "W",
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

fn synthetic(arms: &[&str]) -> MetricsReport {
    let mut rows = Vec::new();
    for arm in arms {
        for k in 1..=10 {
            for class in ["VT", "FF", "total"] {
                let mean = k as f64 * 1e-7;
                rows.push(ReportRow {
                    scenario: "A".into(),
                    arm: arm.to_string(),
                    lambda1: k as f64 * 1e5,
                    class: class.into(),
                    metric: Metric::W,
                    estimate: Estimate {
                        mean,
                        ci95_lo: mean * 0.95,
                        ci95_hi: mean * 1.05,
                        replications: 20,
                    },
                });
            }
        }
    }
    MetricsReport {
        scenario: "A".into(),
        rows,
        failures: vec![],
    }
}

#[test]
fn chart_has_one_series_per_arm_and_class() {
    let report = synthetic(&["FCFS", "HOL"]);
    let series = series_for(&report, Metric::W);
    let labels: Vec<_> = series.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["VT FCFS", "FF FCFS", "VT HOL", "FF HOL"]);
    assert!(series.iter().all(|s| s.points.len() == 10));

    let svg = render_svg(&report, Metric::W).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let whiskers = doc
        .descendants()
        .filter(|n| n.has_tag_name("circle"))
        .count();
    assert_eq!(whiskers, 40);
    assert!(render_svg(&report, Metric::Pl).is_err());
}

#[test]
fn csv_round_trips_through_disk() {
    let report = synthetic(&["c=1", "c=4"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_csv(&report, std::fs::File::create(&path).unwrap()).unwrap();
    let back = load_csv(&path).unwrap();
    let mut sorted = report.clone();
    sorted.sort_rows();
    assert_eq!(back.rows.len(), sorted.rows.len());
    // nine significant digits survive the trip
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * b.abs();
    for (x, y) in back.rows.iter().zip(&sorted.rows) {
        assert_eq!((&x.arm, x.lambda1, &x.class, x.metric), (&y.arm, y.lambda1, &y.class, y.metric));
        assert!(close(x.estimate.mean, y.estimate.mean));
        assert!(close(x.estimate.ci95_lo, y.estimate.ci95_lo));
        assert!(close(x.estimate.ci95_hi, y.estimate.ci95_hi));
        assert_eq!(x.estimate.replications, y.estimate.replications);
    }
}
