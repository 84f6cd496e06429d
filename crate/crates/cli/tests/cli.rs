use std::path::PathBuf;
use std::process::Command as Proc;

use finsler_cli::{
    geodesic, load_model, render, run, sample_points, to_table, Command, Format, GeodesicConfig, RunConfig,
};
use finsler_core::dsl::{Domain, Interval};
use finsler_core::{fixtures, FinslerError};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Proc::new(env!("CARGO_BIN_EXE_finsler")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn cfg(model: &str, command: Command, samples: usize) -> RunConfig {
    RunConfig { samples, ..RunConfig::new(model, command) }
}

#[test]
fn samples_stay_in_the_box() {
    let f0 = fixtures::f0();
    let pts = sample_points(&f0.domain, 10, 42).unwrap();
    assert_eq!(pts.len(), 10);
    assert_eq!(pts[0], f0.domain.lo_corner());
    assert_eq!(pts[1], f0.domain.hi_corner());
    for p in &pts {
        assert!(f0.domain.contains(p));
        assert!(p.y.iter().all(|v| v.abs() >= 0.5));
    }
    let f1 = fixtures::f1();
    for p in sample_points(&f1.domain, 50, 3).unwrap() {
        assert!((1.0..=3.0).contains(&p.x[0]) && (-1.0..=1.0).contains(&p.x[1]));
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let d = fixtures::f2().domain;
    assert_eq!(sample_points(&d, 30, 9).unwrap(), sample_points(&d, 30, 9).unwrap());
    assert_ne!(sample_points(&d, 30, 9).unwrap(), sample_points(&d, 30, 10).unwrap());
}

#[test]
fn empty_box_is_rejected() {
    let d = Domain { x: vec![Interval::new(1.0, 0.0)], y: vec![Interval::new(0.5, 2.0)] };
    let e = sample_points(&d, 5, 0).unwrap_err();
    assert!(matches!(e, finsler_cli::CliError::Engine(FinslerError::EmptyBox)));
    assert!(sample_points(&fixtures::f0().domain, 0, 0).is_err());
}

#[test]
fn shipped_model_files_match_the_fixtures() {
    for name in fixtures::NAMES {
        let path = models_dir().join(format!("{name}.model"));
        let from_file = load_model(path.to_str().unwrap()).unwrap();
        let fixture = fixtures::by_name(name).unwrap();
        assert_eq!(from_file.name, fixture.name);
        assert_eq!(from_file.dim, fixture.dim);
        assert_eq!(from_file.domain, fixture.domain);
        assert_eq!(from_file.zeta, fixture.zeta, "{name}");
        for s in fixture.domain.grid(2) {
            assert_eq!(from_file.l2(&s).unwrap().to_bits(), fixture.l2(&s).unwrap().to_bits(), "{name}");
        }
    }
}

#[test]
fn report_hashes_the_model_source() {
    let path = models_dir().join("f1.model");
    let text = std::fs::read_to_string(&path).unwrap();
    let want: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let r = run(&cfg(path.to_str().unwrap(), Command::VerifyConcurrent, 8)).unwrap();
    assert_eq!(r.model.sha256, want);
}

#[test]
fn flat_geodesic_is_a_straight_line() {
    let t = geodesic(&fixtures::f0(), &[-1.0, 0.5], &[1.5, -0.5], 1.0, 100).unwrap();
    assert!(!t.truncated);
    let end = t.last();
    assert!((end.t - 1.0).abs() < 1e-12);
    assert!((end.x[0] - 0.5).abs() < 1e-12 && (end.x[1] - 0.0).abs() < 1e-12, "{:?}", end.x);
    assert!((end.y[0] - 1.5).abs() < 1e-12 && (end.y[1] + 0.5).abs() < 1e-12);
    assert!(t.l2_drift < 1e-14);
}

#[test]
fn geodesic_leaving_the_box_is_truncated() {
    let t = geodesic(&fixtures::f0(), &[1.5, 0.0], &[2.0, 0.0], 1.0, 100).unwrap();
    assert!(t.truncated);
    assert!(t.last().t < 1.0);
}

#[test]
fn table_is_rendered_from_the_json_report() {
    let r = run(&cfg("fixture:f1", Command::VerifyConcurrent, 6)).unwrap();
    let json: Value = serde_json::from_str(&render(&r, Format::Json).unwrap()).unwrap();
    let table = to_table(&r).unwrap();
    for c in json["checks"].as_array().unwrap() {
        let name = c["name"].as_str().unwrap();
        let line = table.lines().find(|l| l.contains(name)).unwrap_or_else(|| panic!("{name} missing"));
        assert!(line.starts_with(if c["pass"].as_bool().unwrap() { "PASS" } else { "FAIL" }));
    }
    assert!(table.contains("model F1 (dim 2)"));
}

#[test]
fn reports_are_reproducible() {
    for command in [Command::VerifyConcurrent, Command::BetaChange] {
        let a = run(&cfg("fixture:f0", command, 12)).unwrap();
        let b = run(&cfg("fixture:f0", command, 12)).unwrap();
        assert_eq!(a.checks, b.checks);
        assert_eq!(a.scalars, b.scalars);
    }
}

#[test]
fn geodesic_command_reports_conservation() {
    let mut c = cfg("fixture:f1", Command::Geodesic, 1);
    c.geodesic = Some(GeodesicConfig { x0: vec![2.0, 0.0], y0: vec![0.1, 0.2], t_end: 1.0, steps: 200 });
    let r = run(&c).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    assert!(r.trajectory.unwrap().l2_drift < 1e-9);
}

#[test]
fn exit_codes() {
    let (code, out, _) = bin(&["verify-concurrent", "--model", "fixture:f0", "--samples", "10"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["model"]["sha256"].as_str().unwrap().len(), 64);

    let (code, _, _) = bin(&["verify-concurrent", "--model", "fixture:f0-flip", "--samples", "10"]);
    assert_eq!(code, 1);

    let (code, _, err) = bin(&["beta-change", "--model", "fixture:f2", "--samples", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("zeta required"), "{err}");

    let (code, _, err) = bin(&["analyze", "--model", "/nonexistent/m.model"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));

    let (code, _, _) = bin(&["analyze", "--model", "fixture:f0", "--tol", "-1"]);
    assert_eq!(code, 2);

    let (code, _, err) = bin(&["classify", "--model", "fixture:nope"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown fixture"));
}

#[test]
fn out_flag_writes_a_table() {
    let path = std::env::temp_dir().join(format!("finsler-cli-test-{}.txt", std::process::id()));
    let (code, stdout, _) = bin(&[
        "geodesic",
        "--model",
        "fixture:f0",
        "--x0",
        "-1,0",
        "--y0",
        "1,0.5",
        "--steps",
        "50",
        "--format",
        "table",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let _ = std::fs::remove_file(&path);
    assert!(text.contains("PASS  geodesic: L^2 conserved along the flow"), "{text}");
    assert!(text.contains("trajectory  51 points, truncated false"));
}
