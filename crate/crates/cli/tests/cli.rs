use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn regime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regime"))
        .args(args)
        .output()
        .expect("failed to spawn regime")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = regime(args);
    assert!(
        o.status.success(),
        "regime {args:?} failed\nstdout: {}\nstderr: {}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn reducible_run_writes_outputs_and_freezes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("red");
    ok(&[
        "run",
        "--scenario",
        "reducible",
        "--out",
        out.to_str().unwrap(),
        "--plot",
    ]);
    for f in [
        "run.csv",
        "events.jsonl",
        "summary.json",
        "effective_config.toml",
        "panel_u.svg",
        "panel_R.svg",
        "panel_rho_phi.svg",
        "panel_B.svg",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let s = summary(&out);
    assert_eq!(s["n_switches_final_third"], 0);
    assert!(s["inter_switch_cv"].is_null());
    let csv = fs::read_to_string(out.join("run.csv")).unwrap();
    assert!(
        csv.starts_with("t,u,v,theta1,theta2,rho,phi,R,m_freeze,m_cycle,m_mono,B,S,gate,regime\n")
    );
    // one row per dt_out over [0, 20000]
    assert_eq!(csv.lines().count(), 1 + 40_001);
}

#[test]
fn irreducible_run_keeps_switching() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("irr");
    ok(&[
        "run",
        "--scenario",
        "irreducible",
        "--horizon",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    let s = summary(&out);
    assert!(s["n_switches"].as_u64().unwrap() >= 6, "{s}");
    let events = fs::read_to_string(out.join("events.jsonl")).unwrap();
    assert_eq!(
        events.lines().count() as u64,
        s["n_switches"].as_u64().unwrap()
    );
    for line in events.lines() {
        let e: Value = serde_json::from_str(line).unwrap();
        assert!(e["t_minus"].as_f64().unwrap() <= e["t_plus"].as_f64().unwrap());
        assert_ne!(e["from"], e["to"]);
    }
}

#[test]
fn swept_run_is_regular() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sw");
    ok(&["run", "--scenario", "swept", "--out", out.to_str().unwrap()]);
    let cv = summary(&out)["inter_switch_cv"]
        .as_f64()
        .expect("cv present");
    assert!(cv < 0.2, "cv {cv}");
}

#[test]
fn effective_config_reproduces_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&[
        "run",
        "--scenario",
        "irreducible",
        "--horizon",
        "3000",
        "--set",
        "s_c=0.97",
        "--out",
        a.to_str().unwrap(),
    ]);
    let cfg = a.join("effective_config.toml");
    ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(
        fs::read(a.join("run.csv")).unwrap(),
        fs::read(b.join("run.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("events.jsonl")).unwrap(),
        fs::read(b.join("events.jsonl")).unwrap()
    );
    let text = fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("s_c = 0.97"));
    assert!(text.contains("horizon = 3000"));
}

#[test]
fn invalid_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    for (set, field) in [
        ("sigma_lo=0.5", "sigma"),
        ("dt=60", "dt"),
        ("horizon=-1", "horizon"),
        ("nope=1", "nope"),
    ] {
        let o = regime(&["run", "--set", set, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{set}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{set}: {err}");
    }
    let missing = regime(&[
        "run",
        "--config",
        tmp.path().join("absent.toml").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn config_file_values_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "scenario = \"swept\"\nhorizon = 1000.0\n").unwrap();
    let out = tmp.path().join("o");
    ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    let eff = fs::read_to_string(out.join("effective_config.toml")).unwrap();
    assert!(eff.contains("scenario = \"swept\""));
    assert!(eff.contains("horizon = 500"));
    assert_eq!(
        fs::read_to_string(out.join("run.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 1001
    );
}

#[test]
fn default_scan_reports_onset() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ok(&["scan", "--jobs", "4", "--out", tmp.path().to_str().unwrap()]);
    let line = text.lines().find(|l| l.starts_with("onset:")).unwrap();
    let mid: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((0.25..=0.45).contains(&mid), "{line}");
    let csv = fs::read_to_string(tmp.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 62);
}

#[test]
fn scan_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let o = regime(&[
        "scan",
        "--min",
        "1",
        "--max",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let text = ok(&[
        "scan",
        "--min",
        "-1.5",
        "--max",
        "-1",
        "--n-points",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(text.contains("onset: none"));
    let csv = fs::read_to_string(tmp.path().join("scan.csv")).unwrap();
    let labels: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(labels, ["Q", "Q"]);
}

#[test]
fn check_subjects_pass() {
    let text = ok(&["check", "minimax"]);
    assert!(text.contains("minimax: ok"));

    let text = ok(&["check", "oja", "--c", "2,0,0,1"]);
    let angle: f64 = text
        .lines()
        .find(|l| l.starts_with("angle"))
        .and_then(|l| l.split_whitespace().nth(4))
        .unwrap()
        .parse()
        .unwrap();
    assert!(angle < 1e-3);

    let text = ok(&[
        "check",
        "descent",
        "--field",
        "rotation",
        "--v",
        "quadratic",
        "--omega",
        "0.25",
    ]);
    assert!(text.contains("violations: 0"), "{text}");
    assert!(text.contains("expected 0.5"), "{text}");

    let tmp = tempfile::tempdir().unwrap();
    ok(&[
        "check",
        "curl",
        "--field",
        "baseline",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(tmp.path().join("curl.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 40 * 40);
}

#[test]
fn failed_invariants_exit_nonzero() {
    let o = regime(&["check", "oja", "--steps", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAILED"));

    let o = regime(&["check", "minimax", "--dt", "0.5"]);
    assert_eq!(o.status.code(), Some(1));

    // rotation is not a descent direction once the tolerance is negative
    let o = regime(&["check", "descent", "--field", "rotation", "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = regime(&["check", "oja", "--c", "2,1,0,1"]);
    assert_eq!(o.status.code(), Some(2));
}
