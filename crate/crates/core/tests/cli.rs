use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("DN_SEED")
        .output()
        .expect("dn runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_catalog_entry_passes() {
    let dir = TempDir::new().unwrap();
    let o = dn(&["verify", "--catalog", "ex2_1", "--param", "a=pi/3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["pass"], true);
    assert!(s["max_relative"].as_f64().unwrap() <= 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("residual_0.csv")).unwrap();
    assert!(csv.starts_with("z_re,z_im,residual_re,residual_im,scale,relative\n"));
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn mutated_coefficient_fails_verification() {
    let dir = TempDir::new().unwrap();
    let o = dn(&["verify", "--catalog", "ex2_1", "--param", "a=pi/3", "--mutate", "B+=0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["pass"], false);
    assert!(s["max_relative"].as_f64().unwrap() > 1e-3);
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["verify", "--catalog", "ex2_2", "--param", "b=0"],
        &["verify", "--catalog", "no_such_entry"],
        &["verify", "--catalog", "ex2_1", "--grid", "box:1,0,0,1:10"],
        &["verify", "--catalog", "ex2_1", "--mutate", "C+=1"],
        &["nevanlinna", "--catalog", "ex2_1", "--radii", "9..3"],
        &["verify", "--equation", "/nonexistent/eq.json"],
        &["bogus-command"],
    ];
    for args in cases {
        let o = dn(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn equation_and_solution_files() {
    let dir = TempDir::new().unwrap();
    let eq = dir.path().join("eq.json");
    let good = dir.path().join("good.json");
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &eq,
        r#"{"A": "-4*sin(a/2)^2", "B": "cos(a/2)^2", "params": {"a": "0.9"}, "form": "main"}"#,
    )
    .unwrap();
    std::fs::write(&good, r#"{"label": "s", "expr": "sin(a*z + 0.3)", "ledger": []}"#).unwrap();
    std::fs::write(&bad, r#"{"label": "e", "expr": "exp(a*z)", "ledger": []}"#).unwrap();
    let out = dir.path().join("out");
    let eq_s = eq.to_str().unwrap();

    let o = dn(&["verify", "--equation", eq_s, "--solution", good.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = dn(&["verify", "--equation", eq_s, "--solution", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));

    // The same run driven by a config file with paths relative to it.
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "verify", "equation": "eq.json", "solutions": ["good.json"], "grid": "box:-2,2,-2,2:40"}"#)
        .unwrap();
    let o = dn(&["verify", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("residual_0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    // A config written for another command is rejected.
    let o = dn(&["limit", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_output_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_eq!(dn(&["verify", "--catalog", "ex2_3"], d.path()).status.code(), Some(0));
    }
    let read = |d: &TempDir| std::fs::read(d.path().join("residual_0.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn seed_changes_sample_points() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let run = |d: &TempDir, seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_dn"))
            .args(["verify", "--catalog", "ex2_1", "--out"])
            .arg(d.path())
            .env("DN_SEED", seed)
            .output()
            .unwrap()
            .status
    };
    assert!(run(&a, "7").success());
    assert!(run(&b, "8").success());
    let read = |d: &TempDir| std::fs::read_to_string(d.path().join("residual_0.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn nevanlinna_pair_ratio_tends_to_one() {
    let dir = TempDir::new().unwrap();
    let o = dn(&["nevanlinna", "--catalog", "ex2_1", "--radii", "5..50"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    let ratio = s["growth"]["final_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() <= 0.05, "{ratio}");
    assert_eq!(s["verdict"], "tends to 1");
    for f in ["characteristic_0.csv", "characteristic_1.csv", "growth.csv", "growth.svg", "characteristic.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn nevanlinna_mismatched_growth_is_flagged() {
    let dir = TempDir::new().unwrap();
    let o = dn(&["nevanlinna", "--catalog", "ex5_1", "--radii", "1.5..7.5:7"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["growth"]["growth_separated"], true);
    assert_eq!(s["verdict"], "growth-separated");
    assert!((s["growth"]["final_ratio"].as_f64().unwrap() - 1.0).abs() > 0.5);
}

#[test]
fn nevanlinna_constant_function_is_flat() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("c.json");
    std::fs::write(&f, r#"{"label": "three", "expr": "3", "ledger": []}"#).unwrap();
    let o = dn(&["nevanlinna", "--solution", f.to_str().unwrap(), "--radii", "1..4:4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("characteristic_0.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let t: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((t - 3f64.ln()).abs() < 1e-12, "{line}");
    }
}

#[test]
fn casoratian_command_checks_sin_cos_pair() {
    let dir = TempDir::new().unwrap();
    let o = dn(&["casoratian", "--catalog", "ex2_1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    assert!(s["periodicity_defect"].as_f64().unwrap() <= 1e-9);
    assert!(s["quartic_max_relative"].as_f64().unwrap() <= 1e-8);
    let csv = std::fs::read_to_string(dir.path().join("casoratian.csv")).unwrap();
    let h_re: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((h_re + (std::f64::consts::PI / 3.0).sin()).abs() < 1e-10);
}

#[test]
fn limit_commands() {
    let dir = TempDir::new().unwrap();
    let o = dn(&["limit", "--catalog", "ex3_1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    let order = s["experiments"][1]["status"]["order"].as_f64().unwrap();
    assert!((order * 10.0).round() / 10.0 >= 1.0, "{order}");
    assert!(dir.path().join("limit_1.svg").exists());

    let o = dn(&["limit", "--catalog", "ex3_2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["experiments"][0]["status"]["status"], "residual_underflow");

    let cfg = dir.path().join("x.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "indirect", "a_tilde": "1/t^2", "b_tilde": "1", "candidate": "t + 1"}"#,
    )
    .unwrap();
    let o = dn(&["limit", "--config", cfg.to_str().unwrap(), "--eps-steps", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["experiments"][0]["records"].as_array().unwrap().len(), 10);
    let order = s["experiments"][0]["status"]["order"].as_f64().unwrap();
    assert!(order.abs() < 0.1, "{order}");
}

#[test]
fn list_prints_every_entry() {
    let o = Command::new(env!("CARGO_BIN_EXE_dn")).arg("list").output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    for id in ["ex2_1", "ex2_2", "ex2_3", "ex2_4", "ex3_1", "ex3_2", "ex5_1"] {
        assert!(text.contains(id), "{id}");
    }
}

#[test]
fn report_all_verdicts_are_robust_and_catch_corruption() {
    let base = TempDir::new().unwrap();
    let tuned = TempDir::new().unwrap();
    let bad = TempDir::new().unwrap();
    let handles = [
        (vec!["report-all"], base.path().to_path_buf()),
        (vec!["report-all", "--radii", "5..50", "--nodes", "2048"], tuned.path().to_path_buf()),
        (vec!["report-all", "--corrupt-ledger"], bad.path().to_path_buf()),
    ]
    .map(|(args, out)| std::thread::spawn(move || dn(&args, &out).status.code()));
    let codes: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(codes, vec![Some(0), Some(0), Some(1)]);

    let v = json(&base.path().join("verdicts.json"));
    assert_eq!(v["pass"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 10);
    assert_eq!(
        std::fs::read(base.path().join("verdicts.json")).unwrap(),
        std::fs::read(tuned.path().join("verdicts.json")).unwrap()
    );
    let v = json(&bad.path().join("verdicts.json"));
    let failed: Vec<u64> = v["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert_eq!(failed, vec![9]);
    assert!(std::fs::read_to_string(bad.path().join("summary.txt")).unwrap().contains("criterion  9 FAIL"));
}
