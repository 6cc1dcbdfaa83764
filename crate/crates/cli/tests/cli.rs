use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use intervention::finite_core::game_to_json;
use intervention::imperfect_example::ImperfectParams;
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intervention")).args(args).output().expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    run(&all)
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn gatekeeper_file(dir: &Path, p: f64) -> PathBuf {
    let path = dir.join(format!("gatekeeper_{p}.json"));
    let game = ImperfectParams::reference(p).unwrap().game();
    fs::write(&path, serde_json::to_string(&game_to_json(&game)).unwrap()).unwrap();
    path
}

fn csv_rows(path: PathBuf) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn all_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn finite_symmetric_search_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let game = gatekeeper_file(tmp.path(), 0.96);
    let out = tmp.path().join("out");
    let res = run_in(&out, &["finite", game.to_str().unwrap(), "--symmetric"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = read_json(out.join("summary.json"));
    let v_star = summary["v_star"].as_f64().unwrap();
    assert!((v_star - 4.80808).abs() < 2e-3, "v_star = {v_star}");
    for key in ["v_bar", "v_tilde", "witness_rule", "witness_profile", "grid_slack"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert!(summary["gap_certificate"].is_object());
}

#[test]
fn finite_rejects_non_stochastic_signal_rows() {
    let tmp = TempDir::new().unwrap();
    let path = gatekeeper_file(tmp.path(), 0.96);
    let mut doc = read_json(path.clone());
    doc["signal_dist"]["a_L,a_L"] = serde_json::json!([0.9, 0.2]);
    fs::write(&path, doc.to_string()).unwrap();
    let res = run_in(&tmp.path().join("out"), &["finite", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("a_L,a_L"));
}

#[test]
fn finite_names_missing_key() {
    let tmp = TempDir::new().unwrap();
    let path = gatekeeper_file(tmp.path(), 0.96);
    let mut doc = read_json(path.clone());
    doc.as_object_mut().unwrap().remove("signals");
    fs::write(&path, doc.to_string()).unwrap();
    let res = run_in(&tmp.path().join("out"), &["finite", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("signals"));
}

#[test]
fn finite_without_intervention_capability() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("pd.json");
    let mut dist = serde_json::Map::new();
    let mut payoffs = serde_json::Map::new();
    let table = [("c", "c", 3.0, 3.0), ("c", "d", 0.0, 4.0), ("d", "c", 4.0, 0.0), ("d", "d", 1.0, 1.0)];
    for (a, b, u1, u2) in table {
        dist.insert(format!("{a},{b}"), serde_json::json!([1.0]));
        payoffs.insert(format!("(idle,{a},{b},y)"), serde_json::json!([u1 + u2, u1, u2]));
    }
    let doc = serde_json::json!({
        "num_users": 2,
        "user_actions": [["c", "d"], ["c", "d"]],
        "intervention_actions": ["idle"],
        "no_intervention_action": "idle",
        "signals": ["y"],
        "signal_dist": dist,
        "payoffs": payoffs,
    });
    fs::write(&path, doc.to_string()).unwrap();
    let out = tmp.path().join("out");
    let res = run_in(&out, &["finite", path.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = read_json(out.join("summary.json"));
    assert_eq!(summary["v_star"], summary["v_tilde"]);
    assert_eq!(summary["v_star"].as_f64(), Some(2.0));
    assert_eq!(summary["v_bar"].as_f64(), Some(6.0));
}

#[test]
fn imperfect_reproduces_three_regimes() {
    let tmp = TempDir::new().unwrap();
    let res = run_in(tmp.path(), &["imperfect"]);
    assert!(res.status.success());
    let expected = [
        (0.9, "f", "max_tilde_w_alpha_bar", 4.284),
        (0.94, "f", "max_tilde_w_alpha_bar", 4.481818),
        (0.96, "e", "max_tilde_w1", 4.808081),
    ];
    for (p, case, formula, v_star) in expected {
        let report = read_json(tmp.path().join(format!("classification_p{p}.json")));
        assert_eq!(report["case"], case);
        assert_eq!(report["formula"], formula);
        assert!((report["v_star"].as_f64().unwrap() - v_star).abs() < 1e-6);
        let (header, rows) = csv_rows(tmp.path().join(format!("fig4_p{p}.csv")));
        assert_eq!(header, "alpha,w0,v_bar");
        assert_eq!(rows.len(), 101);
    }
    let report = read_json(tmp.path().join("classification_p0.96.json"));
    assert!((report["gap"].as_f64().unwrap() - 0.0319192).abs() < 1e-6);
}

#[test]
fn imperfect_validation_errors() {
    let tmp = TempDir::new().unwrap();
    let res = run_in(tmp.path(), &["imperfect", "--param", "p=0.8"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("q < p < 1"));
    let res = run_in(tmp.path(), &["imperfect", "--param", "s=1"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run_in(tmp.path(), &["imperfect", "--frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run_in(tmp.path(), &["imperfect", "--tol", "0.1"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn wireless_regions_and_benchmarks() {
    let tmp = TempDir::new().unwrap();
    let res = run_in(tmp.path(), &["wireless"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let (header, full) = csv_rows(tmp.path().join("fig5_a0_12.csv"));
    assert_eq!(header, "a1,a2,member");
    assert_eq!(full.len(), 121 * 121);
    assert!(full.iter().all(|r| r[2] == 1.0));

    let (_, none) = csv_rows(tmp.path().join("fig5_a0_0.csv"));
    let members: Vec<(f64, f64)> = none.iter().filter(|r| r[2] == 1.0).map(|r| (r[0], r[1])).collect();
    assert_eq!(members, vec![(4.0, 4.0), (12.0, 12.0)]);

    let (header, fig6) = csv_rows(tmp.path().join("fig6.csv"));
    assert_eq!(header, "a_i,u_with_rule,u_no_intervention");
    let argmax = fig6.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!((argmax[0] - 3.0).abs() <= 0.1 + 1e-12);

    let marks = read_json(tmp.path().join("benchmarks.json"));
    assert_eq!(marks["v_bar"].as_f64(), Some(18.0));
    assert_eq!(marks["v_tilde"].as_f64(), Some(16.0));
    assert!((marks["a0_min"].as_f64().unwrap() - (9.0 - 6.0 * 2f64.sqrt())).abs() < 1e-12);
    assert!((marks["v_star"].as_f64().unwrap() - 18.0).abs() < 1e-9);
}

#[test]
fn wireless_validation_errors() {
    let tmp = TempDir::new().unwrap();
    let res = run_in(tmp.path(), &["wireless", "--param", "a_max=5"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("q / 2b"));
    let res = run_in(tmp.path(), &["wireless", "--grid-step", "0.7"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run_in(tmp.path(), &["wireless", "--param", "N=1.5"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let game = gatekeeper_file(tmp.path(), 0.94);
    let game = game.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        assert!(run_in(&out.join("finite"), &["finite", game, "--rule-step", "0.05"]).status.success());
        assert!(run_in(&out.join("imperfect"), &["imperfect"]).status.success());
        assert!(run_in(&out.join("wireless"), &["wireless", "--grid-step", "0.5"]).status.success());
    }
    for sub in ["finite", "imperfect", "wireless"] {
        assert_eq!(all_files(&a.join(sub)), all_files(&b.join(sub)), "{sub} differs");
    }
}
