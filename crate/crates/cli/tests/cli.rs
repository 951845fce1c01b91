use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str], env_tol: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpmkit"));
    cmd.args(args);
    match env_tol {
        Some(t) => cmd.env("CPMKIT_TOL", t),
        None => cmd.env_remove("CPMKIT_TOL"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", p(&out)]);
    let o = run(&all, None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn decompose_identity_channel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.json");
    let map = json!({"in_dim": 2, "out_dim": 2, "kraus": [
        {"rows": 2, "cols": 2, "data": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]}
    ]});
    std::fs::write(&path, map.to_string()).unwrap();
    let o = run(&["decompose", "--in", p(&path), "--no-timestamp"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = stdout_json(&o);
    assert_eq!(report["q"].as_array().unwrap().len(), 1);
    assert!((report["q"][0].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(report["route"], "gram");
    for key in ["v", "sum_q_sq", "orthogonality_residual", "reconstruction_residual"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    assert!(report.get("generated_at").is_none());
}

#[test]
fn decompose_rejects_depolarizing() {
    let dir = tempfile::tempdir().unwrap();
    let dep = gen(dir.path(), "dep.json", &["--what", "depolarizing", "--n", "2"]);
    let o = run(&["decompose", "--in", p(&dep)], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("residual 1.732e0"), "{}", stderr(&o));
}

#[test]
fn decompose_both_routes() {
    let dir = tempfile::tempdir().unwrap();
    let iso = gen(
        dir.path(),
        "iso.json",
        &["--what", "cp-isometry", "--dims", "2,6,2", "--seed", "9"],
    );
    let o = run(&["decompose", "--in", p(&iso), "--route", "both"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = stdout_json(&o);
    assert!(report["route_agreement"]["choi_residual"].as_f64().unwrap() <= 1e-9);
    assert!(report["route_agreement"]["q_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["oracle"]["route"], "choi");
    assert!(report.get("generated_at").is_some());
}

#[test]
fn decompose_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["decompose", "--in", p(&dir.path().join("missing.json"))], None);
    assert_eq!(code(&o), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"in_dim": 2, "out_dim": 2, "kraus": []}"#).unwrap();
    assert_eq!(code(&run(&["decompose", "--in", p(&bad)], None)), 1);
}

#[test]
fn gen_cp_isometry_writes_truth_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let iso = gen(
        dir.path(),
        "iso.json",
        &["--what", "cp-isometry", "--dims", "2,6,2", "--seed", "1"],
    );
    let truth: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("iso.json.truth.json")).unwrap()).unwrap();
    let q: Vec<f64> = serde_json::from_value(truth["q"].clone()).unwrap();
    assert_eq!(q.len(), 2);
    assert!((q.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() <= 1e-12);
    assert_eq!(truth["v"].as_array().unwrap().len(), 2);

    let o = run(&["decompose", "--in", p(&iso), "--no-timestamp"], None);
    let report = stdout_json(&o);
    let mut got: Vec<f64> = serde_json::from_value(report["q"].clone()).unwrap();
    let mut want = q.clone();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-8);
    }

    let o = run(&["gen", "--what", "cp-isometry", "--dims", "3,6,3"], None);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("infeasible"));
}

#[test]
fn canonicity_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let c = gen(
        dir.path(),
        "c.json",
        &["--what", "classical", "--n", "3", "--seed", "2"],
    );
    let o = run(&["canonicity", "--in", p(&c), "--trace"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = stdout_json(&o);
    assert_eq!(report["verdict"], "canonical");
    assert_eq!(report["epsilon_choi_rank"], 1);
    assert!((report["trace"]["q_dot_l"].as_f64().unwrap() - 1.0).abs() <= 1e-8);

    let m = gen(dir.path(), "m.json", &["--what", "mixture", "--n", "2", "--seed", "2"]);
    let o = run(&["canonicity", "--in", p(&m), "--trace"], None);
    assert_eq!(code(&o), 3);
    let report = stdout_json(&o);
    assert_eq!(report["verdict"], "laws-failed");
    assert!(report["trace"].is_null());

    let a = gen(dir.path(), "a.json", &["--what", "matrix-algebra", "--n", "2"]);
    assert_eq!(code(&run(&["canonicity", "--in", p(&a)], None)), 0);
}

#[test]
fn verify_campaigns() {
    let o = run(
        &[
            "verify",
            "--campaign",
            "theorem1",
            "--trials",
            "200",
            "--dims",
            "2,4,2",
            "--no-timestamp",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["passed"], 200);
    assert!(r["max"]["reconstruction"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["results"].as_array().unwrap().len(), 200);
    let indices: Vec<u64> = r["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["index"].as_u64().unwrap())
        .collect();
    assert!(indices.windows(2).all(|w| w[0] < w[1]));

    let o = run(
        &["verify", "--campaign", "theorem2", "--trials", "100", "--dims", "2;3;4"],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["max"]["epsilon_choi_rank"], 1.0);
    assert_eq!(r["min"]["epsilon_choi_rank"], 1.0);

    let o = run(&["verify", "--campaign", "purity-principle", "--trials", "100"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout_json(&o)["max"]["p_sum_gap"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn verify_config_errors_and_failures() {
    assert_eq!(
        code(&run(&["verify", "--campaign", "theorem1", "--trials", "0"], None)),
        1
    );
    assert_eq!(
        code(&run(&["verify", "--campaign", "theorem1", "--dims", "8,16,2"], None)),
        1
    );
    assert_eq!(code(&run(&["verify", "--campaign", "nope"], None)), 1);

    // An absurdly tight tolerance makes every isometry gate fail.
    let o = run(
        &["verify", "--campaign", "theorem1", "--trials", "3", "--dims", "2,4,2"],
        Some("1e-300"),
    );
    assert_eq!(code(&o), 5);
    let r = stdout_json(&o);
    let seed = r["first_failing_seed"].as_u64().unwrap();
    assert!(
        stderr(&o).contains(&format!("first failing seed {seed}")),
        "{}",
        stderr(&o)
    );

    let o = run(&["verify", "--campaign", "theorem1", "--trials", "2"], Some("lots"));
    assert_eq!(code(&o), 1);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |out: &Path| {
        vec![
            "verify".to_string(),
            "--campaign".into(),
            "theorem2".into(),
            "--trials".into(),
            "20".into(),
            "--seed".into(),
            "5".into(),
            "--no-timestamp".into(),
            "--report".into(),
            p(out).to_string(),
        ]
    };
    let a_args = args(&a);
    let b_args = args(&b);
    assert_eq!(
        code(&run(&a_args.iter().map(String::as_str).collect::<Vec<_>>(), None)),
        0
    );
    let mut seq = b_args.clone();
    seq.push("--sequential".into());
    assert_eq!(code(&run(&seq.iter().map(String::as_str).collect::<Vec<_>>(), None)), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

fn comonoid_env(dir: &Path) -> PathBuf {
    let c = gen(dir, "c.json", &["--what", "classical", "--n", "2", "--seed", "3"]);
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(c).unwrap()).unwrap();
    let env = json!({"delta": {"cpmap": rec["delta"]}, "epsilon": {"cpmap": rec["epsilon"]}});
    let path = dir.join("env.json");
    std::fs::write(&path, env.to_string()).unwrap();
    path
}

#[test]
fn eval_checks_equations() {
    let dir = tempfile::tempdir().unwrap();
    let env = comonoid_env(dir.path());
    let rhs = dir.path().join("rhs.txt");
    std::fs::write(&rhs, "id(2)").unwrap();
    let o = run(
        &[
            "eval",
            "--expr",
            "delta >> (epsilon * id(2))",
            "--env",
            p(&env),
            "--against",
            p(&rhs),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout_json(&o)["holds"], true);

    let eq = dir.path().join("eq.json");
    std::fs::write(
        &eq,
        json!({"lhs": "delta >> delta'", "rhs": "scale(2, id(2))"}).to_string(),
    )
    .unwrap();
    let o = run(&["eval", "--equation", p(&eq), "--env", p(&env)], None);
    assert_eq!(code(&o), 6);
    assert_eq!(stdout_json(&o)["holds"], false);

    let o = run(&["eval", "--expr", "delta >> double(zz)", "--env", p(&env)], None);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("`zz`") && stderr(&o).contains("line 1, column 10"),
        "{}",
        stderr(&o)
    );

    std::fs::write(&rhs, "id(3)").unwrap();
    let o = run(&["eval", "--expr", "id(2)", "--against", p(&rhs)], None);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("dimension mismatch"));

    let o = run(&["eval", "--expr", "discard(2"], None);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 1, column 10"));

    let o = run(&["eval", "--expr", "id(2) * prepare(1)", "--no-timestamp"], None);
    assert_eq!(code(&o), 0);
    let map = stdout_json(&o);
    assert_eq!((map["in_dim"].as_u64(), map["out_dim"].as_u64()), (Some(2), Some(2)));
}

#[test]
fn text_format_and_tolerance_flag() {
    let dir = tempfile::tempdir().unwrap();
    let dep = gen(dir.path(), "dep.json", &["--what", "depolarizing", "--n", "2"]);
    // A loose enough tolerance still rejects a residual of sqrt(3).
    assert_eq!(code(&run(&["decompose", "--in", p(&dep), "--tol", "0.5"], None)), 2);
    let iso = gen(dir.path(), "iso.json", &["--what", "cp-isometry", "--dims", "2,4,2"]);
    let o = run(&["decompose", "--in", p(&iso), "--format", "text"], Some("1e-8"));
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("route: gram"));
    assert!(text.contains("sum q^2"));
}
