use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmm-intraday"))
        .args(args)
        .output()
        .unwrap()
}

fn gen(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "gen",
        "--out-dir",
        dir.to_str().unwrap(),
        "--seed",
        "3",
        "--instances",
        "16",
        "--horizon",
        "8",
        "--k",
        "4",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn gen_writes_a_complete_dataset() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), &[]).status.success());
    let model = gmm_intraday::io::read_model(dir.path().join("model.json")).unwrap();
    assert_eq!(model.len(), 16);
    assert!(model.iter().all(|f| f.k() == 4 && f.horizon() == 8));
    let profiles = gmm_intraday::io::read_profiles(dir.path().join("profiles.csv")).unwrap();
    assert_eq!(profiles.len(), 16);
    assert_eq!(
        gmm_intraday::io::read_conditions(dir.path().join("conditions.csv"))
            .unwrap()
            .len(),
        16
    );
}

#[test]
fn best_case_records_generating_components() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), &["--kind", "best-case"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("generators.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance_id,generator"));
    let ids: Vec<u64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ids.len(), 16);
    assert!(ids.iter().all(|&k| k < 4));
}

#[test]
fn update_at_full_horizon_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), &[]).status.success());
    let model = dir.path().join("model.json");
    let data = dir.path().join("profiles.csv");
    let out = run(&[
        "update",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--t-prime",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T'=8"));
    assert!(out.stdout.is_empty());
}

#[test]
fn update_at_zero_reports_prior_weights() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), &[]).status.success());
    let model = dir.path().join("model.json");
    let data = dir.path().join("profiles.csv");
    let out = run(&[
        "update",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--t-prime",
        "0",
        "--instance",
        "day-00003",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["gamma"], v[0]["prior_weights"]);
    assert_eq!(v[0]["instance_id"], "day-00003");
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = run(&[
        "update",
        "--model",
        missing.to_str().unwrap(),
        "--data",
        "x.csv",
        "--t-prime",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1,").unwrap();
    let out = run(&[
        "update",
        "--model",
        bad.to_str().unwrap(),
        "--data",
        "x.csv",
        "--t-prime",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));

    assert_eq!(run(&["sample", "--t-prime", "1"]).status.code(), Some(1));
    assert_eq!(
        run(&["tune-k", "--seed", "1", "--out", "x.json", "--k-grid", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_with_two() {
    // The observation's squared residual overflows under every component.
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(
        &model,
        r#"{"format_version": 1, "horizon": 2, "instances": [{"id": "a", "k": 1,
            "components": [{"mean": [0.0, 0.0], "cov": {"kind": "diag", "sigma": [1.0, 1.0]}}]}]}"#,
    )
    .unwrap();
    let data = dir.path().join("p.csv");
    std::fs::write(&data, "instance_id,t1,t2\na,1e300,1.0\n").unwrap();
    let out = run(&[
        "update",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--t-prime",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_documents_formats() {
    let out = run(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["model.json", "profiles.csv", "traces.csv", "grid.csv", "tune-k"] {
        assert!(text.contains(needle), "{needle}");
    }
}

#[test]
fn evaluate_respects_the_mask_and_update_times() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), &[]).status.success());
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let out = run(&[
        "evaluate",
        "--model",
        &p("model.json"),
        "--data",
        &p("profiles.csv"),
        "--seed",
        "1",
        "--traces",
        &p("t.csv"),
        "--grid",
        &p("g.csv"),
        "--t-prime",
        "2..=6",
        "--mask-window",
        "2",
        "--levels",
        "0.1,0.5,0.9",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traces = gmm_intraday::io::read_traces(p("t.csv")).unwrap();
    let mae = traces.iter().find(|t| t.metric == "mae").unwrap();
    assert_eq!(mae.values.keys().copied().collect::<Vec<_>>(), vec![2, 3, 4, 5]);
    let nll = traces.iter().find(|t| t.metric == "nll").unwrap();
    assert_eq!(nll.values.keys().copied().collect::<Vec<_>>(), vec![2, 3, 4, 5, 6]);
}
