use std::process::{Command, Output};

fn gsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsa-dof"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bound_k3_is_three_m() {
    let o = gsa(&["bound", "--k", "3", "--m", "2", "--n", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("upper bound: 6 (6.000000)"));
}

#[test]
fn bound_json_fields_and_order() {
    let o = gsa(&["bound", "--k", "5", "--m", "10", "--n", "21", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["upper"], "420/11");
    assert_eq!(v["regime"], "slope");
    assert_eq!(v["beta"], 2);
    assert!(text.find("\"upper\"").unwrap() < text.find("\"regime\"").unwrap());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(gsa(&["bound", "--k", "2", "--m", "1", "--n", "1"]).status.code(), Some(2));
    assert_eq!(gsa(&["bound", "--k", "4", "--m", "3"]).status.code(), Some(2));
    assert_eq!(gsa(&["bound", "--k", "4", "--m", "x", "--n", "3"]).status.code(), Some(2));
    assert_eq!(
        gsa(&["montecarlo", "--k", "4", "--m", "3", "--n", "7", "--beta", "2", "--seeds", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(gsa(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn synthesize_corner_passes() {
    let o = gsa(&["synthesize", "--k", "4", "--m", "3", "--n", "7", "--beta", "2", "--seed", "1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["alignment_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["passed"], true);

    let o = gsa(&["synthesize", "--k", "5", "--m", "4", "--n", "13", "--beta", "3", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn synthesize_below_corner_exits_1() {
    let o = gsa(&["synthesize", "--k", "5", "--m", "4", "--n", "11", "--beta", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("needs N \u{2265} 13"), "{err}");
}

#[test]
fn synthesize_writes_scheme_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scheme.json");
    let o = gsa(&[
        "synthesize", "--k", "5", "--m", "5", "--n", "11", "--beta", "2", "--seed", "3", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let scheme = gsa_dof::gsa::GsaScheme::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(scheme.p().shape(), (10, 11));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let a = gsa(&["sweep", "--k", "5", "--grid-auto", "40"]);
    let b = gsa(&["sweep", "--k", "5", "--grid-auto", "40"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_user_grid_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k4.csv");
    let o = gsa(&["sweep", "--k", "4", "--grid", "1,2,7/3,3", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
    assert!(text.contains("\n7/3,"));
    assert_eq!(gsa(&["sweep", "--k", "4", "--grid", "2,1"]).status.code(), Some(1));
}

#[test]
fn sweep_k4_all_tight() {
    let o = gsa(&["sweep", "--k", "4", "--grid-auto", "50"]);
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn montecarlo_csv_deterministic_and_low_confidence_flag() {
    let args = ["montecarlo", "--k", "4", "--m", "3", "--n", "7", "--beta", "2", "--seeds", "1", "--snr-grid", "30,40"];
    let a = gsa(&args);
    let b = gsa(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("K,M,N,beta,t,seed,snr_db,relay_err,user_err,sum_rate\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(String::from_utf8(a.stderr).unwrap().contains("low-confidence"));
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["montecarlo", "--k", "4", "--m", "3", "--n", "7", "--beta", "2", "--seeds", "4", "--snr-grid", "20,30,40"];
    let one = Command::new(env!("CARGO_BIN_EXE_gsa-dof"))
        .args(args)
        .env("GSA_DOF_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_gsa-dof"))
        .args(args)
        .env("GSA_DOF_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(one.stdout, many.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_gsa-dof"))
        .args(args)
        .env("GSA_DOF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
