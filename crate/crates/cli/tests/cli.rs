use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_returnlab"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn pressure_reports_golden_mean_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["pressure"], Some(r#"{"sft": {"fixture": "GOLD"}}"#));
    assert!(out.status.success());
    let r = json(dir.path(), "report.json");
    assert!((r["pressure"].as_f64().unwrap() - 0.481212).abs() < 5e-7);
    assert_eq!(r["meta"]["command"], "pressure");
    assert_eq!(r["meta"]["config_hash"].as_str().unwrap().len(), 64);

    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["pressure"], Some(r#"{"holes": [{"words": ["00"]}]}"#));
    assert!(out.status.success());
    let r = json(dir.path(), "report.json");
    assert!((r["pressure"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!((r["holes"][0]["survivor_pressure"].as_f64().unwrap() - 0.481212).abs() < 5e-7);
}

#[test]
fn rate_writes_curves_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"target": {"cylinder": {"words": ["0"]}}, "rate": {"u": [2, 3], "complement": true}}"#;
    let out = run(dir.path(), &["rate"], Some(cfg));
    assert!(out.status.success());
    let rate = read(dir.path(), "rate.csv");
    let mut lines = rate.lines();
    assert!(lines.next().unwrap().starts_with("# {\"command\":\"rate\""));
    assert_eq!(lines.next().unwrap(), "u,phi,alpha,truncated,phi_complement,gap");
    let row3: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    assert_eq!(row3[0], "3");
    assert!((row3[1].parse::<f64>().unwrap() + 0.169899).abs() < 1e-6);
    let domain = json(dir.path(), "domain.json");
    assert!((domain["alpha_max"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn rerunning_a_config_reproduces_the_csv() {
    let cfg = r#"{"target": {"cylinder": {"words": ["01"]}}, "rate": {"points": 9}}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), &["rate"], Some(cfg)).status.success());
    assert!(run(b.path(), &["rate"], Some(cfg)).status.success());
    assert_eq!(read(a.path(), "cgf.csv"), read(b.path(), "cgf.csv"));
    assert_eq!(read(a.path(), "rate.csv"), read(b.path(), "rate.csv"));
}

#[test]
fn open_set_rate_without_convergence_exits_4_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"target": {"open_set": {"fixture": "FUTURE11", "max_depth": 5}}, "rate": {"alpha": [0.1, -0.5]}}"#;
    let out = run(dir.path(), &["rate"], Some(cfg));
    assert_eq!(out.status.code(), Some(4));
    let cgf = read(dir.path(), "cgf.csv");
    let rows: Vec<Vec<&str>> = cgf.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    // outer is the cylinder [0] itself; inner lies above it for α > 0
    assert!((rows[0][2].parse::<f64>().unwrap() - 0.211122548861).abs() < 1e-11);
    assert!(rows[0][1].parse::<f64>().unwrap() > rows[0][2].parse::<f64>().unwrap());
    assert_eq!(rows[0][3], "");
}

#[test]
fn explicit_union_has_identical_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"target": {"open_set": {"union": {"words": ["01", "10"]}, "max_depth": 3}}, "rate": {"alpha": [-0.5, 0.1]}}"#;
    let out = run(dir.path(), &["rate"], Some(cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for line in read(dir.path(), "cgf.csv").lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], f[2]);
        assert_eq!(f[2], f[3]);
    }
}

#[test]
fn simulate_is_deterministic_and_honours_the_seed_flag() {
    let cfg = r#"{"target": {"cylinder": {"words": ["0"]}}, "simulate": {"alpha": [0.2], "n": 20, "trials": 3000, "raw": true}}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert!(run(a.path(), &["simulate", "--seed", "5"], Some(cfg)).status.success());
    assert!(run(b.path(), &["simulate", "--seed", "5", "--threads", "2"], Some(cfg)).status.success());
    assert!(run(c.path(), &["simulate", "--seed", "6"], Some(cfg)).status.success());
    assert_eq!(read(a.path(), "estimates.json"), read(b.path(), "estimates.json"));
    assert_eq!(read(a.path(), "raw.csv"), read(b.path(), "raw.csv"));
    assert_ne!(read(a.path(), "raw.csv"), read(c.path(), "raw.csv"));
    let e = json(a.path(), "estimates.json");
    assert_eq!(e["meta"]["seed"], 5);
    assert_eq!(read(a.path(), "raw.csv").lines().nth(1).unwrap(), "trial,n,r_n,branch");
}

#[test]
fn open_set_simulation_respects_the_sandwich() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"target": {"open_set": {"fixture": "FUTURE11"}}, "simulate": {"alpha": [0.1], "n": 10, "trials": 1000, "depth": 3}}"#;
    assert!(run(dir.path(), &["simulate"], Some(cfg)).status.success());
    let e = json(dir.path(), "estimates.json");
    assert_eq!(e["sandwich_violations"], 0);
    assert_eq!(e["cgf"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_subset_passes_and_zero_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify"], Some(r#"{"verify": {"criteria": [1, 4, 7]}}"#));
    assert!(out.status.success());
    let v = json(dir.path(), "verdict.json");
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["results"].as_array().unwrap().len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"verify": {"criteria": [1, 4], "tolerance_scale": 0}}"#;
    let out = run(dir.path(), &["verify"], Some(cfg));
    assert_eq!(out.status.code(), Some(1));
    let v = json(dir.path(), "verdict.json");
    assert_eq!(v["all_passed"], false);
}

#[test]
fn verify_verdicts_do_not_depend_on_the_seed_override() {
    let cfg = r#"{"verify": {"criteria": [2, 9]}}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path(), &["verify", "--seed", "1"], Some(cfg));
    run(b.path(), &["verify", "--seed", "1"], Some(cfg));
    let passed = |d: &Path| -> Vec<bool> {
        json(d, "verdict.json")["results"].as_array().unwrap().iter().map(|r| r["passed"].as_bool().unwrap()).collect()
    };
    assert_eq!(passed(a.path()), passed(b.path()));
    let details = |d: &Path| -> Vec<String> {
        json(d, "verdict.json")["results"].as_array().unwrap().iter().map(|r| r["detail"].to_string()).collect()
    };
    assert_eq!(details(a.path()), details(b.path()));
}

#[test]
fn approx_dumps_approximations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"target": {"open_set": {"fixture": "NEXT0", "max_depth": 4}}}"#;
    assert!(run(dir.path(), &["approx"], Some(cfg)).status.success());
    let a = json(dir.path(), "approx.json");
    for d in a["depths"].as_array().unwrap() {
        assert_eq!(d["annulus"].as_array().unwrap().len(), 1);
    }
    assert!(read(dir.path(), "approx.csv").lines().nth(1).unwrap().starts_with("depth,inner_words"));
}

#[test]
fn bad_configs_exit_2() {
    let cases = [
        r#"{"unknown": true}"#,
        r#"{"sft": {"fixture": "FULL3"}}"#,
        r#"{"sft": {"matrix": [[1, 0], [0, 0]]}}"#,
        r#"{"target": {"cylinder": {"words": ["0", "01"]}}}"#,
        r#"{"sft": {"fixture": "GOLD"}, "target": {"cylinder": {"words": ["11"]}}}"#,
        r#"{"potential": {"bernoulli": [0.5]}}"#,
        r#"{"simulate": {"batches": 10}}"#,
        "not json",
    ];
    for cfg in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = run(dir.path(), &["pressure"], Some(cfg));
        assert_eq!(out.status.code(), Some(2), "{cfg}");
    }
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["rate"], None).status.code(), Some(2));
}

#[test]
fn forbidden_words_compile_to_block_presentation() {
    let dir = tempfile::tempdir().unwrap();
    // no 111 on two symbols: pressure is log of the tribonacci constant
    let cfg = r#"{"sft": {"forbidden": {"alphabet": 2, "words": ["111"]}}, "holes": [{"words": ["0"]}]}"#;
    let out = run(dir.path(), &["pressure"], Some(cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(dir.path(), "report.json");
    let trib: f64 = 1.839286755214161;
    assert!((r["pressure"].as_f64().unwrap() - trib.ln()).abs() < 1e-12);
    // avoiding 0 leaves no orbit at all
    assert_eq!(r["holes"][0]["survivor_pressure"], serde_json::Value::Null);
}
