use std::path::PathBuf;
use std::process::{Command, Output};

fn holval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holval")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("holval-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn body_of(report: &str) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(report).unwrap();
    assert!(v["header"]["timestamp"].is_u64());
    v["body"].clone()
}

#[test]
fn spin7_identities_pass() {
    let out = holval(&["check-identities", "--context", "SPIN7", "--samples", "10000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body = body_of(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(body["passed"], true);
    let names: Vec<_> = body["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"eta_klain_identity"));
    assert!(names.contains(&"theta_norm_c4"));
    assert!(names.contains(&"eta_decomposition"));
}

#[test]
fn malformed_config_exits_two_without_report() {
    let cfg = scratch("bad.toml");
    let report = scratch("bad-report.json");
    std::fs::write(&cfg, "command = \"pkf\"\n[pkf]\nunknown_key = 3\n").unwrap();
    let _ = std::fs::remove_file(&report);
    let out = holval(&["--config", cfg.to_str().unwrap(), "--output", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!report.exists());
    let out = holval(&["pkf", "--group", "E8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn failing_tolerance_exits_one_and_writes_report() {
    let cfg = scratch("strict.toml");
    let report = scratch("strict-report.json");
    std::fs::write(&cfg, "command = \"check-identities\"\ncontext = \"SU\"\nsamples = 20\n[tolerances]\nidentity = 1e-300\n").unwrap();
    let out = holval(&["--config", cfg.to_str().unwrap(), "--output", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let body = body_of(&std::fs::read_to_string(&report).unwrap());
    assert_eq!(body["passed"], false);
    assert!(body["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn pkf_report_is_deterministic() {
    let args = [
        "pkf",
        "--group",
        "G2",
        "--preset",
        "associative-coassociative",
        "--seed",
        "42",
        "--n-group",
        "300",
        "--n-translation",
        "50",
    ];
    let a = holval(&args);
    let b = holval(&args);
    assert!(a.status.code().is_some_and(|c| c <= 1));
    let (ba, bb) = (
        body_of(&String::from_utf8(a.stdout).unwrap()),
        body_of(&String::from_utf8(b.stdout).unwrap()),
    );
    assert_eq!(serde_json::to_string(&ba).unwrap(), serde_json::to_string(&bb).unwrap());
    assert!(ba["result"]["z_score"].is_f64());
    assert!(ba["result"]["lhs_std_error"].is_f64());
    assert_eq!(ba["config"]["pkf"]["n_group"], 300);
}

#[test]
fn workers_do_not_change_results() {
    let run = |w: &str| {
        let out = holval(&["pkf", "--group", "SO7", "--preset", "cube-pair", "--n-group", "600", "--n-translation", "40", "--workers", w]);
        body_of(&String::from_utf8(out.stdout).unwrap())["result"].clone()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn pkf_csv_lists_strata() {
    let out = holval(&["pkf", "--group", "SO7", "--preset", "cube-pair", "--n-group", "600", "--n-translation", "20", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("chunk,count,mean,variance"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn evaluate_polytope_file() {
    let poly = scratch("box.json");
    std::fs::write(
        &poly,
        r#"{"family":"BOX","n":7,"center":[0,0,0,0,0,0,0],"frame":[1,0,0, 0,1,0, 0,0,1, 0,0,0, 0,0,0, 0,0,0, 0,0,0],"half_lengths":[0.5,0.5,0.5]}"#,
    )
    .unwrap();
    let out = holval(&[
        "evaluate",
        "--context",
        "G2",
        "--valuation",
        "NU3",
        "--valuation",
        "MU(3)",
        "--polytope",
        poly.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body = body_of(&String::from_utf8(out.stdout).unwrap());
    let rows = body["result"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    // Associative unit cube: phi(W)^2 = 1 and volume 1.
    assert!((rows[0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((rows[1]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(rows[0]["std_error"].is_f64());
}

#[test]
fn example_configs_resolve() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let file = holval::config::ConfigFile::parse(&text).unwrap();
        holval::config::ExperimentConfig::resolve(&file, path.parent().unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
