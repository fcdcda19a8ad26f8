use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn fmdeploy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmdeploy"))
        .args(args)
        .env_remove("FMDEPLOY_LIMIT")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("fmdeploy-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn fixture_inputs() -> Vec<String> {
    vec![
        fixture("control-admittance.fm"),
        "--node".into(),
        fixture("hab.fm"),
        "--node".into(),
        fixture("cloudvm.fm"),
    ]
}

fn run(cmd: &str, extra: &[&str], spec: bool) -> Output {
    let mut args = vec![cmd.to_string()];
    args.extend(fixture_inputs());
    if spec {
        args.push("--spec".into());
        args.push(fixture("shea.dep"));
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    fmdeploy(&refs)
}

#[test]
fn validate_accepts_fixtures_quietly() {
    for name in ["control-admittance.fm", "hab.fm", "cloudvm.fm"] {
        let out = fmdeploy(&["validate", &fixture(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert!(out.stderr.is_empty(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn validate_exit_codes() {
    let broken = scratch("broken.fm", "model m { mandatory r { optional a (CPU=) } }");
    let out = fmdeploy(&["validate", &broken]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.fm:1:"));

    let out = fmdeploy(&["validate", "/nonexistent/missing.fm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn enumerate_json_shape() {
    let out = run("enumerate", &[], true);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let configs = v["configurations"].as_array().unwrap();
    assert_eq!(v["count"].as_u64().unwrap() as usize, configs.len());
    assert_eq!(v["truncated"], Value::Bool(false));
    for c in configs {
        assert_eq!(c["hosting"]["keypad"], "HAB");
    }
    assert_eq!(v["stats"]["nodes"].as_array().unwrap().len(), 2);
}

#[test]
fn count_only_agrees_with_json() {
    let json: Value = serde_json::from_str(&stdout(&run("enumerate", &[], true))).unwrap();
    let count = stdout(&run("enumerate", &["--count-only"], true));
    assert_eq!(count.trim().parse::<u64>().unwrap(), json["count"].as_u64().unwrap());
}

#[test]
fn dropping_the_spec_never_lowers_the_count() {
    let with: u64 = stdout(&run("enumerate", &["--count-only"], true)).trim().parse().unwrap();
    let without: u64 = stdout(&run("enumerate", &["--count-only"], false)).trim().parse().unwrap();
    assert!(without >= with, "{without} < {with}");
}

#[test]
fn oracle_agrees_on_the_fixture() {
    let out = run("enumerate", &["--oracle", "--count-only"], true);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn limit_flag_and_environment() {
    let out = run("enumerate", &["--limit", "3"], true);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["count"], 3);
    assert_eq!(v["truncated"], Value::Bool(true));

    let mut args = vec!["enumerate".to_string()];
    args.extend(fixture_inputs());
    let out = Command::new(env!("CARGO_BIN_EXE_fmdeploy"))
        .args(&args)
        .arg("--count-only")
        .env("FMDEPLOY_LIMIT", "2")
        .output()
        .unwrap();
    assert_eq!(stdout(&out).trim(), "2");

    // The flag wins over the environment.
    let out = Command::new(env!("CARGO_BIN_EXE_fmdeploy"))
        .args(&args)
        .args(["--count-only", "--limit", "4"])
        .env("FMDEPLOY_LIMIT", "2")
        .output()
        .unwrap();
    assert_eq!(stdout(&out).trim(), "4");
}

#[test]
fn table_lists_hosting() {
    let out = run("enumerate", &["--format", "table"], true);
    let text = stdout(&out);
    assert!(text.contains("keypad@HAB"));
    assert!(text.trim_end().ends_with("configurations"));
}

#[test]
fn stats_has_one_column_per_subset() {
    let v: Value = serde_json::from_str(&stdout(&run("stats", &[], true))).unwrap();
    let subsets = v["subsets"].as_array().unwrap();
    assert_eq!(subsets.len(), 4);
    assert_eq!(subsets[0]["constraints"], "none");
    assert_eq!(subsets[3]["count"], v["count"]);

    let v: Value = serde_json::from_str(&stdout(&run("stats", &[], false))).unwrap();
    assert_eq!(v["subsets"].as_array().unwrap().len(), 1);

    let out = run("stats", &["--format", "table"], true);
    let text = stdout(&out);
    assert!(text.starts_with("Feature Model"));
    assert!(text.contains("Config with colocated(bayesian, live_streaming)"));
}

#[test]
fn stats_with_two_relational_constraints() {
    let spec = scratch("two.dep", "deploy { colocated(pca, keypad); separated(bayesian, keypad); }");
    let mut args = vec!["stats".to_string()];
    args.extend(fixture_inputs());
    args.extend(["--spec".to_string(), spec]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = fmdeploy(&refs);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let counts: Vec<u64> = v["subsets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["count"].as_u64().unwrap())
        .collect();
    assert_eq!(counts.len(), 4);
    assert!(counts[3] <= counts[1] && counts[3] <= counts[2] && counts[1] <= counts[0] && counts[2] <= counts[0]);
}

#[test]
fn bad_spec_reference_is_invalid_input() {
    let spec = scratch("bad.dep", "deploy { hostedby(Mars, keypad); }");
    let mut args = vec!["enumerate".to_string()];
    args.extend(fixture_inputs());
    args.extend(["--spec".to_string(), spec]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(fmdeploy(&refs).status.code(), Some(1));
}
