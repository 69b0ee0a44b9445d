use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_algebroid")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON report")
}

fn path(name: &str) -> String {
    fixture(name).to_str().unwrap().to_string()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    for name in ["tr3.json", "so3_action.json", "tr3_contact.json", "kenmotsu.json"] {
        let o = run(&["validate", &path(name)]);
        assert_eq!(code(&o), 0, "{}: {}", name, stdout(&o));
    }
    let o = run(&["validate", &path("broken_jacobi.json")]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("FAIL") && out.contains("jacobi") && out.contains(" at ("), "{}", out);
}

#[test]
fn broken_report_names_jacobi_with_worst_point() {
    let o = run(&["validate", &path("broken_jacobi.json"), "--json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["passed"], false);
    assert_eq!(v["exit_code"], 1);
    let checks = v["reports"][0]["checks"].as_array().unwrap();
    let jacobi = checks.iter().find(|c| c["name"].as_str().unwrap().contains("jacobi")).unwrap();
    assert_eq!(jacobi["passed"], false);
    assert!(jacobi["worst_point"].is_array());
}

#[test]
fn input_errors_exit_two() {
    let o = run(&["validate", "/nonexistent/manifest.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/nonexistent/manifest.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write_temp(&dir, "bad.json", "{\n  \"chart\": {\n    \"variables\": [\"x\",]\n  }\n}\n");
    let o = run(&["validate", &bad]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json:3:"), "{}", stderr(&o));

    let manifest = std::fs::read_to_string(fixture("tr3.json")).unwrap();
    let unknown = manifest.replacen("\"chart\"", "\"colour\": 1,\n  \"chart\"", 1);
    let p = write_temp(&dir, "unknown.json", &unknown);
    let o = run(&["validate", &p]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let contact = std::fs::read_to_string(fixture("tr3_contact.json")).unwrap();
    assert!(contact.contains("\"-y\""));
    let p = write_temp(&dir, "expr.json", &contact.replacen("\"-y\"", "\"-q\"", 1));
    let o = run(&["classify", &p]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("expr.json:") && err.contains('q'), "{}", err);

    let o = run(&["classify", &path("tr3.json")]);
    assert_eq!(code(&o), 2);
    let o = run(&["bigtangent", "--dim", "3", "--metric", &path("bigtangent_flat.json")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn classify_sasakian_fixture() {
    let o = run(&["classify", &path("tr3_sasakian.json"), "--json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json(&o);
    assert_eq!(v["convention"], "half");
    let f = &v["flags"];
    for name in ["almost_contact", "contact_riemannian", "normal", "K_contact", "sasakian"] {
        assert_eq!(f[name], true, "{}", name);
    }
    assert_eq!(f["kenmotsu"], false);

    let o = run(&["classify", &path("tr3_sasakian.json"), "--json", "--convention", "plain"]);
    let p = json(&o);
    assert_eq!(p["convention"], "plain");
    assert_eq!(p["flags"]["contact_riemannian"], false);
}

#[test]
fn classify_other_fixtures() {
    let v = json(&run(&["classify", &path("kenmotsu.json"), "--json"]));
    assert_eq!(v["flags"]["kenmotsu"], true);
    assert_eq!(v["flags"]["K_contact"], false);
    let v = json(&run(&["classify", &path("twisted.json"), "--json"]));
    assert_eq!(v["flags"]["almost_contact"], true);
    assert_eq!(v["flags"]["normal"], false);
    let v = json(&run(&["classify", &path("tr3_contact.json"), "--json"]));
    assert_eq!(v["flags"]["contact_riemannian"], true);
    let o = run(&["classify", &path("not_almost_contact.json")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn text_report_names_convention() {
    let o = run(&["classify", &path("tr3_contact.json")]);
    let out = stdout(&o);
    assert!(out.contains("convention plain"), "{}", out);
    assert!(out.trim_end().ends_with("result: PASS (exit 0)"));
    assert!(out.lines().all(|l| l == l.trim_end()));
}

#[test]
fn bigtangent_exit_codes() {
    for (name, expected) in [
        ("bigtangent_flat.json", 0),
        ("bigtangent_curved.json", 0),
        ("bigtangent_not_positive.json", 1),
        ("bigtangent_singular.json", 1),
    ] {
        let o = run(&["bigtangent", "--dim", "2", "--metric", &path(name), "--json"]);
        assert_eq!(code(&o), expected, "{}: {}", name, stdout(&o));
        assert_eq!(json(&o)["exit_code"], expected);
    }
}

#[test]
fn json_is_deterministic_and_seeded() {
    let cases: [&[&str]; 3] = [
        &["validate", "so3_action.json"],
        &["classify", "tr3_sasakian.json"],
        &["bigtangent", "--dim", "2", "--metric", "bigtangent_curved.json"],
    ];
    for case in cases {
        let mut args: Vec<String> = case.iter().map(|s| if s.ends_with(".json") { path(s) } else { s.to_string() }).collect();
        args.push("--json".into());
        let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let (a, b) = (run(&refs), run(&refs));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{:?}", case);
        let mut seeded = refs.clone();
        seeded.extend(["--seed", "99"]);
        let c = run(&seeded);
        assert_ne!(a.stdout, c.stdout, "{:?}", case);
        assert_eq!(json(&c)["grid"]["seed"], 99);
    }
}

#[test]
fn global_overrides_apply() {
    let v = json(&run(&["validate", &path("tr3.json"), "--json", "--grid", "7", "--tol", "1e-6"]));
    assert_eq!(v["grid"]["count"], 7);
    assert_eq!(v["grid"]["tol_eq"], 1e-6);
}
