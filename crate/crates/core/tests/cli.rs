use std::path::PathBuf;
use ultradiff::cli::main_with_args;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ultradiff-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn config(dir: &PathBuf, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["ultradiff"];
    full.extend_from_slice(args);
    let code = main_with_args(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const G2: &str = r#"{
  "sequences": {"G2": {"family": "gevrey", "params": {"s": 2}}},
  "suites": ["prop3.6"]
}"#;

#[test]
fn prop36_on_g2_holds() {
    let dir = scratch("prop36");
    let cfg = config(&dir, G2);
    let out = dir.join("reports");
    let (code, stdout, _) = run(&["--config", &cfg, "--out", out.to_str().unwrap(), "run"]);
    assert_eq!(code, 0, "{stdout}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("prop3.6.json")).unwrap()).unwrap();
    assert_eq!(v["holds"], true);
    for key in ["G2.logQ1", "G2.logQ2"] {
        assert!(v["constants"][key].as_f64().unwrap().is_finite(), "{key}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["holds"], true);
}

#[test]
fn unknown_sequence_is_a_config_error() {
    let dir = scratch("unknown");
    let cfg = config(
        &dir,
        "{\n  \"sequences\": {\"M\": {\"family\": \"gevrey\", \"params\": {\"s\": 2}}},\n  \"targets\": [\"Q\"],\n  \"suites\": [\"lemma3.1\"]\n}",
    );
    let (code, _, stderr) = run(&["--config", &cfg, "verify", "lemma3.1"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 3"), "{stderr}");
    assert!(stderr.contains("'Q'"), "{stderr}");
}

#[test]
fn laplacian_reports_no_witness() {
    let dir = scratch("laplacian");
    let cfg = config(
        &dir,
        r#"{
  "sequences": {"M": {"family": "gevrey", "params": {"s": 2}}},
  "operator": {"expr": "laplacian", "dimension": 2},
  "instance": {"sequence": "M"}
}"#,
    );
    let (code, stdout, _) = run(&["--config", &cfg, "verify", "thm4.2"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["holds"], false);
    assert!(v["error"].as_str().unwrap().contains("no witness"));
}

#[test]
fn reports_are_byte_identical() {
    let dir = scratch("determinism");
    let cfg = config(&dir, G2);
    let a = run(&["--config", &cfg, "--seed", "7", "verify", "prop3.6"]);
    let b = run(&["--config", &cfg, "--seed", "7", "verify", "prop3.6"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let m1 = run(&["moments", "gevrey:3", "--kmax", "20"]);
    let m2 = run(&["moments", "gevrey:3", "--kmax", "20"]);
    assert_eq!(m1.1, m2.1);
    assert_eq!(m1.1.lines().count(), 22);
    assert!(m1.1.starts_with("k,logI,logN,logIMinusLogN,tailRemainder\n"));
}

#[test]
fn suite_subsets_match_full_runs() {
    let dir = scratch("subsets");
    let cfg = config(
        &dir,
        r#"{
  "sequences": {"G2": {"family": "gevrey", "params": {"s": 2}, "K": 512}},
  "suites": ["lemma3.1", "prop3.6"],
  "options": {"kmax": 12, "envelopeKmax": 8, "nuMax": 4, "lowerBoundKmax": 25, "lastEstimateKmax": 30,
              "sandwichKmax": 20, "splittingTrials": 500, "spotChecks": 4}
}"#,
    );
    let full = dir.join("full");
    assert_eq!(run(&["--config", &cfg, "--out", full.to_str().unwrap(), "run"]).0, 0);
    for suite in ["lemma3.1", "prop3.6"] {
        let (code, alone, _) = run(&["--config", &cfg, "verify", suite]);
        assert_eq!(code, 0);
        assert_eq!(alone, std::fs::read_to_string(full.join(format!("{suite}.json"))).unwrap());
    }
}

#[test]
fn classify_example_rows() {
    let row = |seq: &str| -> serde_json::Value { serde_json::from_str(&run(&["classify", seq]).1).unwrap() };
    let g1 = row("gevrey:1");
    assert_eq!(g1["quasianalyticity"], "quasianalytic");
    assert_eq!(g1["stronglyNonQuasianalytic"], "fails");
    assert_eq!(g1["analyticInclusion"], "fails");
    assert_eq!(g1["derivationClosed"], "holds");
    let q = row("qpower:2,2");
    assert_eq!(q["stronglyNonQuasianalytic"], "holds");
    assert_eq!(q["gammaInfinite"], true);
    let l = row("logpower:1");
    assert_eq!(l["stronglyNonQuasianalytic"], "fails");
    assert_eq!(l["analyticInclusion"], "holds");
    assert_eq!(l["derivationClosed"], "holds");
}

#[test]
fn omega_csv_and_usage_errors() {
    let (code, csv, _) = run(&["omega", "gevrey:1", "10"]);
    assert_eq!(code, 0);
    let cells: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    // omega_{G^1}(10) = max_k log(10^k / k!) at k = 10
    let direct = (1..=10).map(|k| k as f64 * 10f64.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()).fold(0.0, f64::max);
    assert!((cells[1] - direct).abs() < 1e-12);
    assert_eq!(run(&["omega", "gevrey:1", "-1"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["verify", "prop3.6"]).0, 2);
}
