//! Runs two suites from an inline configuration and prints the verdict records.
use ultradiff::cli::report::to_json;
use ultradiff::cli::{run_suite, RunConfig};

fn main() -> ultradiff::Result<()> {
    let cfg = RunConfig::parse(
        r#"{
  "sequences": {"M": {"family": "gevrey", "params": {"s": 3}}},
  "operator": {"expr": "D1", "dimension": 2},
  "instance": {"sequence": "M", "regime": {"kind": "gammaFinite", "powerRho": 0.4, "gamma0": 2, "gammaTilde": 2.8}},
  "suites": ["prop3.6", "eq4.2"]
}"#,
    )?;
    for s in &cfg.suites {
        let r = run_suite(s, &cfg)?;
        print!("{}", to_json(&r)?);
    }
    Ok(())
}
