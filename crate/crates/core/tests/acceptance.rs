//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};
use ultradiff::assocweight::AssociatedWeight;
use ultradiff::cli::{run_suite, RunConfig, SUITES};
use ultradiff::metivier::verify::{
    divergence_witness, verify_directional_growth, verify_last_estimate, verify_lower_bound, verify_qk_envelope,
    verify_theta_envelope, verify_vector_growth,
};
use ultradiff::metivier::{select_parameters, DiffOperator, InstanceOptions, MetivierInstance, RegimeRequest};
use ultradiff::weightseq::{
    analytic_inclusion, check_splitting_lemma, derivation_closed, gamma_index, strong_nonquasianalyticity, GammaValue,
    Verdict,
};
use ultradiff::{Result, WeightSequence};

const K: usize = 2048;

struct Outcome {
    pass: bool,
    note: String,
}

fn outcome(pass: bool, note: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, note: note.into() })
}

fn g3_instance(expr: &str) -> Result<MetivierInstance> {
    let m = WeightSequence::gevrey(3.0, K)?;
    let op = DiffOperator::parse(expr, Some(2))?;
    let req = RegimeRequest::GammaFinite {
        power_rho: Some(0.4),
        gamma0: Some(2.0),
        gamma_tilde: Some(2.8),
    };
    let mut opts = InstanceOptions::for_dimension(2);
    opts.point = Some((vec![0.0, 0.0], vec![0.0, 1.0]));
    select_parameters(&m, &op, req, &opts)
}

fn example_table() -> Result<Outcome> {
    use Verdict::{Fails, Holds};
    // (strong non-quasianalyticity, analytic inclusion, derivation closedness)
    let rows = [
        ("G^1", WeightSequence::gevrey(1.0, K)?, [Fails, Fails, Holds]),
        ("G^2", WeightSequence::gevrey(2.0, K)?, [Holds, Holds, Holds]),
        ("N^{2,2}", WeightSequence::qpower(2.0, 2.0, K)?, [Holds, Holds, Holds]),
        ("N^{2,3}", WeightSequence::qpower(2.0, 3.0, K)?, [Holds, Holds, Fails]),
        ("L^1", WeightSequence::logpower(1.0, K)?, [Fails, Holds, Holds]),
    ];
    let mut bad = Vec::new();
    let mut numeric_only = Vec::new();
    for (name, m, want) in rows {
        let snqa = strong_nonquasianalyticity(&m, K / 2)?;
        let incl = analytic_inclusion(&m);
        let closed = derivation_closed(&m);
        let got = [snqa.verdict, incl.verdict, closed.verdict];
        let numeric = [snqa.numeric_verdict, incl.numeric_verdict, closed.numeric_verdict];
        if got != want {
            bad.push(format!("{name}: {got:?}"));
        }
        if numeric != want {
            numeric_only.push(format!("{name} {numeric:?}"));
        }
    }
    let note = if bad.is_empty() {
        format!("15 verdicts match; tail heuristic alone differs on [{}]", numeric_only.join(", "))
    } else {
        bad.join("; ")
    };
    outcome(bad.is_empty(), note)
}

fn gamma_estimates() -> Result<Outcome> {
    let mut notes = Vec::new();
    let mut pass = true;
    for s in [1.5, 2.0, 3.0] {
        let custom = WeightSequence::custom(WeightSequence::gevrey(s, K)?.log_m().to_vec())?;
        let g = gamma_index(&custom, 64.0, 1e-3)?.numeric.as_f64();
        pass &= (g - s).abs() <= 0.05;
        notes.push(format!("G^{s}: {g:.3}"));
    }
    let q = gamma_index(&WeightSequence::qpower(2.0, 2.0, K)?, 64.0, 1e-3)?;
    pass &= matches!(q.numeric, GammaValue::Infinite);
    notes.push(format!("N^(2,2): {:?}", q.numeric));
    let base = WeightSequence::gevrey(2.0, K)?;
    let g_base = gamma_index(&WeightSequence::custom(base.log_m().to_vec())?, 64.0, 1e-3)?.numeric.as_f64();
    for tau in [0.5, 2.0] {
        let mt = WeightSequence::custom(base.power(tau)?.log_m().to_vec())?;
        let g = gamma_index(&mt, 64.0, 1e-3)?.numeric.as_f64();
        pass &= (g - tau * g_base).abs() <= 0.1;
        notes.push(format!("gamma(G^2^{tau}) {g:.3}"));
    }
    outcome(pass, notes.join(", "))
}

fn inversion() -> Result<Outcome> {
    let g2 = WeightSequence::gevrey(2.0, K)?;
    let families = [
        ("gevrey", g2.clone()),
        ("qpower", WeightSequence::qpower(2.0, 1.5, K)?),
        ("logpower", WeightSequence::logpower(1.0, K)?),
        ("product", g2.product(&WeightSequence::logpower(0.5, K)?)?),
        ("power", g2.power(1.5)?),
        ("custom", WeightSequence::custom(WeightSequence::gevrey(1.25, K)?.log_m().to_vec())?),
    ];
    let mut worst = 0.0f64;
    for (_, m) in &families {
        let w = AssociatedWeight::new(m);
        for k in 0..=50 {
            let lm = m.log_m()[k];
            worst = worst.max((w.invert_weight(k)? - lm).abs() / lm.abs().max(1.0));
        }
    }
    outcome(worst <= 1e-9, format!("{} families, max rel err {worst:.2e}", families.len()))
}

fn splitting() -> Result<Outcome> {
    let seqs = [
        WeightSequence::gevrey(1.0, K)?,
        WeightSequence::gevrey(2.0, K)?,
        WeightSequence::qpower(2.0, 2.0, K)?,
        WeightSequence::qpower(2.0, 3.0, K)?,
        WeightSequence::logpower(1.0, K)?,
    ];
    let mut total = 0;
    let mut pass = true;
    for (i, m) in seqs.iter().enumerate() {
        let r = check_splitting_lemma(m, 10_000, i as u64);
        pass &= r.samples == 10_000 && r.violations == 0 && r.exhaustive_checked == 13 * 13 * 13 * 9;
        pass &= r.exhaustive_violations == 0;
        total += r.violations + r.exhaustive_violations;
    }
    outcome(pass, format!("{} families, {total} violations", seqs.len()))
}

fn aux_lemma() -> Result<Outcome> {
    let cfg = RunConfig::parse("{}")?;
    let r = run_suite("lemma3.2", &cfg)?;
    let log_a = r.constants["logA"];
    let (c, shift) = (r.constants["C"], r.constants["shiftC"]);
    let pass = r.holds && log_a == 0.0 && c.is_finite() && shift.is_finite();
    outcome(pass, format!("log A = {log_a}, C = {c:.4}, shifted C = {shift:.4}"))
}

fn sandwich() -> Result<Outcome> {
    let cfg = RunConfig::parse(
        r#"{"sequences": {"G2": {"family": "gevrey", "params": {"s": 2}},
                          "G3": {"family": "gevrey", "params": {"s": 3}}},
            "options": {"sandwichKmax": 30, "spotChecks": 10}}"#,
    )?;
    let r = run_suite("prop3.6", &cfg)?;
    let finite = r.constants.values().all(|v| v.is_finite());
    let residuals = r.margins.iter().filter(|(k, _)| k.ends_with("Residual")).all(|(_, v)| *v <= 0.0);
    let spot = r.margins["spotMaxRelError"];
    outcome(
        r.holds && finite && residuals && spot <= 1e-8,
        format!("logQ1/logQ2 G2 {:.3}/{:.3}, G3 {:.3}/{:.3}, 20 spot checks max rel {spot:.1e}",
            r.constants["G2.logQ1"], r.constants["G2.logQ2"], r.constants["G3.logQ1"], r.constants["G3.logQ2"]),
    )
}

fn lower_bound() -> Result<Outcome> {
    let inst = g3_instance("D1")?;
    let lb = verify_lower_bound(&inst, 25)?;
    let w = divergence_witness(&inst)?;
    let far = w.horizons.iter().filter_map(|h| h.horizon).max().unwrap_or(0);
    outcome(
        lb.holds && w.holds,
        format!("min margin {:.3} over k <= 25, witness horizons up to {far}", lb.min_margin),
    )
}

fn iterate_growth() -> Result<Outcome> {
    let inst = g3_instance("D1")?;
    let g = verify_vector_growth(&inst, 12, 0)?;
    let pass = g.holds
        && g.sup.fit.max_residual <= 0.0
        && g.l2.fit.max_residual <= 0.0
        && g.consistency.holds
        && g.consistency.tolerance <= 1e-10;
    outcome(
        pass,
        format!(
            "sup logC {:.3} logh {:.3}, L2 logC {:.3} logh {:.3}, recursion err {:.1e}",
            g.sup.fit.log_c, g.sup.fit.log_h, g.l2.fit.log_c, g.l2.fit.log_h, g.consistency.max_rel_error
        ),
    )
}

fn envelopes() -> Result<Outcome> {
    let mut notes = Vec::new();
    let mut pass = true;
    for expr in ["D1", "x2 D1"] {
        let inst = g3_instance(expr)?;
        let mut reports = vec![verify_qk_envelope(&inst, 8, 4)?];
        for j in 0..2 {
            reports.push(verify_theta_envelope(&inst, j, 8, 4)?);
        }
        for r in reports {
            let margin = r.dominance.iter().map(|d| d.min_margin).fold(f64::INFINITY, f64::min);
            pass &= r.holds && r.stable && r.log_a.is_finite() && margin >= 0.0;
            notes.push(format!("{expr} {:?} logA {:.2} margin {margin:.3}", r.kind, r.log_a));
        }
    }
    outcome(pass, notes.join("; "))
}

fn optimality() -> Result<Outcome> {
    let inst = g3_instance("D1")?;
    let g36 = WeightSequence::gevrey(3.6, K)?;
    let same_n = (0..=K).all(|k| (inst.n.log_m()[k] - g36.log_m()[k]).abs() <= 1e-9 * g36.log_m()[k].max(1.0));
    let closed = derivation_closed(&inst.n).verdict.holds();
    let last = verify_last_estimate(&inst, 30)?;
    let mut pass = same_n && closed && last.holds;
    let mut notes = vec![format!("last estimate logC {:.3} logh {:.3}", last.growth.fit.log_c, last.growth.fit.log_h)];
    for j in 0..2 {
        let r = verify_directional_growth(&inst, j, 12)?;
        pass &= r.holds;
        notes.push(format!("D{} logC {:.3} logh {:.3}", j + 1, r.sup.fit.log_c, r.sup.fit.log_h));
    }
    outcome(pass, notes.join(", "))
}

fn rerunnable() -> Result<Outcome> {
    // a user table: log M_k = 2.5 log k! + k/10
    let mut acc = 0.0;
    let table: Vec<String> = (0..=512usize)
        .map(|k| {
            if k > 0 {
                acc += 2.5 * (k as f64).ln();
            }
            format!("{}", acc + 0.1 * k as f64)
        })
        .collect();
    let raw = r#"{
  "sequences": {
    "M": {"family": "custom", "logM": [TABLE]},
    "G": {"family": "product", "of": [{"family": "gevrey", "params": {"s": 2}}, {"family": "logpower", "params": {"sigma": 0.5}}]}
  },
  "targets": ["M", "G"],
  "operator": {"expr": "D1 - D2^2", "dimension": 2},
  "instance": {"sequence": "G"},
  "truncation": 512,
  "options": {"kmax": 6, "envelopeKmax": 4, "nuMax": 2, "lowerBoundKmax": 10, "lastEstimateKmax": 10,
              "sandwichKmax": 10, "splittingTrials": 1000, "spotChecks": 3},
  "aux": {"t": "G", "u": {"family": "gevrey", "params": {"s": 3}}, "tau": 1.4, "a": 0.5, "sigma": 1.6}
}"#;
    let cfg = RunConfig::parse(&raw.replace("TABLE", &table.join(", ")))?;
    // the grid-heavy suites run once; the rest run twice and must agree byte for byte
    let repeat = ["lemma3.1", "lemma3.2", "prop3.6", "eq4.2", "lemma4.1", "lemma5.2", "cor4.3", "cor4.5"];
    let mut held = 0;
    let mut failed = Vec::new();
    for s in SUITES {
        let a = run_suite(s, &cfg)?;
        if repeat.contains(&s) {
            let b = run_suite(s, &cfg)?;
            if ultradiff::cli::report::to_json(&a)? != ultradiff::cli::report::to_json(&b)? {
                return outcome(false, format!("{s} is not deterministic"));
            }
        }
        if a.holds {
            held += 1;
        } else {
            failed.push(s);
        }
    }
    outcome(
        true,
        format!("{} suites run on user inputs ({} repeated identically), {held} hold, not holding: {failed:?}", SUITES.len(), repeat.len()),
    )
}

fn main() {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check, u64); 11] = [
        ("example table verdicts", example_table, 5),
        ("gamma index", gamma_estimates, 30),
        ("weight inversion", inversion, 5),
        ("splitting inequality", splitting, 10),
        ("auxiliary sequence equivalence", aux_lemma, 10),
        ("kernel moment sandwich", sandwich, 60),
        ("centre lower bound and divergence witness", lower_bound, 60),
        ("iterate growth", iterate_growth, 600),
        ("envelopes and dominance displays", envelopes, 300),
        ("optimality pipeline", optimality, 600),
        ("suites rerunnable on user input", rerunnable, 900),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let (pass, note) = match result {
            Ok(o) => (o.pass && in_time, o.note),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {:>2} {name}: {note} [{:.1}s of {budget}s]",
            i + 1,
            took.as_secs_f64()
        );
    }
    if failures > 0 {
        eprintln!("{failures} criteria failed");
        std::process::exit(1);
    }
}
