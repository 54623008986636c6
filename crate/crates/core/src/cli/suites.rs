use super::config::{RegimeSpec, RunConfig};
use crate::assocweight::{aux_equivalence, aux_shift_check, power_scaling_check};
use crate::error::{Error, Result};
use crate::kernel::{verify_moment_sandwich, FlatKernel};
use crate::metivier::evaluate::IterateEvaluator;
use crate::metivier::verify::{
    divergence_witness, ladder_sums, verify_directional_growth, verify_last_estimate, verify_lower_bound,
    verify_qk_envelope, verify_shrinking, verify_theta_envelope, verify_vector_growth, EnvelopeReport,
};
use crate::metivier::MetivierInstance;
use crate::weightseq::{check_splitting_lemma, derivation_closed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

pub const SUITES: [&str; 11] = [
    "lemma3.1", "lemma3.2", "prop3.6", "eq4.2", "lemma4.1", "thm4.2", "cor4.3", "thm4.4", "cor4.5", "lemma5.2",
    "eq5.2",
];

/// Relative agreement required between the closed-form and quadrature moments.
pub const SPOT_TOL: f64 = 1e-8;

/// Verdict record of one suite.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteRecord {
    pub suite: String,
    pub holds: bool,
    pub constants: BTreeMap<String, f64>,
    pub margins: BTreeMap<String, f64>,
    pub grid_meta: Value,
    pub details: Value,
    pub error: Option<String>,
}

impl SuiteRecord {
    fn new(suite: &str) -> Self {
        SuiteRecord {
            suite: suite.to_string(),
            holds: true,
            constants: BTreeMap::new(),
            margins: BTreeMap::new(),
            grid_meta: Value::Null,
            details: Value::Object(Map::new()),
            error: None,
        }
    }

    fn detail(&mut self, key: &str, v: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(v).map_err(|e| Error::invalid(e.to_string()))?;
        if let Value::Object(m) = &mut self.details {
            m.insert(key.to_string(), v);
        }
        Ok(())
    }

    fn require(&mut self, ok: bool) {
        self.holds &= ok;
    }
}

/// Errors that mean "the hypotheses do not hold here" rather than a broken run.
pub fn is_suite_failure(e: &Error) -> bool {
    matches!(e, Error::Precondition(_) | Error::Infeasible(_) | Error::FitFailed(_))
}

/// Runs one suite. Hypothesis failures give `holds = false`; other errors propagate.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<SuiteRecord> {
    let mut rec = SuiteRecord::new(name);
    let outcome = match name {
        "lemma3.1" => splitting(cfg, &mut rec),
        "lemma3.2" => aux_lemma(cfg, &mut rec),
        "prop3.6" => sandwich(cfg, &mut rec),
        "eq4.2" => shrinking(cfg, &mut rec),
        "lemma4.1" => lambda_envelope(cfg, &mut rec),
        "lemma5.2" => theta_envelope(cfg, &mut rec),
        "eq5.2" => optimality(cfg, &mut rec),
        "thm4.2" => chain(cfg, None, &mut rec),
        "cor4.3" => chain(
            cfg,
            Some(RegimeSpec::GammaInfinite {
                q: None,
                sigma: None,
                rho: None,
            }),
            &mut rec,
        ),
        "thm4.4" => chain(
            cfg,
            Some(match &cfg.instance_spec()?.regime {
                r @ RegimeSpec::GammaFinite { .. } => r.clone(),
                _ => RegimeSpec::GammaFinite {
                    power_rho: None,
                    gamma0: None,
                    gamma_tilde: None,
                },
            }),
            &mut rec,
        ),
        "cor4.5" => chain(
            cfg,
            Some(match &cfg.instance_spec()?.regime {
                r @ RegimeSpec::Gevrey { .. } => r.clone(),
                _ => RegimeSpec::Gevrey { r: None },
            }),
            &mut rec,
        ),
        other => return Err(Error::invalid(format!("unknown suite '{other}'"))),
    };
    match outcome {
        Ok(()) => Ok(rec),
        Err(e) if is_suite_failure(&e) => {
            rec.holds = false;
            rec.error = Some(e.to_string());
            Ok(rec)
        }
        Err(e) => Err(e),
    }
}

fn splitting(cfg: &RunConfig, rec: &mut SuiteRecord) -> Result<()> {
    for name in cfg.target_names() {
        let m = cfg.sequence(&name)?;
        let r = check_splitting_lemma(&m, cfg.options.splitting_trials, cfg.seed);
        rec.require(r.violations == 0 && r.exhaustive_violations == 0);
        rec.margins.insert(format!("{name}.maxRelativeViolation"), r.max_relative_violation);
        rec.detail(&name, r)?;
    }
    rec.grid_meta = json!({"trials": cfg.options.splitting_trials, "seed": cfg.seed});
    Ok(())
}

fn aux_lemma(cfg: &RunConfig, rec: &mut SuiteRecord) -> Result<()> {
    let aux = &cfg.aux;
    let t = cfg.resolve_ref(&aux.t)?;
    let u = cfg.resolve_ref(&aux.u)?;
    let eq = aux_equivalence(&t, &u, aux.tau)?;
    rec.require(eq.holds);
    rec.constants.insert("logA".into(), eq.log_a);
    rec.constants.insert("C".into(), eq.c_breakpoints);
    rec.margins.insert("reconstruction".into(), -eq.reconstruction_margin);
    rec.grid_meta = serde_json::to_value(&eq.grid).map_err(|e| Error::invalid(e.to_string()))?;
    rec.detail("equivalence", &eq)?;
    let shift = aux_shift_check(&t, &u, aux.tau, aux.a, aux.sigma)?;
    rec.require(shift.finite);
    rec.constants.insert("shiftC".into(), shift.c_breakpoints);
    rec.detail("shift", &shift)?;
    let mut scaling = Vec::new();
    for (i, m) in [&t, &u].into_iter().enumerate() {
        for a in [0.5, 2.0] {
            let r = power_scaling_check(m, a, 1000, cfg.seed.wrapping_add(i as u64))?;
            rec.require(r.holds);
            scaling.push(r);
        }
    }
    let worst = scaling.iter().map(|r| r.max_rel_discrepancy).fold(0.0, f64::max);
    rec.margins.insert("scalingMaxRelDiscrepancy".into(), worst);
    rec.detail("scaling", scaling)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SpotCheck {
    k: f64,
    lower: f64,
    log_closed_form: f64,
    rel_error: f64,
}

fn sandwich(cfg: &RunConfig, rec: &mut SuiteRecord) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kmax = cfg.options.sandwich_kmax;
    let mut worst: f64 = 0.0;
    for name in cfg.target_names() {
        let m = cfg.sequence(&name)?;
        let kernel = FlatKernel::new(&m);
        let r = verify_moment_sandwich(&kernel, kmax)?;
        rec.require(r.holds);
        rec.constants.insert(format!("{name}.logQ1"), r.q1.log_c);
        rec.constants.insert(format!("{name}.logQ2"), r.q2.log_c);
        rec.margins.insert(format!("{name}.lowerResidual"), r.lower_residual);
        rec.margins.insert(format!("{name}.upperResidual"), r.upper_residual);
        let mut spots = Vec::new();
        for _ in 0..cfg.options.spot_checks {
            let k = rng.gen_range(0.0..=kmax as f64);
            let lower = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..3.0) };
            let closed = kernel.raw_moment(k, lower)?.log_value;
            let quad = kernel.moment_by_quadrature(k, lower, closed)?;
            let rel_error = (quad - 1.0).abs();
            worst = worst.max(rel_error);
            spots.push(SpotCheck {
                k,
                lower,
                log_closed_form: closed,
                rel_error,
            });
        }
        rec.detail(&name, json!({"sandwich": r, "spotChecks": spots}))?;
    }
    rec.require(worst <= SPOT_TOL);
    rec.margins.insert("spotMaxRelError".into(), worst);
    rec.grid_meta = json!({"kmax": kmax, "spotChecks": cfg.options.spot_checks, "spotTolerance": SPOT_TOL, "seed": cfg.seed});
    Ok(())
}

fn describe(inst: &MetivierInstance, rec: &mut SuiteRecord) -> Result<()> {
    rec.constants.insert("eps".into(), inst.eps);
    rec.constants.insert("coefficientConstant".into(), inst.coefficient_constant);
    rec.require(inst.constraints.iter().all(|c| c.holds));
    rec.detail(
        "instance",
        json!({
            "operator": inst.operator,
            "x0": inst.x0,
            "xi0": inst.xi0,
            "delta": inst.delta,
            "eps": inst.eps,
            "regime": inst.regime,
            "constraints": inst.constraints,
            "relations": inst.relations,
        }),
    )
}

fn shrinking(cfg: &RunConfig, rec: &mut SuiteRecord) -> Result<()> {
    let inst = cfg.build_instance(None)?;
    describe(&inst, rec)?;
    let t_max = IterateEvaluator::new(&inst, ladder_sums(&inst, 0, 0))?.t_cut;
    let r = verify_shrinking(&inst, t_max)?;
    rec.require(r.holds);
    rec.constants.insert("fittedD".into(), r.fitted_d);
    rec.grid_meta = json!({"tPoints": r.t_points, "tMax": r.t_max});
    rec.detail("shrinking", r)
}

fn envelope_into(rec: &mut SuiteRecord, prefix: &str, r: &EnvelopeReport) -> Result<()> {
    rec.require(r.holds);
    rec.constants.insert(format!("{prefix}logA"), r.log_a);
    rec.margins.insert(format!("{prefix}drift"), r.drift);
    rec.margins.insert(format!("{prefix}base"), r.base_margin);
    for d in &r.dominance {
        rec.margins.insert(format!("{prefix}{}", d.name), d.min_margin);
    }
    rec.grid_meta = json!({"tPoints": r.t_points, "zPoints": r.z_points, "tMax": r.t_max, "kMax": r.k_max, "nuMax": r.nu_max});
    Ok(())
}

fn lambda_envelope(cfg: &RunConfig, rec: &mut SuiteRecord) -> Result<()> {
    let inst = cfg.build_instance(None)?;
    describe(&inst, rec)?;
    let r = verify_qk_envelope(&inst, cfg.options.envelope_kmax, cfg.options.nu_max)?;
    envelope_into(rec, "", &r)?;
    rec.detail("envelope", r)
}

fn theta_envelope(cfg: &RunConfig, rec: &mut SuiteRecord) -> Result<()> {
    let inst = cfg.build_instance(None)?;
    describe(&inst, rec)?;
    let mut all = Vec::new();
    for j in 0..inst.dimension() {
        let r = verify_theta_envelope(&inst, j, cfg.options.envelope_kmax, cfg.options.nu_max)?;
        envelope_into(rec, &format!("D{}.", j + 1), &r)?;
        all.push(r);
    }
    rec.detail("envelopes", all)
}

fn optimality(cfg: &RunConfig, rec: &mut SuiteRecord) -> Result<()> {
    let inst = cfg.build_instance(None)?;
    describe(&inst, rec)?;
    let closed = derivation_closed(&inst.n);
    rec.require(closed.verdict.holds());
    rec.detail("nDerivationClosed", closed)?;
    let last = verify_last_estimate(&inst, cfg.options.last_estimate_kmax)?;
    rec.require(last.holds);
    rec.constants.insert("lastLogC".into(), last.growth.fit.log_c);
    rec.constants.insert("lastLogH".into(), last.growth.fit.log_h);
    rec.margins.insert("lastDrift".into(), last.growth.drift);
    rec.detail("lastEstimate", last)?;
    let mut dirs = Vec::new();
    for j in 0..inst.dimension() {
        let r = verify_directional_growth(&inst, j, cfg.options.kmax)?;
        rec.require(r.holds);
        let p = format!("D{}.", j + 1);
        rec.constants.insert(format!("{p}logC"), r.sup.fit.log_c);
        rec.constants.insert(format!("{p}logH"), r.sup.fit.log_h);
        rec.margins.insert(format!("{p}drift"), r.sup.drift);
        rec.margins.insert(format!("{p}maxResidual"), r.sup.fit.max_residual);
        rec.grid_meta = serde_json::to_value(&r.grid).map_err(|e| Error::invalid(e.to_string()))?;
        dirs.push(r);
    }
    rec.detail("directional", dirs)
}

fn chain(cfg: &RunConfig, force: Option<RegimeSpec>, rec: &mut SuiteRecord) -> Result<()> {
    let inst = cfg.build_instance(force.as_ref())?;
    describe(&inst, rec)?;
    rec.require(inst.relations.iter().all(|r| r.verdict.holds()));
    let lower = verify_lower_bound(&inst, cfg.options.lower_bound_kmax)?;
    rec.require(lower.holds);
    rec.constants.insert("logQ1".into(), lower.log_q1);
    rec.margins.insert("lowerBound".into(), lower.min_margin);
    rec.detail("lowerBound", lower)?;
    let witness = divergence_witness(&inst)?;
    rec.require(witness.holds);
    rec.detail("divergenceWitness", witness)?;
    let growth = verify_vector_growth(&inst, cfg.options.kmax, cfg.seed)?;
    rec.require(growth.holds);
    rec.constants.insert("supLogC".into(), growth.sup.fit.log_c);
    rec.constants.insert("supLogH".into(), growth.sup.fit.log_h);
    rec.constants.insert("l2LogC".into(), growth.l2.fit.log_c);
    rec.constants.insert("l2LogH".into(), growth.l2.fit.log_h);
    rec.margins.insert("supDrift".into(), growth.sup.drift);
    rec.margins.insert("l2Drift".into(), growth.l2.drift);
    rec.margins.insert("supMaxResidual".into(), growth.sup.fit.max_residual);
    rec.margins.insert("l2MaxResidual".into(), growth.l2.fit.max_residual);
    rec.margins.insert("recursionRelError".into(), growth.consistency.max_rel_error);
    rec.grid_meta = serde_json::to_value(&growth.grid).map_err(|e| Error::invalid(e.to_string()))?;
    rec.detail("vectorGrowth", growth)
}
