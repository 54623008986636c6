use crate::error::{Error, Result};
use crate::metivier::{select_parameters, DiffOperator, InstanceOptions, MetivierInstance, RegimeRequest, SearchBox};
use crate::weightseq::{gamma_index, Descriptor, DescriptorRef, Family, WeightSequence};
use serde::Deserialize;
use std::collections::BTreeMap;

pub const DEFAULT_TRUNCATION: usize = 2048;

/// Batch configuration. Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    #[serde(default)]
    pub sequences: BTreeMap<String, Descriptor>,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub instance: Option<InstanceSpec>,
    #[serde(default)]
    pub suites: Vec<String>,
    /// Sequences used by the sequence-level suites; all named sequences when empty.
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub aux: AuxSpec,
    #[serde(default)]
    pub options: SuiteOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    /// Truncation for descriptors without `K`.
    #[serde(default)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct OperatorSpec {
    /// `D1`, `x2 D1`, `D1 - D2^2`, `laplacian`, `heat`, ...
    pub expr: String,
    #[serde(default)]
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct InstanceSpec {
    /// Name of `M` in `sequences`.
    pub sequence: String,
    #[serde(default)]
    pub regime: RegimeSpec,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub bump_exponent: Option<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub xi0: Option<Vec<f64>>,
    #[serde(default)]
    pub search_half_width: Option<f64>,
    #[serde(default)]
    pub starts: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum RegimeSpec {
    /// `gammaInfinite` when `gamma(M)` is infinite, else `gammaFinite`, with default parameters.
    #[default]
    Auto,
    Abstract {
        l: String,
        v: String,
        n: String,
        tau: f64,
        #[serde(default)]
        eps: Option<f64>,
    },
    #[serde(rename_all = "camelCase")]
    GammaInfinite {
        #[serde(default)]
        q: Option<f64>,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        rho: Option<f64>,
    },
    #[serde(rename_all = "camelCase")]
    GammaFinite {
        #[serde(default)]
        power_rho: Option<f64>,
        #[serde(default)]
        gamma0: Option<f64>,
        #[serde(default)]
        gamma_tilde: Option<f64>,
    },
    /// `M = G^s` with coefficients of class `G^r`, `1 < r < s`; `r` defaults to `1 + (s - 1)/10`.
    Gevrey {
        #[serde(default)]
        r: Option<f64>,
    },
}

/// Sequences and parameters of the two-sequence suite.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct AuxSpec {
    pub t: DescriptorRef,
    pub u: DescriptorRef,
    pub tau: f64,
    pub a: f64,
    pub sigma: f64,
}

impl Default for AuxSpec {
    fn default() -> Self {
        let g = |s: f64| DescriptorRef::Inline(Box::new(Descriptor::parse_shorthand(&format!("gevrey:{s}")).expect("shorthand")));
        AuxSpec {
            t: g(2.0),
            u: g(3.0),
            tau: 1.5,
            a: 0.5,
            sigma: 1.6,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct SuiteOptions {
    /// Largest iterate order for the growth fits.
    pub kmax: usize,
    pub envelope_kmax: usize,
    pub nu_max: usize,
    pub lower_bound_kmax: usize,
    pub last_estimate_kmax: usize,
    pub sandwich_kmax: usize,
    pub splitting_trials: usize,
    pub spot_checks: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            kmax: 12,
            envelope_kmax: 8,
            nu_max: 4,
            lower_bound_kmax: 25,
            last_estimate_kmax: 30,
            sandwich_kmax: 30,
            splitting_trials: 10_000,
            spot_checks: 20,
        }
    }
}

/// 1-based line and column of the first occurrence of `"needle"` in `raw`.
pub fn locate(raw: &str, needle: &str) -> (usize, usize) {
    let quoted = format!("\"{needle}\"");
    match raw.find(&quoted) {
        Some(pos) => {
            let before = &raw[..pos];
            let line = before.matches('\n').count() + 1;
            let column = pos - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
            (line, column)
        }
        None => (0, 0),
    }
}

impl RunConfig {
    /// Parses and checks that every referenced name resolves.
    pub fn parse(raw: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(raw)?;
        let at = |name: &str, message: String| {
            let (line, column) = locate(raw, name);
            Error::Config { message, line, column }
        };
        let known = |n: &str| cfg.sequences.contains_key(n);
        let mut refs: Vec<String> = Vec::new();
        for d in cfg.sequences.values() {
            collect_names(d, &mut refs);
        }
        for r in [&cfg.aux.t, &cfg.aux.u] {
            match r {
                DescriptorRef::Name(n) => refs.push(n.clone()),
                DescriptorRef::Inline(d) => collect_names(d, &mut refs),
            }
        }
        refs.extend(cfg.targets.iter().cloned());
        if let Some(i) = &cfg.instance {
            refs.push(i.sequence.clone());
            if let RegimeSpec::Abstract { l, v, n, .. } = &i.regime {
                refs.extend([l.clone(), v.clone(), n.clone()]);
            }
        }
        for n in refs {
            if !known(&n) {
                return Err(at(&n, format!("unknown sequence '{n}'")));
            }
        }
        for s in &cfg.suites {
            if !super::suites::SUITES.contains(&s.as_str()) {
                return Err(at(s, format!("unknown suite '{s}'")));
            }
        }
        cfg.resolve_all().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::Config {
                message: other.to_string(),
                line: 0,
                column: 0,
            },
        })?;
        Ok(cfg)
    }

    pub fn default_truncation(&self) -> usize {
        self.truncation.unwrap_or(DEFAULT_TRUNCATION)
    }

    /// Builds the named sequence, following references in `of`.
    pub fn sequence(&self, name: &str) -> Result<WeightSequence> {
        self.sequence_at(name, 0)
    }

    fn sequence_at(&self, name: &str, depth: usize) -> Result<WeightSequence> {
        if depth > 32 {
            return Err(Error::invalid(format!("sequence '{name}' refers to itself")));
        }
        let d = self
            .sequences
            .get(name)
            .ok_or_else(|| Error::invalid(format!("unknown sequence '{name}'")))?;
        d.resolve(&|n| self.sequence_at(n, depth + 1), self.default_truncation())
    }

    pub fn resolve_ref(&self, r: &DescriptorRef) -> Result<WeightSequence> {
        match r {
            DescriptorRef::Name(n) => self.sequence(n),
            DescriptorRef::Inline(d) => d.resolve(&|n| self.sequence(n), self.default_truncation()),
        }
    }

    pub fn resolve_all(&self) -> Result<BTreeMap<String, WeightSequence>> {
        self.sequences
            .keys()
            .map(|k| Ok((k.clone(), self.sequence(k)?)))
            .collect()
    }

    /// Target names for the sequence-level suites.
    pub fn target_names(&self) -> Vec<String> {
        if self.targets.is_empty() {
            self.sequences.keys().cloned().collect()
        } else {
            self.targets.clone()
        }
    }

    pub fn operator(&self) -> Result<DiffOperator> {
        let spec = self
            .operator
            .as_ref()
            .ok_or_else(|| Error::invalid("config has no operator"))?;
        DiffOperator::parse(&spec.expr, spec.dimension)
    }

    pub fn instance_spec(&self) -> Result<&InstanceSpec> {
        self.instance
            .as_ref()
            .ok_or_else(|| Error::invalid("config has no instance"))
    }

    /// Builds the instance with the configured regime, or with `force` when given.
    pub fn build_instance(&self, force: Option<&RegimeSpec>) -> Result<MetivierInstance> {
        let spec = self.instance_spec()?;
        let op = self.operator()?;
        let m = self.sequence(&spec.sequence)?;
        let regime = force.unwrap_or(&spec.regime);
        let request = self.request(regime, &m)?;
        let n = op.dimension;
        let mut opts = InstanceOptions::for_dimension(n);
        opts.seed = self.seed;
        if let Some(d) = spec.delta {
            opts.delta = d;
        }
        opts.bump_exponent = spec.bump_exponent;
        if let Some(h) = spec.search_half_width {
            opts.search = SearchBox {
                center: vec![0.0; n],
                half_width: h,
            };
        }
        if let Some(s) = spec.starts {
            opts.starts = s;
        }
        if let (Some(x0), Some(xi0)) = (&spec.x0, &spec.xi0) {
            opts.point = Some((x0.clone(), xi0.clone()));
        } else if spec.x0.is_some() != spec.xi0.is_some() {
            return Err(Error::invalid("x0 and xi0 must be given together"));
        }
        select_parameters(&m, &op, request, &opts)
    }

    fn request(&self, regime: &RegimeSpec, m: &WeightSequence) -> Result<RegimeRequest> {
        Ok(match regime {
            RegimeSpec::Auto => {
                let infinite = match m.shape().gamma() {
                    Some(g) => g.is_infinite(),
                    None => gamma_index(m, 64.0, 1e-3)?.value.is_infinite(),
                };
                if infinite {
                    RegimeRequest::GammaInfinite {
                        q: None,
                        sigma: None,
                        rho: None,
                    }
                } else {
                    RegimeRequest::GammaFinite {
                        power_rho: None,
                        gamma0: None,
                        gamma_tilde: None,
                    }
                }
            }
            RegimeSpec::Abstract { l, v, n, tau, eps } => RegimeRequest::Abstract {
                l: self.sequence(l)?,
                v: self.sequence(v)?,
                n: self.sequence(n)?,
                tau: *tau,
                eps: *eps,
            },
            RegimeSpec::GammaInfinite { q, sigma, rho } => RegimeRequest::GammaInfinite {
                q: *q,
                sigma: *sigma,
                rho: *rho,
            },
            RegimeSpec::GammaFinite {
                power_rho,
                gamma0,
                gamma_tilde,
            } => RegimeRequest::GammaFinite {
                power_rho: *power_rho,
                gamma0: *gamma0,
                gamma_tilde: *gamma_tilde,
            },
            RegimeSpec::Gevrey { r } => {
                let Family::Gevrey { s } = m.family() else {
                    return Err(Error::precondition("the Gevrey regime needs M = G^s"));
                };
                let s = *s;
                if !(s > 1.0) {
                    return Err(Error::Infeasible(format!("G^{s}: need s > 1")));
                }
                let r = r.unwrap_or(1.0 + 0.1 * (s - 1.0));
                if !(r >= 1.0 && r < s) {
                    return Err(Error::Infeasible(format!("need 1 <= r < s, got r = {r}, s = {s}")));
                }
                RegimeRequest::GammaFinite {
                    power_rho: Some(r / s),
                    gamma0: None,
                    gamma_tilde: None,
                }
            }
        })
    }
}

fn collect_names(d: &Descriptor, out: &mut Vec<String>) {
    for r in &d.of {
        match r {
            DescriptorRef::Name(n) => out.push(n.clone()),
            DescriptorRef::Inline(i) => collect_names(i, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_sequence_is_located() {
        let raw = "{\n  \"sequences\": {\"M\": {\"family\": \"gevrey\", \"params\": {\"s\": 2}}},\n  \"targets\": [\"Q\"]\n}";
        match RunConfig::parse(raw) {
            Err(Error::Config { line, column, message }) => {
                assert_eq!((line, column), (3, 15));
                assert!(message.contains("'Q'"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let raw = "{\n  \"seed\": ,\n}";
        assert!(matches!(RunConfig::parse(raw), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn references_resolve() {
        let raw = r#"{"sequences": {"A": {"family": "gevrey", "params": {"s": 1.5}, "K": 64},
                      "B": {"family": "power", "params": {"tau": 2}, "of": ["A"], "K": 64}}}"#;
        let cfg = RunConfig::parse(raw).unwrap();
        let b = cfg.sequence("B").unwrap();
        let g3 = WeightSequence::gevrey(3.0, 64).unwrap();
        assert!((b.log_m()[40] - g3.log_m()[40]).abs() < 1e-9);
    }

    #[test]
    fn cycles_are_rejected() {
        let raw = r#"{"sequences": {"A": {"family": "power", "params": {"tau": 2}, "of": ["A"]}}}"#;
        assert!(RunConfig::parse(raw).is_err());
    }
}
