use super::{Family, WeightSequence};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// JSON description of a weight sequence:
/// `{"family": "gevrey", "params": {"s": 2}, "K": 2048}`,
/// `{"family": "custom", "logM": [...]}`,
/// `{"family": "power", "params": {"tau": 0.5}, "of": ["M"]}`,
/// `{"family": "product", "of": ["M", {...}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub family: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "logM", default, skip_serializing_if = "Option::is_none")]
    pub log_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub of: Vec<DescriptorRef>,
}

/// Either a name resolved by the caller or an inline descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DescriptorRef {
    Name(String),
    Inline(Box<Descriptor>),
}

impl Descriptor {
    fn param(&self, name: &str) -> Result<f64> {
        self.params.get(name).copied().ok_or_else(|| {
            Error::invalid(format!("family '{}' needs parameter '{name}'", self.family))
        })
    }

    /// Builds the sequence; `lookup` resolves names in `of`.
    pub fn resolve(
        &self,
        lookup: &dyn Fn(&str) -> Result<WeightSequence>,
        default_k: usize,
    ) -> Result<WeightSequence> {
        let k = self.k.unwrap_or(default_k);
        let child = |r: &DescriptorRef| -> Result<WeightSequence> {
            match r {
                DescriptorRef::Name(n) => lookup(n),
                DescriptorRef::Inline(d) => d.resolve(lookup, k),
            }
        };
        match self.family.as_str() {
            "gevrey" => WeightSequence::gevrey(self.param("s")?, k),
            "qpower" => WeightSequence::qpower(self.param("q")?, self.param("r")?, k),
            "logpower" => WeightSequence::logpower(self.param("sigma")?, k),
            "custom" => {
                let lm = self
                    .log_m
                    .clone()
                    .ok_or_else(|| Error::invalid("custom family needs 'logM'"))?;
                WeightSequence::custom(lm)
            }
            "power" => {
                let [base] = self.of.as_slice() else {
                    return Err(Error::invalid("power needs exactly one entry in 'of'"));
                };
                child(base)?.power(self.param("tau")?)
            }
            "product" => {
                let [a, b] = self.of.as_slice() else {
                    return Err(Error::invalid("product needs exactly two entries in 'of'"));
                };
                child(a)?.product(&child(b)?)
            }
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }

    /// Parses `gevrey:2`, `qpower:2,3`, `logpower:1`, optionally with `@K`.
    pub fn parse_shorthand(s: &str) -> Result<Descriptor> {
        let (body, k) = match s.split_once('@') {
            Some((b, k)) => (
                b,
                Some(k.parse::<usize>().map_err(|_| Error::invalid(format!("bad truncation in '{s}'")))?),
            ),
            None => (s, None),
        };
        let (fam, args) = body
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("expected family:params, got '{s}'")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("bad parameters in '{s}'")))?;
        let names: &[&str] = match fam {
            "gevrey" => &["s"],
            "qpower" => &["q", "r"],
            "logpower" => &["sigma"],
            _ => return Err(Error::invalid(format!("unknown family '{fam}'"))),
        };
        if nums.len() != names.len() {
            return Err(Error::invalid(format!("'{fam}' takes {} parameter(s)", names.len())));
        }
        Ok(Descriptor {
            family: fam.to_string(),
            params: names.iter().map(|n| n.to_string()).zip(nums).collect(),
            k,
            log_m: None,
            of: Vec::new(),
        })
    }

    /// Descriptor reproducing `m` (custom families embed the table).
    pub fn of_sequence(m: &WeightSequence) -> Descriptor {
        let mut d = Descriptor::of_family(m.family(), m);
        d.k = Some(m.truncation());
        d
    }

    fn of_family(f: &Family, m: &WeightSequence) -> Descriptor {
        let mk = |family: &str, params: Vec<(&str, f64)>, of: Vec<DescriptorRef>| Descriptor {
            family: family.into(),
            params: params.into_iter().map(|(a, b)| (a.to_string(), b)).collect(),
            k: None,
            log_m: None,
            of,
        };
        match f {
            Family::Gevrey { s } => mk("gevrey", vec![("s", *s)], vec![]),
            Family::Qpower { q, r } => mk("qpower", vec![("q", *q), ("r", *r)], vec![]),
            Family::Logpower { sigma } => mk("logpower", vec![("sigma", *sigma)], vec![]),
            Family::Power { tau, of } => mk(
                "power",
                vec![("tau", *tau)],
                vec![DescriptorRef::Inline(Box::new(Descriptor::of_family(of, m)))],
            ),
            Family::Product { of } => mk(
                "product",
                vec![],
                vec![
                    DescriptorRef::Inline(Box::new(Descriptor::of_family(&of.0, m))),
                    DescriptorRef::Inline(Box::new(Descriptor::of_family(&of.1, m))),
                ],
            ),
            Family::Custom => Descriptor {
                family: "custom".into(),
                params: BTreeMap::new(),
                k: None,
                log_m: Some(m.log_m().to_vec()),
                of: vec![],
            },
        }
    }
}

/// Lookup that knows no names.
pub fn no_names(name: &str) -> Result<WeightSequence> {
    Err(Error::invalid(format!("unknown sequence '{name}'")))
}

impl std::str::FromStr for Descriptor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Descriptor::parse_shorthand(s)
    }
}
