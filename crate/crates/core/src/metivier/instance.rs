use super::bump::BumpFunction;
use super::operator::{DiffOperator, NonEllipticPoint, SearchBox};
use crate::error::{Error, Result};
use crate::kernel::FlatKernel;
use crate::numerics::{tail_trend, Trend};
use crate::weightseq::{
    gamma_index, order_relation, quasianalyticity_sum, Descriptor, GammaValue, QaVerdict, Relation, Verdict,
    WeightSequence,
};
use serde::Serialize;

/// How the auxiliary sequences are chosen from `M`.
#[derive(Debug, Clone)]
pub enum RegimeRequest {
    /// Caller-supplied `L`, `V`, `N` and `tau` with `N <= A V^tau`; `M~ = M`.
    Abstract {
        l: WeightSequence,
        v: WeightSequence,
        n: WeightSequence,
        tau: f64,
        eps: Option<f64>,
    },
    /// `M~ = M^q`, `L = M^(q(1 - sigma))`, `V = M^(q sigma)`, `N = M^(q rho)`.
    GammaInfinite {
        q: Option<f64>,
        sigma: Option<f64>,
        rho: Option<f64>,
    },
    /// `T = M^(1/gamma)`, `L = T^gamma0`, `V = T^(gamma~ - gamma0)`, `M~ = T^gamma~`, `N = T^gamma'`.
    GammaFinite {
        power_rho: Option<f64>,
        gamma0: Option<f64>,
        gamma_tilde: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Regime {
    #[serde(rename_all = "camelCase")]
    Abstract { tau: f64, log_a: f64 },
    #[serde(rename_all = "camelCase")]
    GammaInfinite { q: f64, sigma: f64, rho: f64, tau: f64 },
    #[serde(rename_all = "camelCase")]
    GammaFinite {
        gamma: f64,
        power_rho: f64,
        gamma0: f64,
        gamma_tilde: f64,
        gamma_prime: f64,
    },
}

/// A scalar inequality `lhs < rhs` (or `<=` when `strict` is false).
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Constraint {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub holds: bool,
}

impl Constraint {
    fn lt(name: &str, lhs: f64, rhs: f64) -> Self {
        Constraint {
            name: name.into(),
            lhs,
            rhs,
            strict: true,
            holds: lhs < rhs,
        }
    }

    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Constraint {
            name: name.into(),
            lhs,
            rhs,
            strict: false,
            holds: lhs <= rhs,
        }
    }
}

/// A relation between two sequences of the instance.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SequenceCheck {
    pub name: String,
    pub verdict: Verdict,
    pub symbolic: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceOptions {
    pub delta: f64,
    pub bump_exponent: Option<f64>,
    pub search: SearchBox,
    pub starts: usize,
    pub seed: u64,
    /// Use this point instead of searching; it must still be a zero of `p_d`.
    pub point: Option<(Vec<f64>, Vec<f64>)>,
}

impl InstanceOptions {
    pub fn for_dimension(n: usize) -> Self {
        InstanceOptions {
            delta: 0.5,
            bump_exponent: None,
            search: SearchBox {
                center: vec![0.0; n],
                half_width: 1.0,
            },
            starts: 32,
            seed: 0,
            point: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SequencePack {
    pub m: Descriptor,
    pub l: Descriptor,
    pub v: Descriptor,
    pub n: Descriptor,
    pub m_tilde: Descriptor,
}

/// Everything needed to build `u` and its iterates for one operator and one `M`.
#[derive(Debug, Clone)]
pub struct MetivierInstance {
    pub operator: DiffOperator,
    pub witness: NonEllipticPoint,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub delta: f64,
    pub eps: f64,
    pub m: WeightSequence,
    pub l: WeightSequence,
    pub v: WeightSequence,
    pub n: WeightSequence,
    pub m_tilde: WeightSequence,
    pub kernel: FlatKernel,
    pub bump: BumpFunction,
    pub regime: Regime,
    pub coefficient_constant: f64,
    pub constraints: Vec<Constraint>,
    pub relations: Vec<SequenceCheck>,
}

fn gamma_of(m: &WeightSequence) -> Result<GammaValue> {
    if let Some(g) = m.shape().gamma() {
        return Ok(if g.is_infinite() {
            GammaValue::Infinite
        } else {
            GammaValue::Finite(g)
        });
    }
    Ok(gamma_index(m, 64.0, 1e-3)?.value)
}

fn midpoint(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

fn infeasible(constraints: &[Constraint]) -> Option<Error> {
    constraints.iter().find(|c| !c.holds).map(|c| {
        let op = if c.strict { "<" } else { "<=" };
        Error::Infeasible(format!("{}: {} {} {} fails", c.name, c.lhs, op, c.rhs))
    })
}

fn non_quasianalytic(l: &WeightSequence) -> Result<Verdict> {
    if let Some(v) = l.shape().quasianalytic() {
        return Ok(if v.holds() { Verdict::Fails } else { Verdict::Holds });
    }
    let k = l.truncation();
    Ok(match quasianalyticity_sum(l, k - 1)?.verdict {
        QaVerdict::NonQuasianalytic => Verdict::Holds,
        QaVerdict::Quasianalytic => Verdict::Fails,
        QaVerdict::Inconclusive => Verdict::Inconclusive,
    })
}

fn relation(name: &str, a: &WeightSequence, b: &WeightSequence, r: Relation) -> Result<SequenceCheck> {
    let v = order_relation(a, b, r)?;
    Ok(SequenceCheck {
        name: name.into(),
        verdict: v.holds,
        symbolic: v.symbolic,
    })
}

/// `eps` strictly inside `(d (1 - 1/tau), 1/2)`.
fn eps_window(d: f64, tau: f64) -> (f64, f64) {
    (d * (1.0 - 1.0 / tau), 0.5)
}

/// Chooses the non-elliptic point, the auxiliary sequences, `eps`, the bump and
/// the kernel; every constraint of the chosen regime is checked.
pub fn select_parameters(
    m: &WeightSequence,
    op: &DiffOperator,
    request: RegimeRequest,
    opts: &InstanceOptions,
) -> Result<MetivierInstance> {
    let d = op.order as f64;
    let witness = match &opts.point {
        Some((x0, xi0)) => {
            let norm: f64 = xi0.iter().map(|v| v * v).sum::<f64>().sqrt();
            let xi0: Vec<f64> = xi0.iter().map(|v| v / norm).collect();
            let residual = op.principal(x0, &xi0).abs();
            NonEllipticPoint {
                x0: x0.clone(),
                xi0,
                residual,
                found: residual <= super::operator::WITNESS_TOL,
            }
        }
        None => op.find_nonelliptic_point(&opts.search, opts.starts, opts.seed),
    };
    if !witness.found {
        return Err(Error::precondition(format!(
            "no witness: min |p_d(x, xi)| over the search box is {:.6e}",
            witness.residual
        )));
    }
    let mut constraints = Vec::new();
    let mut relations = Vec::new();
    let (regime, l, v, n, m_tilde, eps) = match request {
        RegimeRequest::Abstract { l, v, n, tau, eps } => {
            let (lo, hi) = eps_window(d, tau);
            let eps = eps.unwrap_or(midpoint(lo, hi));
            constraints.push(Constraint::lt("1 < tau", 1.0, tau));
            constraints.push(Constraint::lt("tau < 2d/(2d-1)", tau, 2.0 * d / (2.0 * d - 1.0)));
            constraints.push(Constraint::lt("d(1 - 1/tau) < eps", lo, eps));
            constraints.push(Constraint::le("eps <= 1/2", eps, hi));
            let gap: Vec<f64> = (0..=n.truncation()).map(|k| n.log_m()[k] - tau * v.log_m()[k]).collect();
            let log_a = gap.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
            let bounded = tail_trend(&gap[1..]).trend != Trend::Increasing;
            relations.push(SequenceCheck {
                name: "N <= A V^tau".into(),
                verdict: Verdict::from_bool(bounded),
                symbolic: false,
            });
            let pointwise = (0..=v.truncation()).all(|k| v.log_m()[k] <= m.log_m()[k] + 1e-12);
            relations.push(SequenceCheck {
                name: "V <= M".into(),
                verdict: Verdict::from_bool(pointwise),
                symbolic: false,
            });
            relations.push(relation("L V preceq M", &l.product(&v)?, m, Relation::Preceq)?);
            (Regime::Abstract { tau, log_a }, l, v, n, m.clone(), eps)
        }
        RegimeRequest::GammaInfinite { q, sigma, rho } => {
            if !gamma_of(m)?.is_infinite() {
                return Err(Error::precondition("gammaInfinite needs gamma(M) = inf"));
            }
            let cap = |s: f64| 2.0 * d * s / (2.0 * d - 1.0);
            let sigma = sigma.unwrap_or(0.9);
            let rho = rho.unwrap_or(if 1.5 < cap(sigma) { 1.5 } else { midpoint(1.0, cap(sigma)) });
            let q = q.unwrap_or(if 0.8 * rho > 1.0 && 0.8 < 1.0 { 0.8 } else { midpoint(1.0 / rho, 1.0) });
            constraints.push(Constraint::lt("0 < q", 0.0, q));
            constraints.push(Constraint::lt("q < 1", q, 1.0));
            constraints.push(Constraint::lt("0 < sigma", 0.0, sigma));
            constraints.push(Constraint::lt("sigma < 1", sigma, 1.0));
            constraints.push(Constraint::lt("1 < rho", 1.0, rho));
            constraints.push(Constraint::lt("rho < 2d sigma/(2d-1)", rho, cap(sigma)));
            constraints.push(Constraint::lt("1 < rho q", 1.0, rho * q));
            if let Some(e) = infeasible(&constraints) {
                return Err(e);
            }
            let tau = rho / sigma;
            let (lo, hi) = eps_window(d, tau);
            let eps = midpoint(lo, hi);
            constraints.push(Constraint::lt("d(1 - 1/tau) < eps", lo, eps));
            constraints.push(Constraint::le("eps <= 1/2", eps, hi));
            let mt = m.power(q)?;
            let l = m.power(q * (1.0 - sigma))?;
            let v = m.power(q * sigma)?;
            let n = m.power(q * rho)?;
            relations.push(relation("M~ lhd M", &mt, m, Relation::Lhd)?);
            (Regime::GammaInfinite { q, sigma, rho, tau }, l, v, n, mt, eps)
        }
        RegimeRequest::GammaFinite {
            power_rho,
            gamma0,
            gamma_tilde,
        } => {
            let gamma = match gamma_of(m)? {
                GammaValue::Finite(g) => g,
                GammaValue::Infinite => return Err(Error::precondition("gammaFinite needs gamma(M) < inf")),
            };
            if !(gamma > 1.0) {
                return Err(Error::Infeasible(format!(
                    "gammaFinite needs 1 < 1/rho < gamma(M), an empty interval for gamma = {gamma}"
                )));
            }
            let rho = power_rho.unwrap_or(1.0 / midpoint(1.0, gamma));
            let g0 = gamma0.unwrap_or(midpoint(rho * gamma, gamma));
            let gt = gamma_tilde.unwrap_or(midpoint(gamma - (gamma - g0) / (2.0 * d), gamma));
            constraints.push(Constraint::lt("1 < 1/rho", 1.0, 1.0 / rho));
            constraints.push(Constraint::lt("1/rho < gamma", 1.0 / rho, gamma));
            constraints.push(Constraint::lt("rho gamma < gamma0", rho * gamma, g0));
            constraints.push(Constraint::lt("gamma0 < gamma~", g0, gt));
            constraints.push(Constraint::lt("gamma~ < gamma", gt, gamma));
            constraints.push(Constraint::lt("gamma - gamma~ < (gamma - gamma0)/(2d)", gamma - gt, (gamma - g0) / (2.0 * d)));
            if let Some(e) = infeasible(&constraints) {
                return Err(e);
            }
            let eps = d * (gt - g0) / (2.0 * d * gt - g0);
            let gp = d * gt / (d - eps);
            constraints.push(Constraint::lt("eps < 1/2", eps, 0.5));
            constraints.push(Constraint::lt("gamma < gamma'", gamma, gp));
            let t = m.power(1.0 / gamma)?;
            let l = t.power(g0)?;
            let v = t.power(gt - g0)?;
            let mt = t.power(gt)?;
            let n = t.power(gp)?;
            relations.push(relation("M~ lhd M", &mt, m, Relation::Lhd)?);
            (
                Regime::GammaFinite {
                    gamma,
                    power_rho: rho,
                    gamma0: g0,
                    gamma_tilde: gt,
                    gamma_prime: gp,
                },
                l,
                v,
                n,
                mt,
                eps,
            )
        }
    };
    constraints.push(Constraint::lt("0 < eps", 0.0, eps));
    constraints.push(Constraint::lt("eps < 1", eps, 1.0));
    relations.push(relation("M lhd N", m, &n, Relation::Lhd)?);
    relations.push(SequenceCheck {
        name: "L non-quasianalytic".into(),
        verdict: non_quasianalytic(&l)?,
        symbolic: l.shape().quasianalytic().is_some(),
    });
    let gamma_n = gamma_of(&n)?.as_f64();
    constraints.push(Constraint::lt("0 < gamma(N)", 0.0, gamma_n));
    if let Some(e) = infeasible(&constraints) {
        return Err(e);
    }
    if let Some(r) = relations.iter().find(|r| r.verdict == Verdict::Fails) {
        return Err(Error::Infeasible(format!("{} fails", r.name)));
    }
    let (x0, xi0) = (witness.x0.clone(), witness.xi0.clone());
    let cp = op.coefficient_constant(&x0, &xi0, opts.delta, &l);
    let bump = BumpFunction::build(&l, op.dimension, opts.delta, opts.bump_exponent, 2.0 * cp)?;
    Ok(MetivierInstance {
        operator: op.clone(),
        witness,
        x0,
        xi0,
        delta: opts.delta,
        eps,
        kernel: FlatKernel::new(&n),
        m: m.clone(),
        l,
        v,
        n,
        m_tilde: m_tilde.clone(),
        bump,
        regime,
        coefficient_constant: cp,
        constraints,
        relations,
    })
}

impl MetivierInstance {
    pub fn dimension(&self) -> usize {
        self.operator.dimension
    }

    pub fn order(&self) -> u32 {
        self.operator.order
    }

    pub fn sequences(&self) -> SequencePack {
        SequencePack {
            m: Descriptor::of_sequence(&self.m),
            l: Descriptor::of_sequence(&self.l),
            v: Descriptor::of_sequence(&self.v),
            n: Descriptor::of_sequence(&self.n),
            m_tilde: Descriptor::of_sequence(&self.m_tilde),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d1() -> DiffOperator {
        DiffOperator::parse("D1", Some(2)).unwrap()
    }

    #[test]
    fn g3_finite_instance() {
        let m = WeightSequence::gevrey(3.0, 128).unwrap();
        let req = RegimeRequest::GammaFinite {
            power_rho: Some(0.4),
            gamma0: Some(2.0),
            gamma_tilde: Some(2.8),
        };
        let inst = select_parameters(&m, &d1(), req, &InstanceOptions::for_dimension(2)).unwrap();
        assert!((inst.eps - 2.0 / 9.0).abs() < 1e-14);
        match inst.regime {
            Regime::GammaFinite { gamma_prime, .. } => assert!((gamma_prime - 3.6).abs() < 1e-12),
            _ => panic!(),
        }
        let g = |s: f64, k: usize| WeightSequence::gevrey(s, 128).unwrap().log_m()[k];
        for k in [1, 10, 100] {
            assert!((inst.l.log_m()[k] - g(2.0, k)).abs() < 1e-9 * (1.0 + g(2.0, k)));
            assert!((inst.n.log_m()[k] - g(3.6, k)).abs() < 1e-9 * (1.0 + g(3.6, k)));
            assert!((inst.m_tilde.log_m()[k] - g(2.8, k)).abs() < 1e-9 * (1.0 + g(2.8, k)));
        }
        assert_eq!(inst.xi0, vec![0.0, 1.0]);
    }

    #[test]
    fn gamma_infinite_defaults() {
        let m = WeightSequence::qpower(2.0, 2.0, 64).unwrap();
        let req = RegimeRequest::GammaInfinite {
            q: None,
            sigma: None,
            rho: None,
        };
        let inst = select_parameters(&m, &d1(), req, &InstanceOptions::for_dimension(2)).unwrap();
        match inst.regime {
            Regime::GammaInfinite { q, sigma, rho, .. } => assert_eq!((q, sigma, rho), (0.8, 0.9, 1.5)),
            _ => panic!(),
        }
        assert!(inst.eps > 1.0 - 0.9 / 1.5 && inst.eps < 0.5);
    }

    #[test]
    fn second_order_falls_back() {
        let m = WeightSequence::qpower(2.0, 2.0, 64).unwrap();
        let heat = DiffOperator::parse("heat", Some(2)).unwrap();
        let req = RegimeRequest::GammaInfinite {
            q: None,
            sigma: None,
            rho: None,
        };
        let inst = select_parameters(&m, &heat, req, &InstanceOptions::for_dimension(2)).unwrap();
        assert!(inst.constraints.iter().all(|c| c.holds));
    }

    #[test]
    fn g1_is_infeasible() {
        let m = WeightSequence::gevrey(1.0, 64).unwrap();
        let req = RegimeRequest::GammaFinite {
            power_rho: None,
            gamma0: None,
            gamma_tilde: None,
        };
        let r = select_parameters(&m, &d1(), req, &InstanceOptions::for_dimension(2));
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn laplacian_has_no_witness() {
        let m = WeightSequence::gevrey(3.0, 64).unwrap();
        let op = DiffOperator::parse("laplacian", Some(2)).unwrap();
        let req = RegimeRequest::GammaFinite {
            power_rho: None,
            gamma0: None,
            gamma_tilde: None,
        };
        let r = select_parameters(&m, &op, req, &InstanceOptions::for_dimension(2));
        assert!(matches!(r, Err(Error::Precondition(ref s)) if s.contains("no witness")));
    }
}
