//! Log-domain weight sequences and their classification.

mod descriptor;
mod gamma;
mod order;
mod predicates;
mod shape;
mod splitting;

pub use descriptor::{no_names, Descriptor, DescriptorRef};
pub use gamma::{gamma_index, GammaEstimate, GammaValue};
pub use order::{order_relation, OrderVerdict, Relation, Witness};
pub use predicates::{
    analytic_inclusion, derivation_closed, quasianalyticity_sum, strong_nonquasianalyticity,
    PredicateReport, QaVerdict, QuasianalyticityReport, StrongNqaReport, Verdict,
};
pub use shape::Shape;
pub use splitting::{check_splitting_lemma, splitting_holds, SplittingReport};

use crate::error::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

pub const DEFAULT_TRUNCATION: usize = 2048;

/// Symbolic family tag; every tag except `Custom` can be rebuilt at any truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Gevrey { s: f64 },
    Qpower { q: f64, r: f64 },
    Logpower { sigma: f64 },
    Product { of: Box<(Family, Family)> },
    Power { tau: f64, of: Box<Family> },
    Custom,
}

impl Family {
    pub fn is_symbolic(&self) -> bool {
        match self {
            Family::Custom => false,
            Family::Product { of } => of.0.is_symbolic() && of.1.is_symbolic(),
            Family::Power { of, .. } => of.is_symbolic(),
            _ => true,
        }
    }

    /// `log mu_k` from the closed form; `None` for custom tables.
    pub fn log_mu_at(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(f64::NEG_INFINITY);
        }
        let kf = k as f64;
        Some(match self {
            Family::Gevrey { s } => s * kf.ln(),
            // k^r - (k-1)^r without cancellation
            Family::Qpower { q, r } => -kf.powf(*r) * (r * (-1.0 / kf).ln_1p()).exp_m1() * q.ln(),
            Family::Logpower { sigma } => {
                let a = (std::f64::consts::E + kf).ln();
                let b = (std::f64::consts::E + kf - 1.0).ln();
                // k ln a - (k-1) ln b = ln a + (k-1) ln(a/b)
                kf.ln() + sigma * (a.ln() + (kf - 1.0) * ((a - b) / b).ln_1p())
            }
            Family::Product { of } => of.0.log_mu_at(k)? + of.1.log_mu_at(k)?,
            Family::Power { tau, of } => tau * of.log_mu_at(k)?,
            Family::Custom => return None,
        })
    }

    /// `log M_k` from the closed form; `None` for custom tables.
    pub fn log_m_at(&self, k: usize) -> Option<f64> {
        let kf = k as f64;
        Some(match self {
            Family::Gevrey { s } => s * ln_factorial(k),
            Family::Qpower { q, r } => kf.powf(*r) * q.ln(),
            Family::Logpower { sigma } => {
                ln_factorial(k) + sigma * kf * (std::f64::consts::E + kf).ln().ln()
            }
            Family::Product { of } => of.0.log_m_at(k)? + of.1.log_m_at(k)?,
            Family::Power { tau, of } => tau * of.log_m_at(k)?,
            Family::Custom => return None,
        })
    }

    fn log_mu(&self, k_max: usize) -> Option<Vec<f64>> {
        (0..=k_max).map(|k| self.log_mu_at(k)).collect()
    }
}

/// Weight sequence stored as `log M_k` and `log mu_k = log M_k - log M_{k-1}`, `k = 0..=K`.
///
/// Tables are shared, so clones are cheap.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    log_m: Arc<[f64]>,
    log_mu: Arc<[f64]>,
    family: Family,
}

impl WeightSequence {
    pub fn gevrey(s: f64, k: usize) -> Result<Self> {
        if !(s >= 1.0) || !s.is_finite() {
            return Err(Error::invalid(format!("Gevrey order s = {s} must be >= 1")));
        }
        Self::from_family(Family::Gevrey { s }, k)
    }

    pub fn qpower(q: f64, r: f64, k: usize) -> Result<Self> {
        if !(q > 1.0 && r > 1.0) || !q.is_finite() || !r.is_finite() {
            return Err(Error::invalid(format!("QPower needs q, r > 1 (got q = {q}, r = {r})")));
        }
        Self::from_family(Family::Qpower { q, r }, k)
    }

    pub fn logpower(sigma: f64, k: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("LogPower needs sigma > 0 (got {sigma})")));
        }
        Self::from_family(Family::Logpower { sigma }, k)
    }

    /// Builds from a custom table of `log M_k`, `k = 0..=K`.
    pub fn custom(log_m: Vec<f64>) -> Result<Self> {
        if log_m.len() < 3 {
            return Err(Error::NotAWeightSequence("need K >= 2".into()));
        }
        let mut log_mu = vec![f64::NEG_INFINITY; log_m.len()];
        for k in 1..log_m.len() {
            log_mu[k] = log_m[k] - log_m[k - 1];
        }
        let w = WeightSequence {
            log_m: log_m.into(),
            log_mu: log_mu.into(),
            family: Family::Custom,
        };
        w.validate()?;
        Ok(w)
    }

    /// Rebuilds a symbolic family at truncation `k`.
    pub fn from_family(family: Family, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("truncation K must be >= 2"));
        }
        let log_mu = family
            .log_mu(k)
            .ok_or_else(|| Error::invalid("custom sequences cannot be rebuilt"))?;
        let log_m = cumulative(&log_mu);
        let w = WeightSequence {
            log_m: log_m.into(),
            log_mu: log_mu.into(),
            family,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn with_truncation(&self, k: usize) -> Result<Self> {
        if k == self.truncation() {
            return Ok(self.clone());
        }
        Self::from_family(self.family.clone(), k)
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.truncation() != other.truncation() {
            return Err(Error::TruncationMismatch {
                left: self.truncation(),
                right: other.truncation(),
            });
        }
        let family = if self.family.is_symbolic() && other.family.is_symbolic() {
            Family::Product {
                of: Box::new((self.family.clone(), other.family.clone())),
            }
        } else {
            Family::Custom
        };
        let log_mu: Vec<f64> = self.log_mu.iter().zip(other.log_mu.iter()).map(|(a, b)| a + b).collect();
        let w = WeightSequence {
            log_m: cumulative(&log_mu).into(),
            log_mu: log_mu.into(),
            family,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn power(&self, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid(format!("power exponent tau = {tau} must be > 0")));
        }
        let family = if self.family.is_symbolic() {
            Family::Power {
                tau,
                of: Box::new(self.family.clone()),
            }
        } else {
            Family::Custom
        };
        let mut log_mu: Vec<f64> = self.log_mu.iter().map(|x| tau * x).collect();
        log_mu[0] = f64::NEG_INFINITY;
        let w = WeightSequence {
            log_m: cumulative(&log_mu).into(),
            log_mu: log_mu.into(),
            family,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn truncation(&self) -> usize {
        self.log_m.len() - 1
    }

    pub fn log_m(&self) -> &[f64] {
        &self.log_m
    }

    /// `log mu_k` for `k = 0..=K`; entry 0 is `-inf`.
    pub fn log_mu(&self) -> &[f64] {
        &self.log_mu
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn shape(&self) -> Shape {
        Shape::of(&self.family)
    }

    fn validate(&self) -> Result<()> {
        let lm = &self.log_m;
        let mu = &self.log_mu;
        let k = self.truncation();
        if lm.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotAWeightSequence("non-finite log M entry".into()));
        }
        if lm[0] != 0.0 {
            return Err(Error::NotAWeightSequence("log M_0 must be 0".into()));
        }
        if lm[1] < -1e-12 {
            return Err(Error::NotAWeightSequence(format!("M_1 < 1 (log M_1 = {})", lm[1])));
        }
        for j in 2..=k {
            if mu[j] < mu[j - 1] - 1e-12 * mu[j - 1].abs().max(1.0) {
                return Err(Error::NotAWeightSequence(format!(
                    "not log-convex at k = {}",
                    j - 1
                )));
            }
        }
        let tail = k - k / 4;
        if !(mu[k] > mu[1]) || !(mu[k] > mu[tail] + 1e-12 * mu[k].abs().max(1.0)) {
            return Err(Error::NotAWeightSequence(
                "quotients mu_k are (eventually) constant".into(),
            ));
        }
        Ok(())
    }
}

/// Neumaier-compensated prefix sums with `out[0] = 0`.
fn cumulative(log_mu: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; log_mu.len()];
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for k in 1..log_mu.len() {
        let x = log_mu[k];
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
        out[k] = s + c;
    }
    out
}

/// `ln k!`: exact summation up to 256, Stirling series beyond.
pub fn ln_factorial(k: usize) -> f64 {
    if k <= 256 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64;
    let (x2, inv) = (x * x, 1.0 / x);
    x * x.ln() - x + 0.5 * (std::f64::consts::TAU * x).ln()
        + inv * (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2)
}

/// `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mu: Vec<f64> = (0..=n).map(|k| (k as f64).ln()).collect();
    cumulative(&mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gevrey_values() {
        let g1 = WeightSequence::gevrey(1.0, 16).unwrap();
        assert!((g1.log_m()[4] - 24f64.ln()).abs() < 1e-14);
        let g2 = WeightSequence::gevrey(2.0, 16).unwrap();
        assert!((g2.log_m()[3] - 2.0 * 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn qpower_values() {
        let q = WeightSequence::qpower(2.0, 2.0, 16).unwrap();
        assert!((q.log_m()[3] - 9.0 * 2f64.ln()).abs() < 1e-13);
        let q3 = WeightSequence::qpower(1.5, 2.5, 64).unwrap();
        for k in 0..=64 {
            let exact = (k as f64).powf(2.5) * 1.5f64.ln();
            assert!((q3.log_m()[k] - exact).abs() < 1e-12 * exact.max(1.0));
        }
    }

    #[test]
    fn logpower_values() {
        let l = WeightSequence::logpower(1.0, 64).unwrap();
        assert_eq!(l.log_m()[0], 0.0);
        let lf = ln_factorials(64);
        for k in 0..=64 {
            let exact = lf[k] + k as f64 * (std::f64::consts::E + k as f64).ln().ln();
            assert!((l.log_m()[k] - exact).abs() < 1e-12 * exact.max(1.0));
        }
    }

    #[test]
    fn pointwise_matches_table() {
        let fams = [
            Family::Gevrey { s: 2.0 },
            Family::Qpower { q: 2.0, r: 1.5 },
            Family::Logpower { sigma: 1.0 },
            Family::Power { tau: 0.8, of: Box::new(Family::Gevrey { s: 3.0 }) },
        ];
        for f in fams {
            let m = WeightSequence::from_family(f.clone(), 4096).unwrap();
            for k in [0usize, 1, 7, 255, 256, 257, 1000, 4096] {
                let a = f.log_m_at(k).unwrap();
                assert!((a - m.log_m()[k]).abs() <= 1e-12 * a.abs().max(1.0), "{f:?} k={k}");
                assert_eq!(f.log_mu_at(k).unwrap(), m.log_mu()[k]);
            }
        }
        assert!(Family::Custom.log_m_at(3).is_none());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WeightSequence::gevrey(0.9, 10).is_err());
        assert!(WeightSequence::qpower(1.0, 2.0, 10).is_err());
        assert!(WeightSequence::qpower(2.0, 1.0, 10).is_err());
        assert!(WeightSequence::logpower(0.0, 10).is_err());
    }

    #[test]
    fn constant_sequence_rejected() {
        assert!(WeightSequence::custom(vec![0.0; 20]).is_err());
        // geometric: mu constant
        assert!(WeightSequence::custom((0..20).map(|k| k as f64).collect()).is_err());
    }

    #[test]
    fn product_and_power() {
        let g1 = WeightSequence::gevrey(1.0, 200).unwrap();
        let g2 = WeightSequence::gevrey(2.0, 200).unwrap();
        let p = g1.product(&g1).unwrap();
        let h = g2.power(0.5).unwrap();
        let six = g2.power(3.0).unwrap();
        for k in 0..=200 {
            assert!((p.log_m()[k] - g2.log_m()[k]).abs() < 1e-12 * g2.log_m()[k].max(1.0));
            assert!((h.log_m()[k] - g1.log_m()[k]).abs() < 1e-12 * g1.log_m()[k].max(1.0));
            assert!((six.log_m()[k] - 6.0 * g1.log_m()[k]).abs() < 1e-11 * g1.log_m()[k].max(1.0));
        }
        let g3 = WeightSequence::gevrey(1.0, 100).unwrap();
        assert!(matches!(g1.product(&g3), Err(Error::TruncationMismatch { .. })));
        assert!(g2.power(0.0).is_err());
    }

    #[test]
    fn rebuild_at_new_truncation() {
        let g = WeightSequence::gevrey(2.0, 64).unwrap().power(1.5).unwrap();
        let big = g.with_truncation(256).unwrap();
        for k in 0..=64 {
            assert_eq!(g.log_m()[k], big.log_m()[k]);
        }
        let c = WeightSequence::custom(g.log_m().to_vec()).unwrap();
        assert!(c.with_truncation(128).is_err());
    }
}
