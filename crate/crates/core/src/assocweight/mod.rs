//! Associated weight `omega_M(t) = sup_k (k log t - log M_k)` and `h_M`.

mod lemma;

pub use lemma::{aux_equivalence, aux_shift_check, AuxEquivalence, GridMeta, ShiftReport};

use crate::error::{Error, Result};
use crate::weightseq::WeightSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Exact evaluator built on the breakpoints `log mu_k`.
#[derive(Debug, Clone)]
pub struct AssociatedWeight {
    seq: WeightSequence,
}

impl AssociatedWeight {
    pub fn new(seq: &WeightSequence) -> Self {
        AssociatedWeight { seq: seq.clone() }
    }

    pub fn sequence(&self) -> &WeightSequence {
        &self.seq
    }

    /// `log mu_K`: the largest `log t` with exact evaluation.
    pub fn domain_cap(&self) -> f64 {
        self.seq.log_mu()[self.seq.truncation()]
    }

    /// Number of breakpoints `log mu_k <= logt`, i.e. the maximizing index.
    pub fn argmax(&self, logt: f64) -> usize {
        self.seq.log_mu()[1..].partition_point(|&m| m <= logt)
    }

    fn required_k(&self, logt: f64) -> usize {
        let k = self.seq.truncation();
        let mu = self.seq.log_mu();
        let p = (k as f64 * (mu[k] - mu[k - 1])).max(1e-3);
        let est = k as f64 * ((logt - mu[k]) / p).exp();
        if est.is_finite() && est < 1e15 {
            (est.ceil() as usize).max(k + 1)
        } else {
            usize::MAX
        }
    }

    pub fn omega(&self, logt: f64) -> Result<f64> {
        let cap = self.domain_cap();
        if logt > cap {
            return Err(Error::TruncationExceeded {
                logt,
                cap,
                required_k: self.required_k(logt),
            });
        }
        let k = self.argmax(logt);
        if k == 0 {
            return Ok(0.0);
        }
        Ok(k as f64 * logt - self.seq.log_m()[k])
    }

    /// `log h_M(t) = -omega_M(1/t)`.
    pub fn h_weight(&self, logt: f64) -> Result<f64> {
        Ok(-self.omega(-logt)?)
    }

    /// `log M_k = sup_t (k log t - omega(t))`, maximized over the breakpoints.
    pub fn invert_weight(&self, k: usize) -> Result<f64> {
        let big_k = self.seq.truncation();
        if k > big_k - 1 {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: big_k - 1,
            });
        }
        if k == 0 {
            return Ok(0.0);
        }
        let mu = self.seq.log_mu();
        let mut best = f64::NEG_INFINITY;
        for &lt in &mu[1..=big_k] {
            best = best.max(k as f64 * lt - self.omega(lt)?);
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingReport {
    pub a: f64,
    pub samples: usize,
    pub max_abs_discrepancy: f64,
    /// `max |omega_{M^a}(t) - a omega_M(t^(1/a))| / max(1, |omega|)`.
    pub max_rel_discrepancy: f64,
    pub holds: bool,
    pub seed: u64,
}

/// Checks `omega_{M^a}(t) = a omega_M(t^(1/a))` on random `log t` in the common domain.
pub fn power_scaling_check(
    m: &WeightSequence,
    a: f64,
    samples: usize,
    seed: u64,
) -> Result<ScalingReport> {
    let ma = m.power(a)?;
    let wa = AssociatedWeight::new(&ma);
    let w = AssociatedWeight::new(m);
    let hi = wa.domain_cap().min(a * w.domain_cap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut abs_d, mut rel_d) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let lt = rng.gen_range(-1.0..hi);
        let lhs = wa.omega(lt)?;
        let rhs = a * w.omega(lt / a)?;
        let d = (lhs - rhs).abs();
        abs_d = abs_d.max(d);
        rel_d = rel_d.max(d / lhs.abs().max(1.0));
    }
    Ok(ScalingReport {
        a,
        samples,
        max_abs_discrepancy: abs_d,
        max_rel_discrepancy: rel_d,
        holds: rel_d <= 1e-10,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weightseq::ln_factorials;

    #[test]
    fn below_first_breakpoint_is_zero() {
        let w = AssociatedWeight::new(&WeightSequence::gevrey(2.0, 64).unwrap());
        assert_eq!(w.omega(-3.0).unwrap(), 0.0);
        assert_eq!(w.omega(0.0).unwrap(), 0.0);
    }

    #[test]
    fn g1_at_ten_matches_scan() {
        let w = AssociatedWeight::new(&WeightSequence::gevrey(1.0, 256).unwrap());
        let lf = ln_factorials(64);
        let lt = 10f64.ln();
        let brute = (0..=64).map(|k| k as f64 * lt - lf[k]).fold(f64::NEG_INFINITY, f64::max);
        assert!((w.omega(lt).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn cap_is_an_error() {
        let w = AssociatedWeight::new(&WeightSequence::gevrey(2.0, 64).unwrap());
        let cap = w.domain_cap();
        assert!(w.omega(cap).is_ok());
        match w.omega(cap + 1.0) {
            Err(Error::TruncationExceeded { required_k, .. }) => assert!(required_k > 64),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inversion_g2() {
        let m = WeightSequence::gevrey(2.0, 256).unwrap();
        let w = AssociatedWeight::new(&m);
        for k in 0..=50 {
            let r = w.invert_weight(k).unwrap();
            assert!((r - m.log_m()[k]).abs() <= 1e-9 * m.log_m()[k].abs().max(1.0));
        }
        assert!(w.invert_weight(256).is_err());
    }

    #[test]
    fn scaling_identity() {
        let m = WeightSequence::gevrey(2.0, 512).unwrap();
        let r = power_scaling_check(&m, 1.0, 200, 1).unwrap();
        assert_eq!(r.max_abs_discrepancy, 0.0);
        assert!(power_scaling_check(&m, 3.0, 1000, 2).unwrap().holds);
    }
}
