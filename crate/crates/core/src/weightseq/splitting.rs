use super::WeightSequence;
use crate::numerics::logvalue::log_add_exp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Both sides of `rho^j M_{k+l} R^l <= rho^{j+l} M_k + M_{j+k+l} R^{j+l}` in log form.
pub fn splitting_holds(
    m: &WeightSequence,
    j: usize,
    k: usize,
    l: usize,
    log_rho: f64,
    log_r: f64,
) -> (f64, f64) {
    let lm = m.log_m();
    let lhs = j as f64 * log_rho + lm[k + l] + l as f64 * log_r;
    let rhs = log_add_exp(
        (j + l) as f64 * log_rho + lm[k],
        lm[j + k + l] + (j + l) as f64 * log_r,
    );
    (lhs, rhs)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SplittingReport {
    pub samples: usize,
    pub violations: usize,
    /// `max (lhs - rhs) / max(1, |rhs|)`; at most `1e-12` when the inequality holds.
    pub max_relative_violation: f64,
    pub exhaustive_checked: usize,
    pub exhaustive_violations: usize,
    pub seed: u64,
}

const TOL: f64 = 1e-12;

fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / rhs.abs().max(1.0)
}

/// Random samples with `rho, R in [1, e^10]`, plus exhaustive `j, k, l <= 12`,
/// `rho, R in {1, 2, 10}`.
pub fn check_splitting_lemma(m: &WeightSequence, trials: usize, seed: u64) -> SplittingReport {
    let big_k = m.truncation();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let j = rng.gen_range(0..=big_k / 3);
        let k = rng.gen_range(0..=big_k / 3);
        let l = rng.gen_range(0..=big_k / 3);
        let lr = rng.gen_range(0.0..10.0);
        let lrr = rng.gen_range(0.0..10.0);
        let (lhs, rhs) = splitting_holds(m, j, k, l, lr, lrr);
        let e = excess(lhs, rhs);
        worst = worst.max(e);
        if e > TOL {
            violations += 1;
        }
    }
    let logs = [0.0, 2f64.ln(), 10f64.ln()];
    let small = 12.min(big_k / 3);
    let mut checked = 0;
    let mut ex_viol = 0;
    for j in 0..=small {
        for k in 0..=small {
            for l in 0..=small {
                for &a in &logs {
                    for &b in &logs {
                        let (lhs, rhs) = splitting_holds(m, j, k, l, a, b);
                        let e = excess(lhs, rhs);
                        worst = worst.max(e);
                        checked += 1;
                        if e > TOL {
                            ex_viol += 1;
                        }
                    }
                }
            }
        }
    }
    SplittingReport {
        samples: trials,
        violations,
        max_relative_violation: worst,
        exhaustive_checked: checked,
        exhaustive_violations: ex_viol,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_case_has_slack() {
        let m = WeightSequence::gevrey(2.0, 64).unwrap();
        for k in 0..20 {
            let (lhs, rhs) = splitting_holds(&m, 0, k, 0, 1.3, 0.7);
            assert!(rhs - lhs >= 2f64.ln() - 1e-12);
        }
    }

    #[test]
    fn qpower_unit_scales() {
        let m = WeightSequence::qpower(2.0, 2.0, 64).unwrap();
        let r = check_splitting_lemma(&m, 2000, 7);
        assert_eq!(r.violations + r.exhaustive_violations, 0);
    }
}
