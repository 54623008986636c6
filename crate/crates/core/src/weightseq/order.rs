use super::predicates::Verdict;
use super::WeightSequence;
use crate::error::{Error, Result};
use crate::numerics::fit::fit_growth;
use crate::numerics::trend::{tail_trend, Trend};
use serde::Serialize;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "relation", rename_all = "camelCase")]
pub enum Relation {
    /// `M_k <= A N_k` for all `k`.
    DominatedBy { log_a: f64 },
    /// `M_k <= C h^k N_k`.
    Preceq,
    /// `(M_k / N_k)^(1/k) -> 0`.
    Lhd,
    /// `M ⪯ N` and `N ⪯ M`.
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Witness {
    Constants { log_c: f64, log_h: f64 },
    ViolatingIndex { k: usize },
    None,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OrderVerdict {
    pub relation: Relation,
    pub holds: Verdict,
    pub witness: Witness,
    /// Tail slope of `(log M_k - log N_k) / k`.
    pub margin: f64,
    pub symbolic: bool,
}

fn preceq(m: &WeightSequence, n: &WeightSequence) -> Result<(Verdict, Witness, f64, bool)> {
    let (a, b) = (m.log_m(), n.log_m());
    let k = m.truncation();
    let ratio: Vec<f64> = (1..=k).map(|i| (a[i] - b[i]) / i as f64).collect();
    let trend = tail_trend(&ratio);
    let symbolic = m.shape().compare(&n.shape());
    let verdict = match symbolic {
        Some(o) => Verdict::from_bool(o != Ordering::Greater),
        None => Verdict::from_bool(trend.trend != Trend::Increasing),
    };
    let witness = if verdict.holds() {
        let f = fit_growth(a, b)?;
        Witness::Constants {
            log_c: f.log_c,
            log_h: f.log_h,
        }
    } else {
        // envelope fitted on the first half, first escape in the second half
        let half = k / 2;
        let f = fit_growth(&a[..=half], &b[..=half])?;
        let idx = (half + 1..=k)
            .find(|&i| a[i] - b[i] > f.log_c + i as f64 * f.log_h + 1e-9)
            .unwrap_or(k);
        Witness::ViolatingIndex { k: idx }
    };
    Ok((verdict, witness, trend.slope, symbolic.is_some()))
}

pub fn order_relation(
    m: &WeightSequence,
    n: &WeightSequence,
    relation: Relation,
) -> Result<OrderVerdict> {
    if m.truncation() != n.truncation() {
        return Err(Error::TruncationMismatch {
            left: m.truncation(),
            right: n.truncation(),
        });
    }
    let (a, b) = (m.log_m(), n.log_m());
    let k = m.truncation();
    let ratio: Vec<f64> = (1..=k).map(|i| (a[i] - b[i]) / i as f64).collect();
    let trend = tail_trend(&ratio);
    let (holds, witness, symbolic) = match relation {
        Relation::DominatedBy { log_a } => {
            let bad = (0..=k).find(|&i| a[i] > log_a + b[i]);
            match bad {
                Some(i) => (Verdict::Fails, Witness::ViolatingIndex { k: i }, false),
                None => (
                    Verdict::Holds,
                    Witness::Constants {
                        log_c: log_a,
                        log_h: 0.0,
                    },
                    false,
                ),
            }
        }
        Relation::Preceq => {
            let (v, w, _, s) = preceq(m, n)?;
            (v, w, s)
        }
        Relation::Approx => {
            let (v1, w1, _, s1) = preceq(m, n)?;
            let (v2, w2, _, s2) = preceq(n, m)?;
            let v = if v1.holds() && v2.holds() {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            let w = if !v1.holds() {
                w1
            } else if !v2.holds() {
                w2
            } else {
                w1
            };
            (v, w, s1 && s2)
        }
        Relation::Lhd => match m.shape().compare(&n.shape()) {
            Some(o) => (Verdict::from_bool(o == Ordering::Less), Witness::None, true),
            None => {
                let v = match trend.trend {
                    Trend::Decreasing => Verdict::Holds,
                    Trend::Increasing => Verdict::Fails,
                    Trend::Bounded if trend.slope.abs() < 1e-12 => Verdict::Fails,
                    Trend::Bounded => Verdict::Inconclusive,
                };
                (v, Witness::None, false)
            }
        },
    };
    Ok(OrderVerdict {
        relation,
        holds,
        witness,
        margin: trend.slope,
        symbolic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: f64) -> WeightSequence {
        WeightSequence::gevrey(s, 512).unwrap()
    }

    #[test]
    fn gevrey_orders() {
        assert!(order_relation(&g(2.0), &g(3.0), Relation::Lhd).unwrap().holds.holds());
        let same = order_relation(&g(2.0), &g(2.0), Relation::Approx).unwrap();
        assert!(same.holds.holds());
        assert_eq!(
            same.witness,
            Witness::Constants {
                log_c: 0.0,
                log_h: 0.0
            }
        );
        let v = order_relation(&g(3.0), &g(2.0), Relation::Preceq).unwrap();
        assert_eq!(v.holds, Verdict::Fails);
        assert!(matches!(v.witness, Witness::ViolatingIndex { .. }));
    }

    #[test]
    fn numeric_path_agrees() {
        let a = WeightSequence::custom(g(2.0).log_m().to_vec()).unwrap();
        let b = WeightSequence::custom(g(3.0).log_m().to_vec()).unwrap();
        assert!(order_relation(&a, &b, Relation::Lhd).unwrap().holds.holds());
        assert_eq!(
            order_relation(&b, &a, Relation::Preceq).unwrap().holds,
            Verdict::Fails
        );
        assert!(order_relation(&a, &b, Relation::Preceq).unwrap().holds.holds());
    }
}
