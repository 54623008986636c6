use super::{ln_factorials, WeightSequence};
use crate::error::{Error, Result};
use crate::numerics::logvalue::log_add_exp;
use crate::numerics::trend::{tail_trend, TailTrend, Trend};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(&self) -> bool {
        *self == Verdict::Holds
    }
}

/// A classification result: the symbolic rule when the family has one,
/// otherwise the tail-window heuristic.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PredicateReport {
    pub verdict: Verdict,
    pub numeric_verdict: Verdict,
    pub symbolic: Option<Verdict>,
    pub trend: TailTrend,
}

fn combine(symbolic: Option<Verdict>, numeric: Verdict, trend: TailTrend) -> PredicateReport {
    PredicateReport {
        verdict: symbolic.unwrap_or(numeric),
        numeric_verdict: numeric,
        symbolic,
        trend,
    }
}

/// Local power exponent `p` with `mu_k ~ k^p` at the end of the table.
pub(crate) fn local_exponent(m: &WeightSequence) -> f64 {
    let k = m.truncation();
    let mu = m.log_mu();
    k as f64 * (mu[k] - mu[k - 1])
}

/// `log sum_{m > K} 1/mu_m` extrapolated from the power law at the table end;
/// `None` when the local exponent is at most 1.
pub(crate) fn log_tail_beyond(m: &WeightSequence) -> Option<f64> {
    let k = m.truncation() as f64;
    let p = local_exponent(m);
    if !(p > 1.0) {
        return None;
    }
    let lmu = m.log_mu()[m.truncation()];
    Some(-lmu + p * k.ln() + (1.0 - p) * (k + 0.5).ln() - (p - 1.0).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum QaVerdict {
    Quasianalytic,
    NonQuasianalytic,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuasianalyticityReport {
    pub partial_sum: f64,
    /// Sum of the remaining table terms plus the extrapolated tail; `None` if flagged divergent.
    pub tail_bound: Option<f64>,
    pub local_exponent: f64,
    pub verdict: QaVerdict,
    pub numeric_verdict: QaVerdict,
}

/// Partial sum `sum_{k=0}^{J} M_k / M_{k+1}` of the Denjoy-Carleman series.
pub fn quasianalyticity_sum(m: &WeightSequence, j: usize) -> Result<QuasianalyticityReport> {
    let k = m.truncation();
    if j > k - 1 {
        return Err(Error::IndexOutOfRange { index: j, max: k - 1 });
    }
    let mu = m.log_mu();
    let partial: f64 = (0..=j).map(|i| (-mu[i + 1]).exp()).sum();
    let rest: f64 = (j + 2..=k).map(|i| (-mu[i]).exp()).sum();
    let p = local_exponent(m);
    let tail = log_tail_beyond(m).filter(|_| p >= 1.05).map(|t| rest + t.exp());
    let numeric = if p < 1.05 {
        QaVerdict::Quasianalytic
    } else if p >= 1.5 {
        QaVerdict::NonQuasianalytic
    } else {
        QaVerdict::Inconclusive
    };
    let symbolic = m.shape().quasianalytic().map(|v| {
        if v.holds() {
            QaVerdict::Quasianalytic
        } else {
            QaVerdict::NonQuasianalytic
        }
    });
    Ok(QuasianalyticityReport {
        partial_sum: partial,
        tail_bound: tail,
        local_exponent: p,
        verdict: symbolic.unwrap_or(numeric),
        numeric_verdict: numeric,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StrongNqaReport {
    /// `max_j` of the tail-sum ratio; reported, not thresholded.
    pub ahat: Option<f64>,
    pub log_ahat: Option<f64>,
    pub jmax: usize,
    pub verdict: Verdict,
    pub numeric_verdict: Verdict,
    pub symbolic: Option<Verdict>,
    pub trend: Option<TailTrend>,
    pub diagnostic: Option<String>,
}

/// Ratio `sum_{k > j} M_{k-1}/M_k / ((j+1) M_j / M_{j+1})` for `j <= jmax`.
pub fn strong_nonquasianalyticity(m: &WeightSequence, jmax: usize) -> Result<StrongNqaReport> {
    let k = m.truncation();
    if jmax > k - 2 {
        return Err(Error::IndexOutOfRange {
            index: jmax,
            max: k - 2,
        });
    }
    let symbolic = m.shape().strongly_nonquasianalytic();
    let p = local_exponent(m);
    let tail = if p >= 1.05 { log_tail_beyond(m) } else { None };
    let Some(tail) = tail else {
        let numeric = if p < 1.05 {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        };
        return Ok(StrongNqaReport {
            ahat: None,
            log_ahat: None,
            jmax,
            verdict: symbolic.unwrap_or(numeric),
            numeric_verdict: numeric,
            symbolic,
            trend: None,
            diagnostic: Some(format!(
                "tail bound unavailable: local exponent {p:.4} of mu_k is too small"
            )),
        });
    };
    let mu = m.log_mu();
    // log S_j = log sum_{i=j+1}^{K} 1/mu_i + tail, built from the top
    let mut log_s = vec![f64::NEG_INFINITY; k + 1];
    let mut acc = tail;
    for i in (1..=k).rev() {
        acc = log_add_exp(acc, -mu[i]);
        log_s[i - 1] = acc;
    }
    let ratios: Vec<f64> = (0..=jmax)
        .map(|j| log_s[j] + mu[j + 1] - ((j + 1) as f64).ln())
        .collect();
    let log_ahat = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let trend = tail_trend(&ratios);
    let numeric = if p < 1.5 {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(trend.trend != Trend::Increasing)
    };
    Ok(StrongNqaReport {
        ahat: Some(log_ahat.exp()),
        log_ahat: Some(log_ahat),
        jmax,
        verdict: symbolic.unwrap_or(numeric),
        numeric_verdict: numeric,
        symbolic,
        trend: Some(trend),
        diagnostic: None,
    })
}

/// Condition `sup mu_k^(1/k) < inf`, via the trend of `log mu_k / k`.
pub fn derivation_closed(m: &WeightSequence) -> PredicateReport {
    let mu = m.log_mu();
    let v: Vec<f64> = (1..mu.len()).map(|k| mu[k] / k as f64).collect();
    let trend = tail_trend(&v);
    let numeric = Verdict::from_bool(trend.trend != Trend::Increasing);
    combine(m.shape().derivation_closed(), numeric, trend)
}

/// Condition `(M_k / k!)^(1/k) -> inf`, via the trend of `(log M_k - ln k!) / k`.
pub fn analytic_inclusion(m: &WeightSequence) -> PredicateReport {
    let lf = ln_factorials(m.truncation());
    let lm = m.log_m();
    let v: Vec<f64> = (1..lm.len()).map(|k| (lm[k] - lf[k]) / k as f64).collect();
    let trend = tail_trend(&v);
    let numeric = Verdict::from_bool(trend.trend == Trend::Increasing);
    combine(m.shape().analytic_inclusion(), numeric, trend)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g2_series_limit() {
        let g2 = WeightSequence::gevrey(2.0, 2048).unwrap();
        let r = quasianalyticity_sum(&g2, 2047).unwrap();
        let total = r.partial_sum + r.tail_bound.unwrap();
        assert!((total - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6, "{total}");
        assert_eq!(r.numeric_verdict, QaVerdict::NonQuasianalytic);
    }

    #[test]
    fn g1_diverges() {
        let g1 = WeightSequence::gevrey(1.0, 2048).unwrap();
        let r = quasianalyticity_sum(&g1, 2047).unwrap();
        assert_eq!(r.numeric_verdict, QaVerdict::Quasianalytic);
        assert!(r.tail_bound.is_none());
        let s = strong_nonquasianalyticity(&g1, 1024).unwrap();
        assert_eq!(s.numeric_verdict, Verdict::Fails);
    }

    #[test]
    fn g2_strong_numeric() {
        for s in [1.5, 2.0, 3.0] {
            let g = WeightSequence::gevrey(s, 2048).unwrap();
            let r = strong_nonquasianalyticity(&g, 1024).unwrap();
            assert_eq!(r.numeric_verdict, Verdict::Holds, "s = {s}");
            assert!(r.ahat.unwrap().is_finite());
        }
    }

    #[test]
    fn numeric_inclusion_and_closure() {
        let g2 = WeightSequence::gevrey(2.0, 2048).unwrap();
        assert_eq!(analytic_inclusion(&g2).numeric_verdict, Verdict::Holds);
        assert_eq!(derivation_closed(&g2).numeric_verdict, Verdict::Holds);
        let g1 = WeightSequence::gevrey(1.0, 2048).unwrap();
        assert_eq!(analytic_inclusion(&g1).numeric_verdict, Verdict::Fails);
        let l = WeightSequence::logpower(0.5, 2048).unwrap();
        assert_eq!(analytic_inclusion(&l).numeric_verdict, Verdict::Holds);
        let q = WeightSequence::qpower(2.0, 3.0, 2048).unwrap();
        assert_eq!(derivation_closed(&q).numeric_verdict, Verdict::Fails);
    }
}
