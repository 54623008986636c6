use super::WeightSequence;
use crate::error::{Error, Result};
use crate::numerics::trend::TREND_STEP;
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaValue {
    Finite(f64),
    Infinite,
}

impl GammaValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            GammaValue::Finite(g) => *g,
            GammaValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, GammaValue::Infinite)
    }

    fn from_f64(g: f64) -> Self {
        if g.is_infinite() {
            GammaValue::Infinite
        } else {
            GammaValue::Finite(g)
        }
    }
}

impl Serialize for GammaValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GammaValue::Finite(g) => s.serialize_f64(*g),
            GammaValue::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GammaEstimate {
    /// Symbolic value when the family has one, else the numeric estimate.
    pub value: GammaValue,
    pub numeric: GammaValue,
    pub symbolic: Option<GammaValue>,
    pub tol: f64,
    pub gamma_max: f64,
    pub bisection_steps: usize,
}

/// Drawdowns of `log mu_k - gamma ln k` at the four tail sub-window ends;
/// gamma is feasible unless they strictly increase.
fn feasible(log_mu: &[f64], ln_k: &[f64], gamma: f64) -> bool {
    let k = log_mu.len() - 1;
    let start = k - k / 4;
    let ends: Vec<usize> = (1..=4).map(|w| start + w * (k - start) / 4).collect();
    let mut run_max = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    let mut at_ends = Vec::with_capacity(4);
    let mut next = 0;
    for i in 1..=k {
        let f = log_mu[i] - gamma * ln_k[i];
        run_max = run_max.max(f);
        worst = worst.max(run_max - f);
        if next < 4 && i == ends[next] {
            at_ends.push(worst);
            next += 1;
        }
    }
    !at_ends.windows(2).all(|w| w[1] - w[0] > TREND_STEP)
}

/// Index `gamma(M)`: supremum of `gamma` with `mu_k / k^gamma` almost increasing.
pub fn gamma_index(m: &WeightSequence, gamma_max: f64, tol: f64) -> Result<GammaEstimate> {
    let k = m.truncation();
    if k < 256 {
        return Err(Error::invalid(format!("gamma_index needs K >= 256 (got {k})")));
    }
    if !(tol >= 1e-4) {
        return Err(Error::invalid(format!(
            "tolerance {tol} below the estimator resolution 1e-4 at K = {k}"
        )));
    }
    let ln_k: Vec<f64> = (0..=k).map(|i| (i as f64).ln()).collect();
    let mu = m.log_mu();
    let mut steps = 0;
    let numeric = if feasible(mu, &ln_k, gamma_max) {
        GammaValue::Infinite
    } else {
        let (mut lo, mut hi) = (0.0, gamma_max);
        while hi - lo > tol / 8.0 {
            let mid = 0.5 * (lo + hi);
            if feasible(mu, &ln_k, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
        GammaValue::Finite(0.5 * (lo + hi))
    };
    let symbolic = m.shape().gamma().map(GammaValue::from_f64);
    Ok(GammaEstimate {
        value: symbolic.unwrap_or(numeric),
        numeric,
        symbolic,
        tol,
        gamma_max,
        bisection_steps: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gevrey_numeric() {
        for s in [1.0, 1.5, 2.0, 3.0] {
            let g = WeightSequence::gevrey(s, 2048).unwrap();
            let e = gamma_index(&g, 64.0, 0.05).unwrap();
            assert!((e.numeric.as_f64() - s).abs() < 0.05, "s = {s}: {:?}", e.numeric);
        }
    }

    #[test]
    fn qpower_infinite() {
        let q = WeightSequence::qpower(2.0, 2.0, 2048).unwrap();
        assert!(gamma_index(&q, 64.0, 0.05).unwrap().numeric.is_infinite());
    }

    #[test]
    fn small_truncation_rejected() {
        let g = WeightSequence::gevrey(2.0, 100).unwrap();
        assert!(gamma_index(&g, 64.0, 0.05).is_err());
    }
}
