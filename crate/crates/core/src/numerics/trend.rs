use serde::Serialize;

/// Minimal step between consecutive sub-window maxima that counts as movement.
pub const TREND_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Bounded,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TailTrend {
    pub trend: Trend,
    pub window_maxima: [f64; 4],
    /// Change of the sub-window maxima per index across the tail.
    pub slope: f64,
}

/// Classifies the tail of a sequence: last 25% of indices split into four
/// sub-windows; strictly monotone maxima with steps beyond `TREND_STEP`
/// count as a trend to plus or minus infinity.
pub fn tail_trend(values: &[f64]) -> TailTrend {
    let n = values.len();
    let start = n - (n / 4).max(4).min(n);
    let tail = &values[start..];
    let m = tail.len();
    let mut maxima = [f64::NEG_INFINITY; 4];
    let mut centers = [0.0; 4];
    for w in 0..4 {
        let lo = w * m / 4;
        let hi = ((w + 1) * m / 4).max(lo + 1).min(m);
        maxima[w] = tail[lo..hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        centers[w] = (start + (lo + hi - 1) / 2) as f64;
    }
    let up = maxima.windows(2).all(|p| p[1] - p[0] > TREND_STEP);
    let down = maxima.windows(2).all(|p| p[1] - p[0] < -TREND_STEP);
    let span = (centers[3] - centers[0]).max(1.0);
    TailTrend {
        trend: if up {
            Trend::Increasing
        } else if down {
            Trend::Decreasing
        } else {
            Trend::Bounded
        },
        window_maxima: maxima,
        slope: (maxima[3] - maxima[0]) / span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_growth_increases() {
        let v: Vec<f64> = (1..=2048).map(|k| (k as f64).ln()).collect();
        assert_eq!(tail_trend(&v).trend, Trend::Increasing);
    }

    #[test]
    fn constant_is_bounded() {
        let v = vec![3.0; 100];
        assert_eq!(tail_trend(&v).trend, Trend::Bounded);
    }

    #[test]
    fn decreasing_detected() {
        let v: Vec<f64> = (1..=400).map(|k| -(k as f64).sqrt()).collect();
        assert_eq!(tail_trend(&v).trend, Trend::Decreasing);
    }

    #[test]
    fn converging_sequence_is_bounded() {
        // increments shrink below the step long before the tail
        let v: Vec<f64> = (1..=4096).map(|k| 1.0 - 1.0 / (k as f64).powi(3)).collect();
        assert_eq!(tail_trend(&v).trend, Trend::Bounded);
    }
}
