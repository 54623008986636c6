use crate::error::{Error, Result};
use serde::Serialize;

/// Envelope `data[k] <= log_c + k * log_h + reference[k]` over `k_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthFit {
    pub log_c: f64,
    pub log_h: f64,
    pub max_residual: f64,
    pub k_range: (usize, usize),
}

impl GrowthFit {
    pub fn bound(&self, k: usize, reference: f64) -> f64 {
        self.log_c + k as f64 * self.log_h + reference
    }
}

/// Two-parameter Chebyshev envelope of `data - reference`.
///
/// The max-residual problem has a whole family of zero-residual optima (any
/// supporting line of the upper hull), so the line tight at the last index is
/// chosen: its slope is the smallest secant slope into the last point, i.e. the
/// final edge of the upper convex hull. `log_c` is then the smallest intercept,
/// which makes the residual exactly zero at the binding index.
///
/// Entries with `data[k] = -inf` (exact zeros) are dominated by any line and skipped.
pub fn fit_growth(data: &[f64], reference: &[f64]) -> Result<GrowthFit> {
    if data.len() != reference.len() {
        return Err(Error::invalid("fit_growth: length mismatch"));
    }
    if data.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: data.len(),
        });
    }
    let pts: Vec<(usize, f64)> = data
        .iter()
        .zip(reference)
        .enumerate()
        .filter(|(_, (d, _))| d.is_finite())
        .map(|(k, (d, r))| (k, d - r))
        .collect();
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::invalid("fit_growth: non-finite reference"));
    }
    let range = (0, data.len() - 1);
    let Some(&(kl, dl)) = pts.last() else {
        return Ok(GrowthFit {
            log_c: f64::NEG_INFINITY,
            log_h: 0.0,
            max_residual: 0.0,
            k_range: range,
        });
    };
    let log_h = pts[..pts.len() - 1]
        .iter()
        .map(|&(k, d)| (dl - d) / (kl - k) as f64)
        .fold(f64::INFINITY, f64::min);
    let log_h = if log_h.is_finite() { log_h } else { 0.0 };
    let log_c = pts
        .iter()
        .map(|&(k, d)| d - k as f64 * log_h)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_residual = pts
        .iter()
        .map(|&(k, d)| d - k as f64 * log_h - log_c)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthFit {
        log_c,
        log_h,
        max_residual,
        k_range: range,
    })
}

/// `log_h` of `fit_growth` restricted to each prefix `0..=m` for `m` in `ends`.
pub fn prefix_slopes(data: &[f64], reference: &[f64], ends: &[usize]) -> Result<Vec<f64>> {
    ends.iter()
        .map(|&m| fit_growth(&data[..=m], &reference[..=m]).map(|f| f.log_h))
        .collect()
}

/// `log_h` of the full fit minus `log_h` of the fit on the first half.
///
/// Geometric growth against `reference` gives a drift near zero; growth faster
/// than any `h^k reference[k]` keeps raising the slope.
pub fn slope_drift(data: &[f64], reference: &[f64]) -> Result<f64> {
    let last = data.len().saturating_sub(1);
    let s = prefix_slopes(data, reference, &[last / 2, last])?;
    Ok(s[1] - s[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_fit() {
        let r: Vec<f64> = (0..10).map(|k| (k * k) as f64).collect();
        let f = fit_growth(&r, &r).unwrap();
        assert_eq!((f.log_c, f.log_h, f.max_residual), (0.0, 0.0, 0.0));
    }

    #[test]
    fn affine_fit() {
        let r: Vec<f64> = (0..12).map(|k| (k as f64).sqrt()).collect();
        let d: Vec<f64> = r.iter().enumerate().map(|(k, x)| x + 2.0 + 3.0 * k as f64).collect();
        let f = fit_growth(&d, &r).unwrap();
        assert!((f.log_c - 2.0).abs() < 1e-12);
        assert!((f.log_h - 3.0).abs() < 1e-12);
        assert!(f.max_residual <= 0.0);
    }

    #[test]
    fn too_few() {
        assert!(matches!(
            fit_growth(&[0.0; 3], &[0.0; 3]),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn zeros_are_skipped() {
        let d = [f64::NEG_INFINITY, 1.0, 2.0, 3.0, f64::NEG_INFINITY];
        let f = fit_growth(&d, &[0.0; 5]).unwrap();
        assert!(f.log_h.is_finite() && f.max_residual <= 0.0);
    }
}
