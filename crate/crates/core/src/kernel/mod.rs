//! The flat kernel `Phi_N(t) = exp(-omega_N(t))` and its moments.

use crate::assocweight::AssociatedWeight;
use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_cells, QuadOptions};
use crate::numerics::{integrate_piecewise_power, integrate_range, tail_trend, GrowthFit, LogValue, PowerMoment, Trend};
use crate::weightseq::{derivation_closed, gamma_index, GammaValue, Verdict, WeightSequence};
use num_complex::Complex64;
use serde::Serialize;

/// Cells required beyond the integrand mode before a moment is trusted.
pub const MODE_MARGIN: usize = 16;
/// Largest admissible `log(tail / total)` for a reported moment.
pub const LOG_TAIL_TOLERANCE: f64 = -23.025850929940457; // ln 1e-10

/// Constants in `A1 h_N(B1/t) <= Phi(t) <= A2 h_N(B2/t)`; all equal 1 since `Phi = h_N(1/t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FlatnessConstants {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

#[derive(Debug, Clone)]
pub struct FlatKernel {
    n: WeightSequence,
    weight: AssociatedWeight,
    pub constants: FlatnessConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Moment {
    pub k: usize,
    pub log_i: f64,
    pub log_n: f64,
    pub log_tail: f64,
}

impl Moment {
    pub fn normalized(&self) -> f64 {
        self.log_i - self.log_n
    }
}

impl FlatKernel {
    pub fn new(n: &WeightSequence) -> Self {
        FlatKernel {
            n: n.clone(),
            weight: AssociatedWeight::new(n),
            constants: FlatnessConstants {
                a1: 1.0,
                b1: 1.0,
                a2: 1.0,
                b2: 1.0,
            },
        }
    }

    pub fn sequence(&self) -> &WeightSequence {
        &self.n
    }

    pub fn weight(&self) -> &AssociatedWeight {
        &self.weight
    }

    /// `Phi(t)` as a log value.
    pub fn kernel_value(&self, logt: f64) -> Result<LogValue> {
        Ok(LogValue::from_log(-self.weight.omega(logt)?))
    }

    /// Largest `k` with a certified moment.
    pub fn max_moment_order(&self) -> usize {
        self.n.truncation().saturating_sub(MODE_MARGIN)
    }

    /// `int_lower^inf t^k Phi(t) dt`.
    pub fn moment(&self, k: usize, lower: f64) -> Result<Moment> {
        if k > self.max_moment_order() {
            return Err(Error::TailDivergent {
                k: k as f64,
                truncation: self.n.truncation(),
            });
        }
        let m = self.raw_moment(k as f64, lower)?;
        Ok(Moment {
            k,
            log_i: m.log_value,
            log_n: self.n.log_m()[k],
            log_tail: m.log_tail,
        })
    }

    /// Moment for a real power, with the same tail certificate.
    pub fn raw_moment(&self, k: f64, lower: f64) -> Result<PowerMoment> {
        let m = integrate_piecewise_power(&self.n, k, lower)?;
        if m.log_tail_fraction() > LOG_TAIL_TOLERANCE {
            return Err(Error::TailDivergent {
                k,
                truncation: self.n.truncation(),
            });
        }
        Ok(m)
    }

    pub fn moments(&self, kmax: usize, lower: f64) -> Result<Vec<Moment>> {
        (0..=kmax).map(|k| self.moment(k, lower)).collect()
    }

    /// `int_lower^inf t^k Phi(t) dt / e^log_scale` by adaptive Gauss-Kronrod
    /// quadrature of the kernel values, cut where the closed form puts less
    /// than `e^-40` of the mass beyond.
    pub fn moment_by_quadrature(&self, k: f64, lower: f64, log_scale: f64) -> Result<f64> {
        let n = &self.n;
        let lmu = n.log_mu();
        let big_k = n.truncation();
        let total = integrate_range(n, k, lower, f64::INFINITY)?.log_value;
        let cut = (1..=big_k)
            .map(|j| lmu[j].exp())
            .find(|&m| {
                m > lower
                    && integrate_range(n, k, m, f64::INFINITY)
                        .map(|r| r.log_value - total < -40.0)
                        .unwrap_or(false)
            })
            .ok_or(Error::TailDivergent { k, truncation: big_k })?;
        let mut breaks = vec![lower];
        breaks.extend((1..=big_k).map(|j| lmu[j].exp()).filter(|&m| m > lower && m < cut));
        breaks.push(cut);
        let weight = &self.weight;
        let r = integrate_cells(
            |t, out: &mut [Complex64]| {
                let v = if t == 0.0 {
                    if k == 0.0 {
                        (-log_scale).exp()
                    } else {
                        0.0
                    }
                } else {
                    let lt = t.ln();
                    (k * lt - weight.omega(lt).unwrap_or(f64::INFINITY) - log_scale).exp()
                };
                out[0] = Complex64::new(v, 0.0);
            },
            1,
            &breaks,
            f64::INFINITY,
            &QuadOptions {
                rel_tol: 1e-13,
                ..QuadOptions::default()
            },
        );
        Ok(r.values[0].re)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SandwichReport {
    pub kmax: usize,
    /// `log_c = log_h = log Q1`: largest with `(k+1) log Q1 + log N_k <= log I_k`.
    pub q1: GrowthFit,
    /// `log_c = log_h = log Q2`: smallest with `log I_k <= (k+1) log Q2 + log N_k`.
    pub q2: GrowthFit,
    /// Trend of `(log I_k - log N_k)/(k+1)`; increasing means no finite `Q2`.
    pub upper_trend: Trend,
    pub lower_finite: bool,
    pub upper_finite: bool,
    /// Largest `(k+1) log Q1 + log N_k - log I_k`, zero at the binding index.
    pub lower_residual: f64,
    /// Largest `log I_k - (k+1) log Q2 - log N_k`.
    pub upper_residual: f64,
    pub derivation_closed: Verdict,
    pub gamma: Option<GammaValue>,
    pub holds: bool,
}

/// Fits `Q1^{k+1} N_k <= int_0^inf t^k Phi(t) dt <= Q2^{k+1} N_k` for `k <= kmax`.
pub fn verify_moment_sandwich(kernel: &FlatKernel, kmax: usize) -> Result<SandwichReport> {
    if !(3..=40).contains(&kmax) {
        return Err(Error::invalid(format!("kmax must lie in 3..=40, got {kmax}")));
    }
    let moments = kernel.moments(kmax, 0.0)?;
    let ratio: Vec<f64> = moments.iter().map(|m| m.normalized() / (m.k + 1) as f64).collect();
    let log_q1 = ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    let log_q2 = ratio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let resid = |log_q: f64, sign: f64| {
        moments
            .iter()
            .map(|m| sign * ((m.k + 1) as f64 * log_q - m.normalized()))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let lower_residual = resid(log_q1, 1.0);
    let upper_residual = resid(log_q2, -1.0);
    let fit = |log_q: f64, r: f64| GrowthFit {
        log_c: log_q,
        log_h: log_q,
        max_residual: r,
        k_range: (0, kmax),
    };
    let upper_trend = tail_trend(&ratio).trend;
    let lower_finite = log_q1.is_finite();
    let upper_finite = log_q2.is_finite() && upper_trend != Trend::Increasing;
    let n = kernel.sequence();
    let gamma = if n.truncation() >= 256 {
        gamma_index(n, 64.0, 1e-3).ok().map(|g| g.value)
    } else {
        None
    };
    Ok(SandwichReport {
        kmax,
        q1: fit(log_q1, lower_residual),
        q2: fit(log_q2, upper_residual),
        upper_trend,
        lower_finite,
        upper_finite,
        lower_residual,
        upper_residual,
        derivation_closed: derivation_closed(n).verdict,
        gamma,
        holds: lower_finite && upper_finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_one_near_zero() {
        let k = FlatKernel::new(&WeightSequence::gevrey(2.0, 128).unwrap());
        assert_eq!(k.kernel_value(-2.0).unwrap(), LogValue::ONE);
        let a = k.kernel_value(3.0).unwrap().log_abs();
        let b = k.kernel_value(4.0).unwrap().log_abs();
        assert!(b <= a && a < 0.0);
    }

    #[test]
    fn g3_kernel_at_thousand() {
        let n = WeightSequence::gevrey(3.0, 256).unwrap();
        let k = FlatKernel::new(&n);
        let lt = 1000f64.ln();
        let brute = (0..=256).map(|j| n.log_m()[j] - j as f64 * lt).fold(f64::INFINITY, f64::min);
        assert!((k.kernel_value(lt).unwrap().log_abs() - brute).abs() < 1e-12);
    }

    #[test]
    fn g2_sandwich() {
        let k = FlatKernel::new(&WeightSequence::gevrey(2.0, 2048).unwrap());
        let r = verify_moment_sandwich(&k, 30).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.lower_residual <= 0.0 && r.upper_residual <= 0.0);
        assert!(r.derivation_closed.holds());
    }

    #[test]
    fn qpower_upper_diverges() {
        let k = FlatKernel::new(&WeightSequence::qpower(2.0, 3.0, 256).unwrap());
        let r = verify_moment_sandwich(&k, 30).unwrap();
        assert!(r.lower_finite);
        assert_eq!(r.upper_trend, Trend::Increasing);
        assert!(!r.holds);
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        let k = FlatKernel::new(&WeightSequence::gevrey(3.0, 512).unwrap());
        for (p, lower) in [(0.0, 0.0), (7.0, 1.0), (30.0, 0.0), (4.5, 2.5)] {
            let exact = k.raw_moment(p, lower).unwrap().log_value;
            let q = k.moment_by_quadrature(p, lower, exact).unwrap();
            assert!((q - 1.0).abs() < 1e-10, "{p} {lower} {q}");
        }
    }

    #[test]
    fn moment_needs_margin() {
        let k = FlatKernel::new(&WeightSequence::gevrey(2.0, 40).unwrap());
        assert!(k.moment(10, 0.0).is_ok());
        assert!(k.moment(25, 0.0).is_err());
    }
}
