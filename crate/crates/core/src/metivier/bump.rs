use super::operator::exact_degree;
use crate::error::{Error, Result};
use crate::numerics::jet::factorial;
use crate::numerics::{fit_growth, slope_drift, Jet, Profile};
use crate::weightseq::{Shape, WeightSequence};
use serde::Serialize;

/// Derivative orders covered by the `(C0, h0)` fit.
pub const FIT_ORDER: usize = 20;
/// Largest slope drift accepted for the fit.
pub const FIT_DRIFT: f64 = 0.25;
/// Largest flatness exponent tried by [`BumpFunction::build`].
pub const MAX_EXPONENT: f64 = 64.0;
/// Grid points per side of the cube `[-2 delta, 2 delta]^n`.
pub const PATCH_SIDE: usize = 41;
/// Radii per ray and end of the annulus `delta < |z| < 2 delta`, geometrically
/// clustered at both boundary spheres where the high derivatives peak.
const RAY_POINTS: usize = 240;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BumpFit {
    pub order: usize,
    pub log_c0: f64,
    pub log_h0: f64,
    /// `log h` before enforcing the operator floor.
    pub log_h_fit: f64,
    /// `max_m (log S_m - log C0 - m log h0 - log L_m)`, zero at the binding order.
    pub max_residual: f64,
    pub drift: f64,
    pub grid_points: usize,
    /// `log max_{|nu| = m} sup |d^nu psi|` for `m <= order`.
    pub log_sup: Vec<f64>,
}

/// `psi(z) = B(|z|^2)`, equal to 1 for `|z| <= delta` and 0 for `|z| >= 2 delta`,
/// with `B(r2) = S(r2 / delta^2)` and `S` the flat transition built on `exp(-s^-a)` over `[1, 4]`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BumpFunction {
    pub dimension: usize,
    pub delta: f64,
    pub a: f64,
    #[serde(skip)]
    profile: Profile,
    pub fit: Option<BumpFit>,
}

impl BumpFunction {
    pub fn new(dimension: usize, delta: f64, a: f64) -> Result<Self> {
        if !(delta > 0.0 && a > 0.0) || dimension == 0 {
            return Err(Error::invalid(format!("bump needs delta > 0 and a > 0, got {delta}, {a}")));
        }
        Ok(BumpFunction {
            dimension,
            delta,
            a,
            profile: Profile::smooth_step(1.0, 4.0, a),
            fit: None,
        })
    }

    /// Flatness exponent matched to `L`: Gevrey order `1 + 1/a` equals `s` when
    /// `L = G^s` with `s < 2`, and `a = 1` otherwise.
    pub fn default_exponent(l: &WeightSequence) -> f64 {
        match l.shape() {
            Shape::GevreyLog { s, .. } if s > 1.0 && s < 2.0 => 1.0 / (s - 1.0),
            _ => 1.0,
        }
    }

    /// Builds the bump and fits `|D^nu psi| <= C0 h0^|nu| L_|nu|` for `|nu| <= 20`
    /// with `h0 >= min_h0`. Without an explicit `a` the default exponent is doubled
    /// up to 64 until the fit is accepted.
    pub fn build(l: &WeightSequence, dimension: usize, delta: f64, a: Option<f64>, min_h0: f64) -> Result<Self> {
        if let Some(a) = a {
            return BumpFunction::build_with(l, dimension, delta, a, min_h0);
        }
        let mut a = BumpFunction::default_exponent(l);
        loop {
            match BumpFunction::build_with(l, dimension, delta, a, min_h0) {
                Err(Error::FitFailed(_)) if a < MAX_EXPONENT => a *= 2.0,
                r => return r,
            }
        }
    }

    fn build_with(l: &WeightSequence, dimension: usize, delta: f64, a: f64, min_h0: f64) -> Result<Self> {
        let mut b = BumpFunction::new(dimension, delta, a)?;
        if l.truncation() < FIT_ORDER {
            return Err(Error::invalid("L is shorter than the bump fit order"));
        }
        let points = b.fit_grid();
        let mut sup = vec![0.0f64; FIT_ORDER + 1];
        for z in &points {
            let table = b.derivative_table(z, FIT_ORDER);
            for (m, s) in sup.iter_mut().enumerate() {
                for v in &table.by_order[m] {
                    *s = s.max(v.abs());
                }
            }
        }
        let log_sup: Vec<f64> = sup.iter().map(|s| s.ln()).collect();
        let log_l = &l.log_m()[..=FIT_ORDER];
        let fit = fit_growth(&log_sup, log_l)?;
        let drift = slope_drift(&log_sup, log_l)?;
        if drift > FIT_DRIFT {
            return Err(Error::FitFailed(format!(
                "derivatives outgrow L (slope drift {drift:.3}); use a larger flatness exponent or a larger L"
            )));
        }
        let log_h0 = fit.log_h.max(min_h0.ln());
        let log_c0 = (0..=FIT_ORDER)
            .map(|m| log_sup[m] - m as f64 * log_h0 - log_l[m])
            .fold(f64::NEG_INFINITY, f64::max);
        let max_residual = (0..=FIT_ORDER)
            .map(|m| log_sup[m] - log_c0 - m as f64 * log_h0 - log_l[m])
            .fold(f64::NEG_INFINITY, f64::max);
        b.fit = Some(BumpFit {
            order: FIT_ORDER,
            log_c0,
            log_h0,
            log_h_fit: fit.log_h,
            max_residual,
            drift,
            grid_points: points.len(),
            log_sup,
        });
        Ok(b)
    }

    pub fn fitted(&self) -> Result<&BumpFit> {
        self.fit.as_ref().ok_or_else(|| Error::precondition("bump constants have not been fitted"))
    }

    /// Cube patch plus rays along `e_1` and the diagonal.
    pub fn fit_grid(&self) -> Vec<Vec<f64>> {
        let mut pts = self.patch();
        let n = self.dimension;
        let diag = vec![1.0 / (n as f64).sqrt(); n];
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        // s = |z|^2 / delta^2 runs over (1, 4); u is the distance to the nearer end
        let ratio = (1.5e-7f64).powf(-1.0 / (RAY_POINTS - 1) as f64);
        let us: Vec<f64> = (0..RAY_POINTS).map(|i| 1e-7 * ratio.powi(i as i32)).collect();
        for dir in [e1, diag] {
            for &u in &us {
                for sq in [1.0 + u, 4.0 - u] {
                    let r = self.delta * sq.sqrt();
                    pts.push(dir.iter().map(|v| v * r).collect());
                }
            }
        }
        pts
    }

    /// `PATCH_SIDE^n` points on `[-2 delta, 2 delta]^n` (a coarser side for `n > 2`).
    pub fn patch(&self) -> Vec<Vec<f64>> {
        let n = self.dimension;
        let side = if n <= 2 { PATCH_SIDE } else { 11 };
        let coord = |i: usize| -2.0 * self.delta + 4.0 * self.delta * i as f64 / (side - 1) as f64;
        let total = side.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                (0..n)
                    .map(|_| {
                        let c = coord(idx % side);
                        idx /= side;
                        c
                    })
                    .collect()
            })
            .collect()
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        self.radial_value(r2)
    }

    pub fn radial_value(&self, r2: f64) -> f64 {
        let d2 = self.delta * self.delta;
        if r2 <= d2 {
            1.0
        } else if r2 >= 4.0 * d2 {
            0.0
        } else {
            self.profile.eval(r2 / d2)
        }
    }

    /// Taylor coefficients of `B` at `r2` up to `order`.
    pub fn radial_jet(&self, r2: f64, order: usize) -> Vec<f64> {
        let d2 = self.delta * self.delta;
        if r2 <= d2 || r2 >= 4.0 * d2 {
            let mut c = vec![0.0; order + 1];
            c[0] = self.radial_value(r2);
            return c;
        }
        let mut c = self.profile.eval_jet(&Jet::variable(r2 / d2, order)).c;
        let mut scale = 1.0;
        for v in c.iter_mut() {
            *v *= scale;
            scale /= d2;
        }
        c
    }

    /// `d^nu psi(z)` from the radial jet at `|z|^2` (Hermite-type product formula).
    pub fn partial_from_jet(nu: &[u32], z: &[f64], jet: &[f64]) -> f64 {
        let total: u32 = nu.iter().sum();
        let mut acc = 0.0;
        let mut m = vec![0u32; nu.len()];
        loop {
            let used: u32 = m.iter().sum();
            let j = (total - used) as usize;
            let bj = jet[j] * factorial(j);
            if bj != 0.0 {
                let mut prod = bj;
                for (i, (&n_i, &m_i)) in nu.iter().zip(&m).enumerate() {
                    let p = n_i - 2 * m_i;
                    prod *= factorial(n_i as usize) / (factorial(m_i as usize) * factorial(p as usize))
                        * (2.0 * z[i]).powi(p as i32);
                }
                acc += prod;
            }
            // next m with 2 m_i <= n_i
            let mut i = 0;
            loop {
                if i == m.len() {
                    return acc;
                }
                if 2 * (m[i] + 1) <= nu[i] {
                    m[i] += 1;
                    break;
                }
                m[i] = 0;
                i += 1;
            }
        }
    }

    pub fn partial(&self, nu: &[u32], z: &[f64]) -> f64 {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let jet = self.radial_jet(r2, nu.iter().sum::<u32>() as usize);
        BumpFunction::partial_from_jet(nu, z, &jet)
    }

    /// All `d^nu psi(z)` with `|nu| <= max_order`, grouped by `|nu|` in graded order.
    pub fn derivative_table(&self, z: &[f64], max_order: usize) -> DerivativeTable {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let jet = self.radial_jet(r2, max_order);
        let n = self.dimension;
        let by_order = (0..=max_order)
            .map(|m| {
                let mut idx = Vec::new();
                exact_degree(n, m as u32, &mut vec![0; n], 0, &mut idx);
                idx.iter().map(|nu| BumpFunction::partial_from_jet(nu, z, &jet)).collect()
            })
            .collect();
        DerivativeTable { by_order }
    }
}

pub struct DerivativeTable {
    /// `by_order[m]` lists `d^nu psi` for `|nu| = m` in `exact_degree` order.
    pub by_order: Vec<Vec<f64>>,
}
