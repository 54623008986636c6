use super::AssociatedWeight;
use crate::error::{Error, Result};
use crate::numerics::{tail_trend, Trend};
use crate::weightseq::WeightSequence;
use serde::Serialize;

/// Number of sample points for the constant fits.
pub const GRID_POINTS: usize = 512;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GridMeta {
    pub points: usize,
    pub log_s_min: f64,
    pub log_s_max: f64,
    /// Uniform in `log s`, no randomness.
    pub spacing: &'static str,
}

impl GridMeta {
    fn new(hi: f64) -> Self {
        GridMeta {
            points: GRID_POINTS,
            log_s_min: 0.0,
            log_s_max: hi,
            spacing: "geometric",
        }
    }

    fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.points - 1;
        (0..=n).map(move |i| self.log_s_min + (self.log_s_max - self.log_s_min) * i as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuxEquivalence {
    pub tau: f64,
    /// `max(0, max_k (log U_k - tau log T_k))`.
    pub log_a: f64,
    pub direction1_trend: Trend,
    pub direction1_holds: bool,
    /// Sample maximum of `omega_T(s) - omega_U(s^tau) / tau` on the grid.
    pub c_sampled: f64,
    /// The same maximum over every breakpoint of both sides; the function is
    /// piecewise linear in `log s`, so this is the sup on the sampled range.
    pub c_breakpoints: f64,
    pub direction2_trend: Trend,
    pub direction2_holds: bool,
    /// `max_k (log U_k - tau (C + log T_k))` over indices whose dual point is in range.
    pub reconstruction_margin: f64,
    pub consistent: bool,
    pub holds: bool,
    pub grid: GridMeta,
}

fn check_pair(t: &WeightSequence, u: &WeightSequence) -> Result<()> {
    if t.truncation() != u.truncation() {
        return Err(Error::TruncationMismatch {
            left: t.truncation(),
            right: u.truncation(),
        });
    }
    Ok(())
}

/// Sup of `f` over the grid and over all breakpoints in `[0, hi]`.
fn sample_max(
    f: &dyn Fn(f64) -> Result<f64>,
    grid: &GridMeta,
    breaks: impl Iterator<Item = f64>,
) -> Result<(Vec<f64>, f64, f64)> {
    let samples: Vec<f64> = grid.nodes().map(f).collect::<Result<_>>()?;
    let sampled = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut exact = sampled;
    for b in breaks.filter(|&b| b >= grid.log_s_min && b <= grid.log_s_max) {
        exact = exact.max(f(b)?);
    }
    Ok((samples, sampled, exact))
}

/// Both directions of `U <= A T^tau  <=>  omega_T(s) <= omega_U(s^tau)/tau + C`.
pub fn aux_equivalence(t: &WeightSequence, u: &WeightSequence, tau: f64) -> Result<AuxEquivalence> {
    if !(tau > 1.0 && tau.is_finite()) {
        return Err(Error::precondition(format!("tau must exceed 1, got {tau}")));
    }
    check_pair(t, u)?;
    let (lt, lu) = (t.log_m(), u.log_m());
    let d: Vec<f64> = lt.iter().zip(lu).map(|(a, b)| b - tau * a).collect();
    let scale = |k: usize| lu[k].abs().max(1.0);
    let mut log_a = 0.0f64;
    for (k, &v) in d.iter().enumerate() {
        if v > TOL * scale(k) {
            log_a = log_a.max(v);
        }
    }
    let t1 = tail_trend(&d).trend;
    let direction1_holds = t1 != Trend::Increasing;

    let (wt, wu) = (AssociatedWeight::new(t), AssociatedWeight::new(u));
    let grid = GridMeta::new(wt.domain_cap().min(wu.domain_cap() / tau));
    let f = |ls: f64| -> Result<f64> { Ok(wt.omega(ls)? - wu.omega(tau * ls)? / tau) };
    let breaks = t.log_mu()[1..]
        .iter()
        .cloned()
        .chain(u.log_mu()[1..].iter().map(|&m| m / tau));
    let (samples, c_sampled, c_exact) = sample_max(&f, &grid, breaks)?;
    let t2 = tail_trend(&samples).trend;
    let direction2_holds = t2 != Trend::Increasing;

    let mut margin = f64::NEG_INFINITY;
    let mut consistent = !direction1_holds || c_exact <= log_a / tau + TOL * (log_a / tau).abs().max(1.0);
    for k in 0..u.truncation() {
        if u.log_mu()[k + 1] / tau > grid.log_s_max {
            break;
        }
        let excess = lu[k] - tau * (c_exact + lt[k]);
        margin = margin.max(excess);
        if excess > TOL * scale(k) {
            consistent = false;
        }
    }
    Ok(AuxEquivalence {
        tau,
        log_a,
        direction1_trend: t1,
        direction1_holds,
        c_sampled,
        c_breakpoints: c_exact,
        direction2_trend: t2,
        direction2_holds,
        reconstruction_margin: margin,
        consistent,
        holds: direction1_holds && direction2_holds && consistent,
        grid,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ShiftReport {
    pub tau: f64,
    pub a: f64,
    pub sigma: f64,
    pub c_sampled: f64,
    pub c_breakpoints: f64,
    pub trend: Trend,
    pub finite: bool,
    pub grid: GridMeta,
}

/// Fits `C` in `omega_T(s) <= omega_U(a s^sigma)/tau + C`.
pub fn aux_shift_check(
    t: &WeightSequence,
    u: &WeightSequence,
    tau: f64,
    a: f64,
    sigma: f64,
) -> Result<ShiftReport> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::precondition(format!("a must lie in (0,1), got {a}")));
    }
    if !(sigma > tau) {
        return Err(Error::precondition(format!("sigma must exceed tau, got {sigma} <= {tau}")));
    }
    let eq = aux_equivalence(t, u, tau)?;
    if !eq.holds {
        return Err(Error::precondition(format!(
            "equivalence fails for tau = {tau} (log A = {}, direction 1 {:?})",
            eq.log_a, eq.direction1_trend
        )));
    }
    let (wt, wu) = (AssociatedWeight::new(t), AssociatedWeight::new(u));
    let la = a.ln();
    let grid = GridMeta::new(wt.domain_cap().min((wu.domain_cap() - la) / sigma));
    let f = |ls: f64| -> Result<f64> { Ok(wt.omega(ls)? - wu.omega(la + sigma * ls)? / tau) };
    let breaks = t.log_mu()[1..]
        .iter()
        .cloned()
        .chain(u.log_mu()[1..].iter().map(|&m| (m - la) / sigma));
    let (samples, c_sampled, c_exact) = sample_max(&f, &grid, breaks)?;
    let trend = tail_trend(&samples).trend;
    Ok(ShiftReport {
        tau,
        a,
        sigma,
        c_sampled,
        c_breakpoints: c_exact,
        trend,
        finite: trend != Trend::Increasing && c_exact.is_finite(),
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: f64) -> WeightSequence {
        WeightSequence::gevrey(s, 2048).unwrap()
    }

    #[test]
    fn exact_power_pair() {
        let r = aux_equivalence(&g(2.0), &g(3.0), 1.5).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.log_a, 0.0);
        assert!(r.c_breakpoints.abs() < 1e-9);
    }

    #[test]
    fn too_large_u_fails() {
        let r = aux_equivalence(&g(2.0), &g(5.0), 1.5).unwrap();
        assert!(!r.direction1_holds);
        assert!(!r.holds);
    }

    #[test]
    fn tau_one_rejected() {
        assert!(aux_equivalence(&g(2.0), &g(2.0), 1.0).is_err());
    }

    #[test]
    fn shift_is_finite() {
        let r = aux_shift_check(&g(2.0), &g(3.0), 1.5, 0.5, 1.6).unwrap();
        assert!(r.finite, "{r:?}");
        assert!(r.c_breakpoints > 0.0);
        let near = aux_shift_check(&g(2.0), &g(3.0), 1.5, 0.99, 1.51).unwrap();
        assert!(near.c_breakpoints.is_finite());
        assert!(aux_shift_check(&g(2.0), &g(3.0), 1.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn shift_needs_equivalence() {
        assert!(aux_shift_check(&g(2.0), &g(3.0), 1.4, 0.5, 1.5).is_err());
    }
}
