use super::logvalue::{ln_expm1_ratio, LogSumAcc};
use crate::error::{Error, Result};
use crate::weightseq::{Family, WeightSequence};
use serde::Serialize;

/// Cells whose bound falls this far below the reference term cannot change a double.
const SKIP_GAP: f64 = 750.0;

/// `log` of `int_lower^inf t^k e^{-omega_N(t)} dt` split into the exact part up to
/// `mu_K` and the tail bound beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PowerMoment {
    pub log_value: f64,
    pub log_partial: f64,
    /// Upper bound for the part beyond `mu_K`, using `omega_N(t) >= K log t - log N_K`.
    pub log_tail: f64,
}

impl PowerMoment {
    /// `log(tail / value)`.
    pub fn log_tail_fraction(&self) -> f64 {
        self.log_tail - self.log_value
    }
}

/// `log int_a^b t^(p-1) dt`, `0 <= a < b`.
fn log_power_cell(p: f64, log_a: f64, log_b: f64) -> f64 {
    if log_a == f64::NEG_INFINITY {
        return p * log_b - p.ln();
    }
    let l = log_b - log_a;
    p * log_a + l.ln() + ln_expm1_ratio(p * l)
}

/// Exact integral of `t^k Phi_N(t)` over `[lower, inf)`.
///
/// On `[mu_j, mu_{j+1})` the kernel is `N_j t^-j`, so every cell is a pure power
/// integrated in closed form. Cells are clipped at `lower` and summed in
/// ascending order.
pub fn integrate_piecewise_power(n: &WeightSequence, k: f64, lower: f64) -> Result<PowerMoment> {
    integrate_range(n, k, lower, f64::INFINITY)
}

/// As `integrate_piecewise_power` over `[lower, upper]`; the tail is zero when
/// `upper <= mu_K`.
pub fn integrate_range(n: &WeightSequence, k: f64, lower: f64, upper: f64) -> Result<PowerMoment> {
    let big_k = n.truncation();
    if !(lower >= 0.0) || !(upper > lower) || !k.is_finite() {
        return Err(Error::invalid(format!("bad moment arguments k = {k}, lower = {lower}")));
    }
    if lower == 0.0 && k <= -1.0 {
        return Err(Error::invalid("moment diverges at 0 for k <= -1"));
    }
    let (lm, lmu) = (n.log_m(), n.log_mu());
    let (log_lower, log_upper) = (lower.ln(), upper.ln());
    let open = log_upper > lmu[big_k];
    if open && big_k as f64 <= k + 1.0 {
        return Err(Error::TailDivergent { k, truncation: big_k });
    }
    // cell j spans [mu_j, mu_{j+1}) with mu_0 = 0
    let bounds = |j: usize| -> Option<(f64, f64)> {
        let a = lmu[j].max(log_lower);
        let b = lmu[j + 1].min(log_upper);
        (a < b).then_some((a, b))
    };
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    let mut upper = vec![f64::NEG_INFINITY; big_k];
    for j in 0..big_k {
        if let Some((a, b)) = bounds(j) {
            let p = k - j as f64 + 1.0;
            let u = if a == f64::NEG_INFINITY {
                p * b - p.ln()
            } else {
                lm[j] + (p * a).max(p * b) + (b - a).ln()
            };
            upper[j] = u;
            if u > best.0 {
                best = (u, j);
            }
        }
    }
    let reference = match (best.1 < big_k).then(|| bounds(best.1)).flatten() {
        Some((a, b)) => lm[best.1] + log_power_cell(k - best.1 as f64 + 1.0, a, b),
        None => f64::NEG_INFINITY,
    };
    let mut acc = LogSumAcc::new();
    for j in 0..big_k {
        if upper[j] < reference - SKIP_GAP {
            continue;
        }
        if let Some((a, b)) = bounds(j) {
            acc.push(lm[j] + log_power_cell(k - j as f64 + 1.0, a, b));
        }
    }
    let log_partial = acc.value();
    let log_tail = if open {
        let a = lmu[big_k].max(log_lower);
        let q = big_k as f64 - k - 1.0;
        if log_upper.is_finite() {
            lm[big_k] - q * a + log_power_cell(-q, 0.0, log_upper - a)
        } else {
            lm[big_k] - q * a - q.ln()
        }
    } else {
        f64::NEG_INFINITY
    };
    let mut total = LogSumAcc::new();
    total.push(log_partial);
    total.push(log_tail);
    Ok(PowerMoment {
        log_value: total.value(),
        log_partial,
        log_tail,
    })
}

fn closed(v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::invalid("closed-form moments need a symbolic family"))
}

/// `int_lower^inf t^k Phi_N(t) dt` for large `k` without a table.
///
/// Cells near the mode `mu_k` are integrated exactly from the closed forms of
/// `N`. Left of the window the integrand increases, so that part is at most
/// `mu_lo^(k+1) Phi(mu_lo)`; right of it `Phi <= N_hi t^-hi`. The window doubles
/// until both bounds are negligible; they are reported as `log_tail`.
pub fn integrate_windowed(family: &Family, k: f64, lower: f64) -> Result<PowerMoment> {
    if !(k >= 0.0 && k.is_finite() && lower >= 0.0) {
        return Err(Error::invalid(format!("bad moment arguments k = {k}, lower = {lower}")));
    }
    let lm = |j: usize| closed(family.log_m_at(j));
    let lmu = |j: usize| closed(family.log_mu_at(j));
    let log_lower = lower.ln();
    // first cell that reaches past `lower`
    let mut centre = k.floor() as usize;
    if lmu(centre + 1)? <= log_lower {
        let mut hi = centre + 1;
        while lmu(hi)? <= log_lower {
            hi *= 2;
        }
        let (mut lo, mut h) = (hi / 2, hi);
        while h - lo > 1 {
            let mid = (lo + h) / 2;
            if lmu(mid)? <= log_lower {
                lo = mid;
            } else {
                h = mid;
            }
        }
        centre = lo;
    }
    let mut w = 32usize;
    loop {
        let j_lo = centre.saturating_sub(w);
        let j_hi = centre + w + 2;
        let mut acc = LogSumAcc::new();
        let mut b_prev = lmu(j_lo)?;
        for j in j_lo..j_hi {
            let b_next = lmu(j + 1)?;
            let (a, b) = (b_prev.max(log_lower), b_next);
            if a < b {
                acc.push(lm(j)? + log_power_cell(k - j as f64 + 1.0, a, b));
            }
            b_prev = b_next;
        }
        let log_partial = acc.value();
        let mut tail = LogSumAcc::new();
        if j_lo > 0 {
            let m = lmu(j_lo)?;
            if log_lower < m {
                tail.push(lm(j_lo)? + (k + 1.0 - j_lo as f64) * m);
            }
        }
        let a = lmu(j_hi)?.max(log_lower);
        let q = j_hi as f64 - k - 1.0;
        tail.push(lm(j_hi)? - q * a - q.ln());
        let log_tail = tail.value();
        if log_tail < log_partial - SKIP_GAP || w > 1 << 28 {
            let mut total = LogSumAcc::new();
            total.push(log_partial);
            total.push(log_tail);
            return Ok(PowerMoment {
                log_value: total.value(),
                log_partial,
                log_tail,
            });
        }
        w *= 2;
    }
}
