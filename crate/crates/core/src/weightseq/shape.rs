use super::predicates::Verdict;
use super::Family;
use serde::Serialize;
use std::cmp::Ordering;

/// Asymptotic normal form of a symbolic family.
///
/// `GevreyLog { s, sigma }` is exactly `log M_k = s ln k! + sigma k ln ln(e + k)`,
/// closed under products and positive powers. `QPower` keeps the dominant
/// `k^r ln q` term; `exact` is false when lower-order terms were absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "camelCase")]
pub enum Shape {
    GevreyLog { s: f64, sigma: f64 },
    QPower { log_q: f64, r: f64, exact: bool },
    Unknown,
}

impl Shape {
    pub fn of(f: &Family) -> Shape {
        match f {
            Family::Gevrey { s } => Shape::GevreyLog { s: *s, sigma: 0.0 },
            Family::Logpower { sigma } => Shape::GevreyLog {
                s: 1.0,
                sigma: *sigma,
            },
            Family::Qpower { q, r } => Shape::QPower {
                log_q: q.ln(),
                r: *r,
                exact: true,
            },
            Family::Power { tau, of } => match Shape::of(of) {
                Shape::GevreyLog { s, sigma } => Shape::GevreyLog {
                    s: tau * s,
                    sigma: tau * sigma,
                },
                Shape::QPower { log_q, r, exact } => Shape::QPower {
                    log_q: tau * log_q,
                    r,
                    exact,
                },
                Shape::Unknown => Shape::Unknown,
            },
            Family::Product { of } => match (Shape::of(&of.0), Shape::of(&of.1)) {
                (Shape::GevreyLog { s: a, sigma: b }, Shape::GevreyLog { s: c, sigma: d }) => {
                    Shape::GevreyLog {
                        s: a + c,
                        sigma: b + d,
                    }
                }
                (
                    Shape::QPower { log_q: a, r: ra, exact: ea },
                    Shape::QPower { log_q: b, r: rb, exact: eb },
                ) => match ra.partial_cmp(&rb) {
                    Some(Ordering::Equal) => Shape::QPower {
                        log_q: a + b,
                        r: ra,
                        exact: ea && eb,
                    },
                    Some(Ordering::Greater) => Shape::QPower {
                        log_q: a,
                        r: ra,
                        exact: false,
                    },
                    _ => Shape::QPower {
                        log_q: b,
                        r: rb,
                        exact: false,
                    },
                },
                (q @ Shape::QPower { .. }, Shape::GevreyLog { .. })
                | (Shape::GevreyLog { .. }, q @ Shape::QPower { .. }) => match q {
                    Shape::QPower { log_q, r, .. } => Shape::QPower {
                        log_q,
                        r,
                        exact: false,
                    },
                    _ => unreachable!(),
                },
                _ => Shape::Unknown,
            },
            Family::Custom => Shape::Unknown,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Shape::Unknown)
    }

    /// `gamma(M)`: `s` for `GevreyLog`, infinite for `QPower`.
    pub fn gamma(&self) -> Option<f64> {
        match self {
            Shape::GevreyLog { s, .. } => Some(*s),
            Shape::QPower { .. } => Some(f64::INFINITY),
            Shape::Unknown => None,
        }
    }

    /// `sum 1/mu_k < inf`; `mu_k ~ k^s (ln k)^sigma` up to constants.
    pub fn quasianalytic(&self) -> Option<Verdict> {
        match *self {
            Shape::GevreyLog { s, sigma } => Some(Verdict::from_bool(
                s < 1.0 || (s == 1.0 && sigma <= 1.0),
            )),
            Shape::QPower { .. } => Some(Verdict::Fails),
            Shape::Unknown => None,
        }
    }

    pub fn strongly_nonquasianalytic(&self) -> Option<Verdict> {
        match *self {
            Shape::GevreyLog { s, .. } => Some(Verdict::from_bool(s > 1.0)),
            Shape::QPower { .. } => Some(Verdict::Holds),
            Shape::Unknown => None,
        }
    }

    /// `(M_k / k!)^(1/k) -> inf`.
    pub fn analytic_inclusion(&self) -> Option<Verdict> {
        match *self {
            Shape::GevreyLog { s, sigma } => {
                Some(Verdict::from_bool(s > 1.0 || (s == 1.0 && sigma > 0.0)))
            }
            Shape::QPower { .. } => Some(Verdict::Holds),
            Shape::Unknown => None,
        }
    }

    /// `sup mu_k^(1/k) < inf`.
    pub fn derivation_closed(&self) -> Option<Verdict> {
        match *self {
            Shape::GevreyLog { .. } => Some(Verdict::Holds),
            Shape::QPower { r, .. } => Some(Verdict::from_bool(r <= 2.0)),
            Shape::Unknown => None,
        }
    }

    /// Asymptotic comparison of `(log M_k - log N_k) / k`:
    /// `Less` means it tends to `-inf`, `Equal` means the sequences coincide.
    /// `None` when lower-order terms decide.
    pub fn compare(&self, other: &Shape) -> Option<Ordering> {
        match (*self, *other) {
            (Shape::GevreyLog { s: a, sigma: b }, Shape::GevreyLog { s: c, sigma: d }) => {
                Some(a.partial_cmp(&c)?.then(b.partial_cmp(&d)?))
            }
            (Shape::GevreyLog { .. }, Shape::QPower { .. }) => Some(Ordering::Less),
            (Shape::QPower { .. }, Shape::GevreyLog { .. }) => Some(Ordering::Greater),
            (
                Shape::QPower { log_q: a, r: ra, exact: ea },
                Shape::QPower { log_q: b, r: rb, exact: eb },
            ) => {
                let o = ra.partial_cmp(&rb)?.then(a.partial_cmp(&b)?);
                if o == Ordering::Equal && !(ea && eb) {
                    None
                } else {
                    Some(o)
                }
            }
            _ => None,
        }
    }
}
