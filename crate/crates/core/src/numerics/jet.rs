//! Truncated univariate Taylor arithmetic and closed-form profiles built on it.

use crate::error::{Error, Result};
use serde::Serialize;

pub const MAX_ORDER: usize = 64;

/// Taylor coefficients `c[j] = f^(j)(x0) / j!` up to a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Jet { c }
    }

    pub fn variable(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order > 0 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn zero(order: usize) -> Self {
        Jet::constant(0.0, order)
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    /// `j`-th derivative: `j! * c[j]`.
    pub fn derivative(&self, j: usize) -> f64 {
        self.c[j] * factorial(j)
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = (0..=i).map(|m| self.c[m] * o.c[i - m]).sum();
        }
        Jet { c }
    }

    pub fn div(&self, b: &Jet) -> Jet {
        let n = self.c.len();
        let mut q = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (1..=i).map(|m| b.c[m] * q[i - m]).sum();
            q[i] = (self.c[i] - s) / b.c[0];
        }
        Jet { c: q }
    }

    pub fn recip(&self) -> Jet {
        Jet::constant(1.0, self.order()).div(self)
    }

    pub fn exp(&self) -> Jet {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for i in 1..n {
            let s: f64 = (1..=i).map(|m| m as f64 * self.c[m] * e[i - m]).sum();
            e[i] = s / i as f64;
        }
        Jet { c: e }
    }

    pub fn ln(&self) -> Jet {
        let a = &self.c;
        let n = a.len();
        let mut l = vec![0.0; n];
        l[0] = a[0].ln();
        for i in 1..n {
            let s: f64 = (1..i).map(|m| m as f64 * l[m] * a[i - m]).sum();
            l[i] = (a[i] - s / i as f64) / a[0];
        }
        Jet { c: l }
    }

    /// `self^alpha` for a positive leading coefficient.
    pub fn powf(&self, alpha: f64) -> Jet {
        let a = &self.c;
        let n = a.len();
        let mut p = vec![0.0; n];
        p[0] = a[0].powf(alpha);
        for i in 1..n {
            let s: f64 = (1..=i)
                .map(|m| (alpha * m as f64 - (i - m) as f64) * a[m] * p[i - m])
                .sum();
            p[i] = s / (i as f64 * a[0]);
        }
        Jet { c: p }
    }
}

pub fn factorial(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

/// Closed-form scalar profile of one variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Profile {
    Var,
    Const(f64),
    Add(Box<Profile>, Box<Profile>),
    Sub(Box<Profile>, Box<Profile>),
    Mul(Box<Profile>, Box<Profile>),
    Div(Box<Profile>, Box<Profile>),
    Exp(Box<Profile>),
    Ln(Box<Profile>),
    Powf(Box<Profile>, f64),
    /// `exp(-z^(-a))` for `z > 0`, identically zero for `z <= 0`.
    Flat(Box<Profile>, f64),
}

impl Profile {
    pub fn eval_jet(&self, var: &Jet) -> Jet {
        use Profile::*;
        match self {
            Var => var.clone(),
            Const(v) => Jet::constant(*v, var.order()),
            Add(a, b) => a.eval_jet(var).add(&b.eval_jet(var)),
            Sub(a, b) => a.eval_jet(var).sub(&b.eval_jet(var)),
            Mul(a, b) => a.eval_jet(var).mul(&b.eval_jet(var)),
            Div(a, b) => a.eval_jet(var).div(&b.eval_jet(var)),
            Exp(a) => a.eval_jet(var).exp(),
            Ln(a) => a.eval_jet(var).ln(),
            Powf(a, p) => a.eval_jet(var).powf(*p),
            Flat(a, p) => {
                let z = a.eval_jet(var);
                if z.value() <= 0.0 {
                    Jet::zero(var.order())
                } else {
                    z.powf(-p).scale(-1.0).exp()
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_jet(&Jet::variable(x, 0)).value()
    }

    /// Smooth transition `1` on `q <= lo`, `0` on `q >= hi`:
    /// `F(hi - q) / (F(hi - q) + F(q - lo))` with `F(z) = exp(-z^(-a))`.
    pub fn smooth_step(lo: f64, hi: f64, a: f64) -> Profile {
        use Profile::*;
        let up = Flat(Box::new(Sub(Box::new(Const(hi)), Box::new(Var))), a);
        let down = Flat(Box::new(Sub(Box::new(Var), Box::new(Const(lo)))), a);
        Div(
            Box::new(up.clone()),
            Box::new(Add(Box::new(up), Box::new(down))),
        )
    }
}

/// Scalar field on `R^n` given by a one-variable profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Field {
    /// `f(y) = profile(|y|^2)`.
    Radial(Profile),
    /// `f(y) = profile(axis . y)`.
    Ridge { profile: Profile, axis: Vec<f64> },
}

/// Directional Taylor coefficients of a field along a line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaylorJet {
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    pub order: usize,
    pub coefficients: Vec<f64>,
}

/// Taylor coefficients of `s -> field(center + s * direction)` at `s = 0`.
pub fn taylor_derivatives(
    field: &Field,
    center: &[f64],
    direction: &[f64],
    order: usize,
) -> Result<TaylorJet> {
    if order > MAX_ORDER {
        return Err(Error::invalid(format!("order {order} exceeds {MAX_ORDER}")));
    }
    if center.len() != direction.len() {
        return Err(Error::invalid("center and direction dimensions differ"));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let jet = match field {
        Field::Radial(p) => {
            let mut q = Jet::zero(order);
            q.c[0] = dot(center, center);
            if order >= 1 {
                q.c[1] = 2.0 * dot(center, direction);
            }
            if order >= 2 {
                q.c[2] = dot(direction, direction);
            }
            p.eval_jet(&q)
        }
        Field::Ridge { profile, axis } => {
            if axis.len() != center.len() {
                return Err(Error::invalid("ridge axis dimension mismatch"));
            }
            let mut z = Jet::zero(order);
            z.c[0] = dot(axis, center);
            if order >= 1 {
                z.c[1] = dot(axis, direction);
            }
            profile.eval_jet(&z)
        }
    };
    Ok(TaylorJet {
        center: center.to_vec(),
        direction: direction.to_vec(),
        order,
        coefficients: jet.c,
    })
}
