use serde::Serialize;
use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

/// A signed real stored as `sign * exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogValue {
    sign: i8,
    log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue {
        sign: 1,
        log_abs: 0.0,
    };

    /// Positive value with the given natural log; `-inf` gives zero.
    pub fn from_log(log_abs: f64) -> Self {
        if log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign: 1, log_abs }
        }
    }

    pub fn from_sign_log(sign: i8, log_abs: f64) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue {
                sign: sign.signum(),
                log_abs,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn abs(&self) -> Self {
        LogValue::from_log(if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_abs
        })
    }

    pub fn powf(&self, p: f64) -> Self {
        assert!(self.sign >= 0, "powf of a negative LogValue");
        if self.sign == 0 {
            if p > 0.0 {
                Self::ZERO
            } else {
                Self::ONE
            }
        } else {
            Self::from_log(p * self.log_abs)
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue {
            sign: -self.sign,
            log_abs: self.log_abs,
        }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.log_abs >= rhs.log_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = lo.log_abs - hi.log_abs;
        if hi.sign == lo.sign {
            LogValue::from_sign_log(hi.sign, hi.log_abs + d.exp().ln_1p())
        } else if d == 0.0 {
            LogValue::ZERO
        } else {
            LogValue::from_sign_log(hi.sign, hi.log_abs + (-d.exp()).ln_1p())
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::from_sign_log(self.sign * rhs.sign, self.log_abs + rhs.log_abs)
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let key = |v: &LogValue| -> (i8, f64) {
            match v.sign {
                1 => (2, v.log_abs),
                0 => (1, 0.0),
                _ => (0, -v.log_abs),
            }
        };
        let (a, b) = (key(self), key(other));
        match a.0.cmp(&b.0) {
            Ordering::Equal => a.1.partial_cmp(&b.1),
            o => Some(o),
        }
    }
}

/// `ln(exp(a) + exp(b))` with infinities handled.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sum exp(x_i)`, summing in the given order.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_infinite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Streaming log-sum-exp accumulator with running-max rescaling.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAcc {
    max: f64,
    sum: f64,
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumAcc {
    pub fn new() -> Self {
        LogSumAcc {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `ln((exp(x) - 1) / x)`, continuous at 0.
pub fn ln_expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        x / 2.0 + x * x / 24.0
    } else if x > 0.0 {
        x + (-(-x).exp_m1()).ln() - x.ln()
    } else {
        (-x.exp_m1()).ln() - (-x).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_same_sign() {
        let a = LogValue::from_f64(3.0);
        let b = LogValue::from_f64(4.0);
        assert!(((a + b).to_f64() - 7.0).abs() < 1e-14);
    }

    #[test]
    fn cancellation_gives_zero() {
        let a = LogValue::from_f64(2.5);
        assert!((a - a).is_zero());
    }

    #[test]
    fn mixed_sign() {
        let a = LogValue::from_f64(5.0) + LogValue::from_f64(-7.0);
        assert_eq!(a.sign(), -1);
        assert!((a.to_f64() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn ordering() {
        let v = [-3.0, -0.5, 0.0, 0.25, 9.0];
        for i in 0..v.len() {
            for j in 0..v.len() {
                let (a, b) = (LogValue::from_f64(v[i]), LogValue::from_f64(v[j]));
                assert_eq!(a.partial_cmp(&b), v[i].partial_cmp(&v[j]));
            }
        }
    }

    #[test]
    fn acc_matches_direct() {
        let xs = [1.0, -3.0, 700.0, 699.5, -1e4];
        let mut acc = LogSumAcc::new();
        xs.iter().for_each(|&x| acc.push(x));
        assert!((acc.value() - log_sum_exp(&xs)).abs() < 1e-12);
    }

    #[test]
    fn expm1_ratio_branches() {
        for &x in &[-50.0f64, -1.0, -1e-9, 0.0, 1e-9, 1.0, 50.0, 800.0] {
            let direct = if x == 0.0 {
                0.0
            } else if x < 700.0 {
                (x.exp_m1() / x).ln()
            } else {
                x - x.ln()
            };
            assert!((ln_expm1_ratio(x) - direct).abs() < 1e-12, "x={x}");
        }
    }
}
