use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;

/// Real polynomial in `n` variables, keyed by exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub n: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Poly::monomial(n, c, vec![0; n])
    }

    pub fn monomial(n: usize, c: f64, e: Vec<u32>) -> Self {
        let mut p = Poly::zero(n);
        p.push(e, c);
        p
    }

    pub fn push(&mut self, e: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.entry(e.clone()).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, &c) in &o.terms {
            p.push(e.clone(), c);
        }
        p
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut p = Poly::zero(self.n);
        for (e, &c) in &self.terms {
            p.push(e.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut p = Poly::zero(self.n);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &o.terms {
                p.push(a.iter().zip(b).map(|(x, y)| x + y).collect(), ca * cb);
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.n);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                p.push(d, c * e[i] as f64);
            }
        }
        p
    }

    /// `q(y) = p(x0 + y)`.
    pub fn shift(&self, x0: &[f64]) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, &c) in &self.terms {
            let mut acc = Poly::constant(self.n, c);
            for (i, &k) in e.iter().enumerate() {
                let mut f = Poly::zero(self.n);
                for j in 0..=k {
                    let mut ej = vec![0; self.n];
                    ej[i] = j;
                    f.push(ej, binomial(k, j) * x0[i].powi((k - j) as i32));
                }
                acc = acc.mul(&f);
            }
            out = out.add(&acc);
        }
        out
    }

    /// `sup_{|y_i| <= r} |p(y)| <= sum |c| r^|e|`.
    pub fn abs_bound(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.abs() * r.powi(e.iter().sum::<u32>() as i32))
            .sum()
    }
}

pub fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Serialize)]
struct MonomialOut<'a> {
    c: f64,
    e: &'a [u32],
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (e, &c) in &self.terms {
            seq.serialize_element(&MonomialOut { c, e })?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_matches_eval() {
        let mut p = Poly::zero(2);
        p.push(vec![2, 1], 3.0);
        p.push(vec![0, 3], -1.0);
        p.push(vec![1, 0], 0.5);
        let x0 = [0.3, -1.2];
        let q = p.shift(&x0);
        let y = [0.7, 0.4];
        let x = [x0[0] + y[0], x0[1] + y[1]];
        assert!((q.eval(&y) - p.eval(&x)).abs() < 1e-13);
    }

    #[test]
    fn partial_of_monomial() {
        let p = Poly::monomial(2, 2.0, vec![3, 1]);
        let d = p.partial(0);
        assert_eq!(d.terms.get(&vec![2, 1]), Some(&6.0));
        assert!(p.partial(1).partial(1).is_zero());
    }
}
