//! Truncated multivariate Taylor polynomials with complex coefficients.

use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

/// Monomials of total degree `<= order` in `n` variables and their product table.
#[derive(Debug)]
pub struct MonomialIndex {
    pub n: usize,
    pub order: usize,
    exps: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    products: Vec<(usize, usize, usize)>,
}

impl MonomialIndex {
    pub fn new(n: usize, order: usize) -> Arc<Self> {
        let mut exps = Vec::new();
        for deg in 0..=order {
            let mut e = vec![0u32; n];
            push_degree(&mut exps, &mut e, 0, deg as u32);
        }
        let lookup: HashMap<Vec<u32>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = lookup.get(&s) {
                    products.push((i, j, k));
                }
            }
        }
        Arc::new(MonomialIndex {
            n,
            order,
            exps,
            lookup,
            products,
        })
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn index(&self, e: &[u32]) -> Option<usize> {
        self.lookup.get(e).copied()
    }

    pub fn exponent(&self, i: usize) -> &[u32] {
        &self.exps[i]
    }
}

fn push_degree(out: &mut Vec<Vec<u32>>, e: &mut Vec<u32>, i: usize, left: u32) {
    if i + 1 == e.len() {
        e[i] = left;
        out.push(e.clone());
        return;
    }
    for v in (0..=left).rev() {
        e[i] = v;
        push_degree(out, e, i + 1, left - v);
    }
    e[i] = 0;
}

/// `c[beta] = d^beta f(x0) / beta!`; coefficients above `valid` are meaningless.
#[derive(Debug, Clone)]
pub struct MJet {
    idx: Arc<MonomialIndex>,
    pub c: Vec<Complex64>,
    valid: usize,
}

impl MJet {
    pub fn constant(idx: &Arc<MonomialIndex>, v: Complex64) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); idx.len()];
        c[0] = v;
        MJet {
            idx: idx.clone(),
            c,
            valid: idx.order,
        }
    }

    /// The coordinate `x_i` expanded at `x0`.
    pub fn variable(idx: &Arc<MonomialIndex>, i: usize, x0: f64) -> Self {
        let mut j = MJet::constant(idx, Complex64::new(x0, 0.0));
        if idx.order > 0 {
            let mut e = vec![0u32; idx.n];
            e[i] = 1;
            j.c[idx.index(&e).expect("degree one")] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn valid_order(&self) -> usize {
        self.valid
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    pub fn add(&self, o: &MJet) -> MJet {
        MJet {
            idx: self.idx.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
            valid: self.valid.min(o.valid),
        }
    }

    pub fn scale(&self, s: Complex64) -> MJet {
        MJet {
            idx: self.idx.clone(),
            c: self.c.iter().map(|a| a * s).collect(),
            valid: self.valid,
        }
    }

    pub fn mul(&self, o: &MJet) -> MJet {
        let mut c = vec![Complex64::new(0.0, 0.0); self.c.len()];
        for &(i, j, k) in &self.idx.products {
            c[k] += self.c[i] * o.c[j];
        }
        MJet {
            idx: self.idx.clone(),
            c,
            valid: self.valid.min(o.valid),
        }
    }

    /// `d/dx_i`, losing one order of validity.
    pub fn partial(&self, i: usize) -> MJet {
        let mut c = vec![Complex64::new(0.0, 0.0); self.c.len()];
        for (k, e) in self.idx.exps.iter().enumerate() {
            let mut up = e.clone();
            up[i] += 1;
            if let Some(src) = self.idx.index(&up) {
                c[k] = self.c[src] * up[i] as f64;
            }
        }
        MJet {
            idx: self.idx.clone(),
            c,
            valid: self.valid.saturating_sub(1),
        }
    }

    /// `sum_j series[j] (self - self(x0))^j`, i.e. a univariate function with
    /// Taylor coefficients `series` at `self(x0)` composed with `self`.
    pub fn compose(&self, series: &[f64]) -> MJet {
        let mut h = self.clone();
        h.c[0] = Complex64::new(0.0, 0.0);
        let mut acc = MJet::constant(&self.idx, Complex64::new(0.0, 0.0));
        for &s in series.iter().rev() {
            acc = acc.mul(&h);
            acc.c[0] += s;
        }
        acc.valid = self.valid.min(series.len().saturating_sub(1));
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn index_counts() {
        assert_eq!(MonomialIndex::new(2, 3).len(), 10);
        assert_eq!(MonomialIndex::new(3, 2).len(), 10);
    }

    #[test]
    fn product_and_partials() {
        let idx = MonomialIndex::new(2, 4);
        let x = MJet::variable(&idx, 0, 0.5);
        let y = MJet::variable(&idx, 1, -1.5);
        // f = x^2 y, f_x = 2xy, f_xy = 2x
        let f = x.mul(&x).mul(&y);
        assert!((f.value() - re(0.25 * -1.5)).norm() < 1e-15);
        assert!((f.partial(0).value() - re(2.0 * 0.5 * -1.5)).norm() < 1e-15);
        assert!((f.partial(0).partial(1).value() - re(1.0)).norm() < 1e-15);
    }

    #[test]
    fn compose_exp() {
        let idx = MonomialIndex::new(2, 6);
        let x = MJet::variable(&idx, 0, 0.3);
        let y = MJet::variable(&idx, 1, 0.2);
        let s = x.add(&y);
        let v = 0.5f64;
        let series: Vec<f64> = (0..=6).map(|j| v.exp() / (1..=j).product::<usize>() as f64).collect();
        let e = s.compose(&series);
        // exp(x + y) at (0.3, 0.2): every partial equals e^0.5
        let d = e.partial(0).partial(0).partial(1);
        assert!((d.value() - re(v.exp())).norm() < 1e-13);
    }
}
