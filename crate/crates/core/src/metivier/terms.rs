use super::bump::BumpFunction;
use super::operator::{exact_degree, multi_indices, DiffOperator};
use super::poly::Poly;
use crate::error::{Error, Result};
use crate::numerics::jet::factorial;
use crate::numerics::{MJet, MonomialIndex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

/// Largest number of terms a single expansion may hold.
pub const TERM_BUDGET: usize = 1_000_000;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `y^beta t^(t_pow + eps_pow * eps) (d^nu psi)(t^eps y)` with `y = x - x0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TermKey {
    pub nu: Vec<u32>,
    pub beta: Vec<u32>,
    pub t_pow: u32,
    pub eps_pow: u32,
}

/// A finite sum of [`TermKey`] monomials with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTermSum {
    pub dimension: usize,
    pub terms: BTreeMap<TermKey, Complex64>,
}

impl IterateTermSum {
    pub fn zero(dimension: usize) -> Self {
        IterateTermSum {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    /// `psi(t^eps y)`.
    pub fn bump(dimension: usize) -> Self {
        let mut s = IterateTermSum::zero(dimension);
        s.push(
            TermKey {
                nu: vec![0; dimension],
                beta: vec![0; dimension],
                t_pow: 0,
                eps_pow: 0,
            },
            Complex64::new(1.0, 0.0),
        );
        s
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, key: TermKey, c: Complex64) {
        if c == ZERO {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += c;
                if *v == ZERO {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, o: &IterateTermSum) -> IterateTermSum {
        let mut s = self.clone();
        for (k, &c) in &o.terms {
            s.push(k.clone(), c);
        }
        s
    }

    pub fn scale(&self, f: Complex64) -> IterateTermSum {
        let mut s = IterateTermSum::zero(self.dimension);
        for (k, &c) in &self.terms {
            s.push(k.clone(), c * f);
        }
        s
    }

    /// `d/dy_i`: the monomial factor and the chain rule through `psi(t^eps y)`.
    pub fn partial(&self, i: usize) -> IterateTermSum {
        let mut s = IterateTermSum::zero(self.dimension);
        for (k, &c) in &self.terms {
            if k.beta[i] > 0 {
                let mut key = k.clone();
                key.beta[i] -= 1;
                s.push(key, c * k.beta[i] as f64);
            }
            let mut key = k.clone();
            key.nu[i] += 1;
            key.eps_pow += 1;
            s.push(key, c);
        }
        s
    }

    /// `d^nu` of the sum.
    pub fn derivative(&self, nu: &[u32]) -> IterateTermSum {
        let mut s = self.clone();
        for (i, &m) in nu.iter().enumerate() {
            for _ in 0..m {
                s = s.partial(i);
            }
        }
        s
    }

    /// Multiplies by `t^j q(y)`.
    pub fn mul_poly(&self, q: &Poly, j: u32) -> IterateTermSum {
        let mut s = IterateTermSum::zero(self.dimension);
        for (k, &c) in &self.terms {
            for (e, &qc) in &q.terms {
                let mut key = k.clone();
                for (b, x) in key.beta.iter_mut().zip(e) {
                    *b += x;
                }
                key.t_pow += j;
                s.push(key, c * qc);
            }
        }
        s
    }

    pub fn max_nu(&self) -> u32 {
        self.terms.keys().map(|k| k.nu.iter().sum()).max().unwrap_or(0)
    }

    /// Evaluates at `y`, `t` given `d^nu psi(t^eps y)` through `psi_at`.
    pub fn eval_with(&self, y: &[f64], t: f64, eps: f64, psi_at: &mut PsiDerivatives) -> Complex64 {
        let lt = t.ln();
        let mut acc = ZERO;
        for (k, &c) in &self.terms {
            let d = psi_at.get(&k.nu);
            if d == 0.0 {
                continue;
            }
            let mono: f64 = k.beta.iter().zip(y).map(|(&b, &v)| v.powi(b as i32)).product();
            acc += c * (mono * d * ((k.t_pow as f64 + k.eps_pow as f64 * eps) * lt).exp());
        }
        acc
    }

    /// Sum of the absolute values of the individual terms at `(y, t)`.
    pub fn abs_sum_with(&self, y: &[f64], t: f64, eps: f64, psi_at: &mut PsiDerivatives) -> f64 {
        let lt = t.ln();
        self.terms
            .iter()
            .map(|(k, c)| {
                let mono: f64 = k.beta.iter().zip(y).map(|(&b, &v)| v.powi(b as i32)).product();
                c.norm() * (mono * psi_at.get(&k.nu)).abs() * ((k.t_pow as f64 + k.eps_pow as f64 * eps) * lt).exp()
            })
            .sum()
    }

    pub fn eval(&self, bump: &BumpFunction, y: &[f64], t: f64, eps: f64) -> Complex64 {
        let z: Vec<f64> = y.iter().map(|v| v * t.powf(eps)).collect();
        let mut psi = PsiDerivatives::new(bump, &z, self.max_nu() as usize);
        self.eval_with(y, t, eps, &mut psi)
    }

    /// Certified bound `sum |c| |y^beta| t^(..) C0 h0^|nu| L_|nu|` on the sum at `(y, t)`.
    pub fn log_envelope(&self, y: &[f64], lt: f64, eps: f64, log_c0: f64, log_h0: f64, log_l: &[f64]) -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for (k, c) in &self.terms {
            let m: u32 = k.nu.iter().sum();
            let mono: f64 = k.beta.iter().zip(y).map(|(&b, &v)| b as f64 * v.abs().ln()).sum();
            let v = c.norm().ln()
                + mono
                + (k.t_pow as f64 + k.eps_pow as f64 * eps) * lt
                + log_c0
                + m as f64 * log_h0
                + log_l[m as usize];
            acc = crate::numerics::logvalue::log_add_exp(acc, v);
        }
        acc
    }
}

/// Memoized `d^nu psi(z)` at one point.
pub struct PsiDerivatives {
    z: Vec<f64>,
    jet: Vec<f64>,
    zero: bool,
    cache: HashMap<Vec<u32>, f64>,
}

impl PsiDerivatives {
    pub fn new(bump: &BumpFunction, z: &[f64], order: usize) -> Self {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let jet = bump.radial_jet(r2, order);
        let zero = jet.iter().all(|&c| c == 0.0);
        PsiDerivatives {
            z: z.to_vec(),
            jet,
            zero,
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, nu: &[u32]) -> f64 {
        if self.zero {
            return 0.0;
        }
        if let Some(&v) = self.cache.get(nu) {
            return v;
        }
        let v = BumpFunction::partial_from_jet(nu, &self.z, &self.jet);
        self.cache.insert(nu.to_vec(), v);
        v
    }
}

/// One operator factor of the recursion: `(-i)^|alpha| / alpha! * d_xi^alpha p(x, t xi0)` in `y`.
#[derive(Debug, Clone)]
struct RecursionFactor {
    alpha: Vec<u32>,
    coef: Complex64,
    parts: Vec<(u32, Poly)>,
}

fn recursion_factors(op: &DiffOperator, x0: &[f64], xi0: &[f64]) -> Vec<RecursionFactor> {
    multi_indices(op.dimension, op.order)
        .into_iter()
        .filter_map(|alpha| {
            let parts: Vec<(u32, Poly)> = op
                .xi_derivative_along(&alpha, xi0)
                .into_iter()
                .map(|(j, q)| (j, q.shift(x0)))
                .filter(|(_, q)| !q.is_zero())
                .collect();
            if parts.is_empty() {
                return None;
            }
            let m: u32 = alpha.iter().sum();
            let fact: f64 = alpha.iter().map(|&a| factorial(a as usize)).product();
            let coef = Complex64::new(0.0, -1.0).powu(m) / fact;
            Some(RecursionFactor { alpha, coef, parts })
        })
        .collect()
}

/// `Q_k` for `k = 0..=k_max` under `Q_{k+1} = sum (1/alpha!) d_xi^alpha p(x, t xi0) D^alpha Q_k`.
#[derive(Debug, Clone)]
pub struct IterateExpansion {
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub sums: Vec<IterateTermSum>,
}

impl IterateExpansion {
    pub fn build(op: &DiffOperator, x0: &[f64], xi0: &[f64], k_max: usize) -> Result<Self> {
        IterateExpansion::build_with_budget(op, x0, xi0, k_max, TERM_BUDGET)
    }

    pub fn build_with_budget(op: &DiffOperator, x0: &[f64], xi0: &[f64], k_max: usize, budget: usize) -> Result<Self> {
        let n = op.dimension;
        if x0.len() != n || xi0.len() != n {
            return Err(Error::invalid("x0 and xi0 must match the operator dimension"));
        }
        let factors = recursion_factors(op, x0, xi0);
        let mut sums = vec![IterateTermSum::bump(n)];
        for _ in 0..k_max {
            let next = step(sums.last().expect("nonempty"), &factors, budget)?;
            sums.push(next);
        }
        Ok(IterateExpansion {
            x0: x0.to_vec(),
            xi0: xi0.to_vec(),
            sums,
        })
    }

    pub fn k_max(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn total_terms(&self) -> usize {
        self.sums.iter().map(|s| s.len()).sum()
    }
}

fn step(q: &IterateTermSum, factors: &[RecursionFactor], budget: usize) -> Result<IterateTermSum> {
    let mut derivs: HashMap<Vec<u32>, IterateTermSum> = HashMap::new();
    derivs.insert(vec![0; q.dimension], q.clone());
    let mut out = IterateTermSum::zero(q.dimension);
    for f in factors {
        let d = derivative_cached(&mut derivs, &f.alpha);
        for (j, poly) in &f.parts {
            let piece = d.mul_poly(poly, *j).scale(f.coef);
            out = out.add(&piece);
            if out.len() > budget {
                return Err(Error::BudgetExceeded {
                    terms: out.len(),
                    budget,
                });
            }
        }
    }
    Ok(out)
}

fn derivative_cached(cache: &mut HashMap<Vec<u32>, IterateTermSum>, alpha: &[u32]) -> IterateTermSum {
    if let Some(s) = cache.get(alpha) {
        return s.clone();
    }
    let i = alpha.iter().position(|&a| a > 0).expect("nonzero index");
    let mut parent = alpha.to_vec();
    parent[i] -= 1;
    let d = derivative_cached(cache, &parent).partial(i);
    cache.insert(alpha.to_vec(), d.clone());
    d
}

/// Closed form of the expansion for `P = D_j`:
/// `Q_k = sum_m C(k, m) (t xi0_j)^(k - m) (-i)^m t^(eps m) d_j^m psi(t^eps y)`.
pub fn directional_ladder(dimension: usize, j: usize, xi0_j: f64, k: usize) -> IterateTermSum {
    let mut s = IterateTermSum::zero(dimension);
    for m in 0..=k {
        let mut nu = vec![0; dimension];
        nu[j] = m as u32;
        let c = super::poly::binomial(k as u32, m as u32)
            * xi0_j.powi((k - m) as i32)
            * Complex64::new(0.0, -1.0).powu(m as u32);
        s.push(
            TermKey {
                nu,
                beta: vec![0; dimension],
                t_pow: (k - m) as u32,
                eps_pow: m as u32,
            },
            c,
        );
    }
    s
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConsistencyReport {
    pub k_max: usize,
    pub samples: usize,
    /// Largest `|symbolic - jet| / sum |terms|` over all samples and `k`.
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Checks `Q_k` against one numeric recursion step applied to `Q_{k-1}`, where
/// `Q_{k-1}` is expanded as a multivariate Taylor jet in `x` built from the jet of
/// `psi(t^eps y)` alone.
pub fn recursion_consistency(
    op: &DiffOperator,
    exp: &IterateExpansion,
    bump: &BumpFunction,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    const TOL: f64 = 1e-10;
    let n = op.dimension;
    let factors = recursion_factors(op, &exp.x0, &exp.xi0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..samples {
        let t = (rng.gen::<f64>() * 4.0f64.ln()).exp() * 1.5;
        let r = bump.delta * (1.0 + rng.gen::<f64>()) * t.powf(-eps);
        let dir = random_unit(&mut rng, n);
        let y: Vec<f64> = dir.iter().map(|v| v * r).collect();
        let z: Vec<f64> = y.iter().map(|v| v * t.powf(eps)).collect();
        for k in 1..=exp.k_max() {
            let prev = &exp.sums[k - 1];
            let order = prev.max_nu() as usize + op.order as usize;
            let idx = MonomialIndex::new(n, order);
            let jet = term_sum_jet(prev, &idx, bump, &y, t, eps, order);
            let mut acc = MJet::constant(&idx, ZERO);
            for f in &factors {
                let mut d = jet.clone();
                for (i, &a) in f.alpha.iter().enumerate() {
                    for _ in 0..a {
                        d = d.partial(i);
                    }
                }
                for (j, poly) in &f.parts {
                    let c = poly_jet(poly, &idx, &y).scale(f.coef * t.powi(*j as i32));
                    acc = acc.add(&c.mul(&d));
                }
            }
            let mut psi = PsiDerivatives::new(bump, &z, exp.sums[k].max_nu() as usize);
            let symbolic = exp.sums[k].eval_with(&y, t, eps, &mut psi);
            let scale = exp.sums[k].abs_sum_with(&y, t, eps, &mut psi);
            if scale > 0.0 {
                worst = worst.max((symbolic - acc.value()).norm() / scale);
            } else if acc.value().norm() > 0.0 {
                worst = f64::INFINITY;
            }
            checked += 1;
        }
    }
    Ok(ConsistencyReport {
        k_max: exp.k_max(),
        samples: checked,
        max_rel_error: worst,
        tolerance: TOL,
        holds: worst <= TOL,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let r: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|a| a / r).collect();
        }
    }
}

fn poly_jet(q: &Poly, idx: &std::sync::Arc<MonomialIndex>, y: &[f64]) -> MJet {
    let vars: Vec<MJet> = (0..idx.n).map(|i| MJet::variable(idx, i, y[i])).collect();
    let mut acc = MJet::constant(idx, ZERO);
    for (e, &c) in &q.terms {
        let mut m = MJet::constant(idx, Complex64::new(c, 0.0));
        for (i, &p) in e.iter().enumerate() {
            for _ in 0..p {
                m = m.mul(&vars[i]);
            }
        }
        acc = acc.add(&m);
    }
    acc
}

/// Taylor jet in `y` of a term sum, with `(d^nu psi)(t^eps y) = t^(-eps |nu|) d_y^nu [psi(t^eps y)]`
/// taken from the jet of `B(t^(2 eps) |y|^2)`.
fn term_sum_jet(
    s: &IterateTermSum,
    idx: &std::sync::Arc<MonomialIndex>,
    bump: &BumpFunction,
    y: &[f64],
    t: f64,
    eps: f64,
    order: usize,
) -> MJet {
    let n = idx.n;
    let te = t.powf(eps);
    let vars: Vec<MJet> = (0..n).map(|i| MJet::variable(idx, i, y[i])).collect();
    let mut r2 = MJet::constant(idx, ZERO);
    for v in &vars {
        r2 = r2.add(&v.mul(v).scale(Complex64::new(te * te, 0.0)));
    }
    let base = r2.compose(&bump.radial_jet(r2.value().re, order));
    let mut psi_jets: HashMap<Vec<u32>, MJet> = HashMap::new();
    let mut acc = MJet::constant(idx, ZERO);
    for (k, &c) in &s.terms {
        let pj = psi_jets
            .entry(k.nu.clone())
            .or_insert_with(|| {
                let mut d = base.clone();
                for (i, &m) in k.nu.iter().enumerate() {
                    for _ in 0..m {
                        d = d.partial(i);
                    }
                }
                let m: u32 = k.nu.iter().sum();
                d.scale(Complex64::new(te.powi(-(m as i32)), 0.0))
            })
            .clone();
        let mut m = pj.scale(c * t.powf(k.t_pow as f64 + k.eps_pow as f64 * eps));
        for (i, &p) in k.beta.iter().enumerate() {
            for _ in 0..p {
                m = m.mul(&vars[i]);
            }
        }
        acc = acc.add(&m);
    }
    acc
}

/// Multi-indices `nu` with `|nu| <= max`, in graded order.
pub fn nu_range(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for deg in 0..=max {
        exact_degree(n, deg, &mut vec![0; n], 0, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> BumpFunction {
        BumpFunction::new(2, 0.5, 1.0).unwrap()
    }

    #[test]
    fn k_zero_is_bump() {
        let op = DiffOperator::parse("D1", Some(2)).unwrap();
        let e = IterateExpansion::build(&op, &[0.0, 0.0], &[0.0, 1.0], 0).unwrap();
        assert_eq!(e.sums[0], IterateTermSum::bump(2));
    }

    #[test]
    fn d1_collapses_to_ladder() {
        let op = DiffOperator::parse("D1", Some(2)).unwrap();
        let e = IterateExpansion::build(&op, &[0.0, 0.0], &[0.0, 1.0], 8).unwrap();
        for k in 0..=8 {
            assert_eq!(e.sums[k].len(), 1);
            assert_eq!(e.sums[k], directional_ladder(2, 0, 0.0, k));
        }
    }

    #[test]
    fn oblique_ladder_matches_structurally() {
        let op = DiffOperator::parse("D2", Some(2)).unwrap();
        let xi = [0.6, 0.8];
        let e = IterateExpansion::build(&op, &[0.1, -0.2], &xi, 8).unwrap();
        for k in 0..=8 {
            let l = directional_ladder(2, 1, xi[1], k);
            let keys: Vec<_> = e.sums[k].terms.keys().collect();
            assert_eq!(keys, l.terms.keys().collect::<Vec<_>>());
            for (key, c) in &l.terms {
                assert!((e.sums[k].terms[key] - c).norm() <= 1e-13 * c.norm());
            }
        }
    }

    #[test]
    fn recursion_matches_jets() {
        for (expr, x0, xi0) in [
            ("D1", [0.0, 0.0], [0.0, 1.0]),
            ("x2 D1", [0.3, -0.4], [0.0, 1.0]),
            ("D1 - D2^2", [0.0, 0.0], [1.0, 0.0]),
        ] {
            let op = DiffOperator::parse(expr, Some(2)).unwrap();
            let e = IterateExpansion::build(&op, &x0, &xi0, 5).unwrap();
            let r = recursion_consistency(&op, &e, &bump(), 0.3, 4, 7).unwrap();
            assert!(r.holds, "{expr}: {r:?}");
        }
    }

    #[test]
    fn matches_finite_differences_of_integrand() {
        // Q_1 e^{i t xi0.y} = P[psi(t^eps y) e^{i t xi0.y}] for P = x2 D1
        let op = DiffOperator::parse("x2 D1", Some(2)).unwrap();
        let x0 = [0.2, 0.1];
        let xi0 = [0.0, 1.0];
        let e = IterateExpansion::build(&op, &x0, &xi0, 1).unwrap();
        let b = bump();
        let (eps, t) = (0.25f64, 1.7f64);
        let f = |y: [f64; 2]| {
            let z = [y[0] * t.powf(eps), y[1] * t.powf(eps)];
            Complex64::new(0.0, t * (xi0[0] * y[0] + xi0[1] * y[1])).exp() * b.value(&z)
        };
        let y = [0.45, 0.2];
        let h = 1e-5;
        let d1 = (f([y[0] + h, y[1]]) - f([y[0] - h, y[1]])) / (2.0 * h);
        let direct = Complex64::new(0.0, -1.0) * d1 * (y[1] + x0[1]);
        let phase = Complex64::new(0.0, t * y[1]).exp();
        let sym = e.sums[1].eval(&b, &y, t, eps) * phase;
        assert!((sym - direct).norm() < 1e-6 * direct.norm().max(1e-3), "{sym} {direct}");
    }

    #[test]
    fn outside_support_is_zero() {
        let op = DiffOperator::parse("x2 D1", Some(2)).unwrap();
        let e = IterateExpansion::build(&op, &[0.0, 0.0], &[0.0, 1.0], 4).unwrap();
        for s in &e.sums {
            assert_eq!(s.eval(&bump(), &[1.1, 0.0], 1.0, 0.3), ZERO);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let op = DiffOperator::parse("x1 x2 D1 + x2^2 D2", Some(2)).unwrap();
        let r = IterateExpansion::build_with_budget(&op, &[0.0, 0.0], &[0.0, 1.0], 6, 20);
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }
}
