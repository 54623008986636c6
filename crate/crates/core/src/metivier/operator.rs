use super::poly::Poly;
use crate::error::{Error, Result};
use crate::numerics::{tail_trend, Trend};
use crate::weightseq::WeightSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// `p_alpha(x) D^alpha` with `D = -i d/dx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpTerm {
    pub coef: Poly,
    pub alpha: Vec<u32>,
}

/// Linear differential operator with polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffOperator {
    pub dimension: usize,
    pub order: u32,
    pub terms: Vec<OpTerm>,
}

fn factorial_ratio(g: &[u32], a: &[u32]) -> f64 {
    g.iter()
        .zip(a)
        .map(|(&gi, &ai)| (gi - ai + 1..=gi).map(|v| v as f64).product::<f64>())
        .product()
}

fn powi_multi(x: &[f64], e: &[u32]) -> f64 {
    x.iter().zip(e).map(|(v, &k)| v.powi(k as i32)).product()
}

impl DiffOperator {
    pub fn new(dimension: usize, terms: Vec<(Poly, Vec<u32>)>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
        for (coef, alpha) in terms {
            if alpha.len() != dimension || coef.n != dimension {
                return Err(Error::invalid("operator term has the wrong dimension"));
            }
            let e = merged.entry(alpha).or_insert_with(|| Poly::zero(dimension));
            *e = e.add(&coef);
        }
        merged.retain(|_, p| !p.is_zero());
        let order = merged
            .keys()
            .map(|a| a.iter().sum::<u32>())
            .max()
            .ok_or_else(|| Error::invalid("operator has no nonzero terms"))?;
        Ok(DiffOperator {
            dimension,
            order,
            terms: merged
                .into_iter()
                .map(|(alpha, coef)| OpTerm { coef, alpha })
                .collect(),
        })
    }

    /// Parses a sum of terms such as `x2*D1`, `D1 - D2^2`, `3 x1^2 D2 + 1`,
    /// or one of the names `laplacian` and `heat`. Coefficients are always
    /// placed to the left of the derivatives.
    pub fn parse(expr: &str, dimension: Option<usize>) -> Result<Self> {
        let name = expr.trim().to_ascii_lowercase();
        let n = dimension.unwrap_or(2);
        match name.as_str() {
            "laplacian" => {
                let terms = (0..n)
                    .map(|i| {
                        let mut a = vec![0; n];
                        a[i] = 2;
                        (Poly::constant(n, -1.0), a)
                    })
                    .collect();
                return DiffOperator::new(n, terms);
            }
            "heat" => return DiffOperator::parse("D1 - D2^2", Some(n.max(2))),
            _ => {}
        }
        let terms = parse_terms(expr)?;
        let max_index = terms
            .iter()
            .flat_map(|t| t.1.iter().chain(t.2.iter()).map(|f| f.0))
            .max()
            .unwrap_or(1);
        let n = dimension.unwrap_or(1).max(max_index);
        let built = terms
            .into_iter()
            .map(|(c, xs, ds)| {
                let mut e = vec![0u32; n];
                for (i, p) in xs {
                    e[i - 1] += p;
                }
                let mut a = vec![0u32; n];
                for (i, p) in ds {
                    a[i - 1] += p;
                }
                (Poly::monomial(n, c, e), a)
            })
            .collect();
        DiffOperator::new(n, built)
    }

    /// `p(x, xi) = sum p_alpha(x) xi^alpha`.
    pub fn symbol(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coef.eval(x) * powi_multi(xi, &t.alpha)).sum()
    }

    pub fn principal(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.principal_terms().map(|t| t.coef.eval(x) * powi_multi(xi, &t.alpha)).sum()
    }

    fn principal_terms(&self) -> impl Iterator<Item = &OpTerm> {
        self.terms.iter().filter(move |t| t.alpha.iter().sum::<u32>() == self.order)
    }

    fn principal_gradient(&self, x: &[f64], xi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.dimension;
        let mut gx = vec![0.0; n];
        let mut gxi = vec![0.0; n];
        for t in self.principal_terms() {
            let c = t.coef.eval(x);
            let m = powi_multi(xi, &t.alpha);
            for i in 0..n {
                gx[i] += t.coef.partial(i).eval(x) * m;
                if t.alpha[i] > 0 {
                    let mut a = t.alpha.clone();
                    a[i] -= 1;
                    gxi[i] += c * t.alpha[i] as f64 * powi_multi(xi, &a);
                }
            }
        }
        (gx, gxi)
    }

    /// `d_xi^alpha p(x, t xi0)` as a list of `(j, q_j)` meaning `sum_j t^j q_j(x)`.
    pub fn xi_derivative_along(&self, alpha: &[u32], xi0: &[f64]) -> Vec<(u32, Poly)> {
        let mut by_power: BTreeMap<u32, Poly> = BTreeMap::new();
        for t in &self.terms {
            if t.alpha.iter().zip(alpha).any(|(g, a)| g < a) {
                continue;
            }
            let rest: Vec<u32> = t.alpha.iter().zip(alpha).map(|(g, a)| g - a).collect();
            let factor = factorial_ratio(&t.alpha, alpha) * powi_multi(xi0, &rest);
            if factor == 0.0 {
                continue;
            }
            let j = rest.iter().sum();
            let e = by_power.entry(j).or_insert_with(|| Poly::zero(self.dimension));
            *e = e.add(&t.coef.scale(factor));
        }
        by_power.into_iter().filter(|(_, p)| !p.is_zero()).collect()
    }

    /// Smallest `C_P` with `|D^nu d_xi^alpha p(x, t xi0)| <= C_P^(|nu|+1) L_|nu| t^(d-|alpha|)`
    /// for `|x - x0| <= 2 delta`, `t >= 1`, using coefficient bounds on the enclosing cube.
    pub fn coefficient_constant(&self, x0: &[f64], xi0: &[f64], delta: f64, l: &WeightSequence) -> f64 {
        let mut cp = 0.0f64;
        for alpha in multi_indices(self.dimension, self.order) {
            let parts: Vec<Poly> = self
                .xi_derivative_along(&alpha, xi0)
                .into_iter()
                .map(|(_, q)| q.shift(x0))
                .collect();
            let max_deg = parts.iter().map(|q| q.degree()).max().unwrap_or(0);
            for nu in multi_indices(self.dimension, max_deg) {
                let s: f64 = parts
                    .iter()
                    .map(|q| {
                        let mut d = q.clone();
                        for (i, &k) in nu.iter().enumerate() {
                            for _ in 0..k {
                                d = d.partial(i);
                            }
                        }
                        d.abs_bound(2.0 * delta)
                    })
                    .sum();
                if s > 0.0 {
                    let m = nu.iter().sum::<u32>() as usize;
                    let c = ((s.ln() - l.log_m()[m]) / (m + 1) as f64).exp();
                    cp = cp.max(c);
                }
            }
        }
        cp
    }

    /// Multi-start search for `p_d(x0, xi0) = 0` with `|xi0| = 1` in a cube.
    ///
    /// The box centre with each coordinate axis (last axis first) is tried
    /// before random starts, so simple operators give axis-aligned witnesses.
    /// Each start runs damped Newton steps on `p_d` along its gradient, with
    /// `x` clamped to the box and `xi` renormalised.
    pub fn find_nonelliptic_point(&self, search: &SearchBox, starts: usize, seed: u64) -> NonEllipticPoint {
        let n = self.dimension;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .rev()
            .map(|i| {
                let mut xi = vec![0.0; n];
                xi[i] = 1.0;
                (search.center.clone(), xi)
            })
            .collect();
        for _ in 0..starts {
            let x: Vec<f64> = search
                .center
                .iter()
                .map(|c| c + rng.gen_range(-search.half_width..=search.half_width))
                .collect();
            // uniform on the sphere by rejection from the cube
            let mut xi: Vec<f64> = loop {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let r2: f64 = v.iter().map(|a| a * a).sum();
                if r2 > 1e-4 && r2 <= 1.0 {
                    break v;
                }
            };
            normalize(&mut xi);
            candidates.push((x, xi));
        }
        let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for (x, xi) in candidates {
            let (x, xi, r) = self.descend(search, x, xi);
            let better = best.as_ref().is_none_or(|b| r < b.2);
            if better {
                best = Some((x, xi, r));
            }
            if r == 0.0 {
                break;
            }
        }
        let (x0, xi0, residual) = best.expect("at least one candidate");
        NonEllipticPoint {
            x0,
            xi0,
            residual,
            found: residual <= WITNESS_TOL,
        }
    }

    fn descend(&self, search: &SearchBox, mut x: Vec<f64>, mut xi: Vec<f64>) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.dimension;
        let mut f = self.principal(&x, &xi);
        for _ in 0..200 {
            if f == 0.0 {
                break;
            }
            let (gx, mut gxi) = self.principal_gradient(&x, &xi);
            let radial: f64 = gxi.iter().zip(&xi).map(|(g, v)| g * v).sum();
            for i in 0..n {
                gxi[i] -= radial * xi[i];
            }
            let g2: f64 = gx.iter().chain(&gxi).map(|g| g * g).sum();
            if !(g2 > 0.0) {
                break;
            }
            let mut step = f / g2;
            let mut improved = false;
            for _ in 0..40 {
                let xn: Vec<f64> = (0..n)
                    .map(|i| {
                        (x[i] - step * gx[i])
                            .clamp(search.center[i] - search.half_width, search.center[i] + search.half_width)
                    })
                    .collect();
                let mut xin: Vec<f64> = (0..n).map(|i| xi[i] - step * gxi[i]).collect();
                normalize(&mut xin);
                let fnew = self.principal(&xn, &xin);
                if fnew.abs() < f.abs() {
                    x = xn;
                    xi = xin;
                    f = fnew;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (x, xi, f.abs())
    }

    /// Fits `D` in `|p(x, t xi0)| <= D t^(d - eps)` for `|x - x0| <= 2 delta t^-eps`.
    pub fn check_symbol_shrinking_bound(
        &self,
        x0: &[f64],
        xi0: &[f64],
        eps: f64,
        delta: f64,
        t_grid: &[f64],
    ) -> Result<ShrinkingReport> {
        let r0 = self.principal(x0, xi0).abs();
        if r0 > WITNESS_TOL {
            return Err(Error::precondition(format!("p_d(x0, xi0) = {r0} is not zero")));
        }
        if t_grid.iter().any(|&t| !(t >= 1.0)) {
            return Err(Error::invalid("t grid must lie in [1, inf)"));
        }
        let dirs = ball_directions(self.dimension);
        let d = self.order as f64;
        let mut per_t = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let radius = 2.0 * delta * t.powf(-eps);
            let txi: Vec<f64> = xi0.iter().map(|v| t * v).collect();
            let mut m = self.symbol(x0, &txi).abs();
            for dir in &dirs {
                for frac in [0.25, 0.5, 0.75, 1.0] {
                    let x: Vec<f64> = x0.iter().zip(dir).map(|(a, b)| a + frac * radius * b).collect();
                    m = m.max(self.symbol(&x, &txi).abs());
                }
            }
            per_t.push(m * t.powf(eps - d));
        }
        let fitted_d = per_t.iter().cloned().fold(0.0, f64::max);
        let trend = tail_trend(&per_t).trend;
        Ok(ShrinkingReport {
            fitted_d,
            per_t,
            trend,
            holds: trend != Trend::Increasing,
            t_points: t_grid.len(),
            t_max: t_grid.iter().cloned().fold(1.0, f64::max),
        })
    }
}

/// Largest `|p_d(x0, xi0)|` accepted as a non-ellipticity witness.
pub const WITNESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchBox {
    pub center: Vec<f64>,
    pub half_width: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NonEllipticPoint {
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    /// `|p_d(x0, xi0)|`.
    pub residual: f64,
    pub found: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ShrinkingReport {
    pub fitted_d: f64,
    pub per_t: Vec<f64>,
    pub trend: Trend,
    pub holds: bool,
    pub t_points: usize,
    pub t_max: f64,
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    } else if let Some(f) = v.first_mut() {
        *f = 1.0;
    }
}

/// Unit vectors `+-e_i` and, for `n <= 4`, the normalised sign vectors.
fn ball_directions(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            out.push(e);
        }
    }
    if n <= 4 && n > 1 {
        let scale = 1.0 / (n as f64).sqrt();
        for mask in 0..(1u32 << n) {
            out.push((0..n).map(|i| if mask >> i & 1 == 1 { -scale } else { scale }).collect());
        }
    }
    out
}

/// All multi-indices in `n` variables with `|a| <= max`, graded.
pub fn multi_indices(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for deg in 0..=max {
        exact_degree(n, deg, &mut vec![0; n], 0, &mut out);
    }
    out
}

/// Multi-indices with `|a| = deg`.
pub fn exact_degree(n: usize, deg: u32, cur: &mut Vec<u32>, i: usize, out: &mut Vec<Vec<u32>>) {
    if i + 1 == n {
        cur[i] = deg;
        out.push(cur.clone());
        cur[i] = 0;
        return;
    }
    for v in (0..=deg).rev() {
        cur[i] = v;
        exact_degree(n, deg - v, cur, i + 1, out);
    }
    cur[i] = 0;
}

type ParsedTerm = (f64, Vec<(usize, u32)>, Vec<(usize, u32)>);

fn parse_terms(expr: &str) -> Result<Vec<ParsedTerm>> {
    let chars: Vec<char> = expr.chars().filter(|c| !c.is_whitespace() || *c == ' ').collect();
    let err = |pos: usize, msg: &str| Error::invalid(format!("operator '{expr}' at {pos}: {msg}"));
    let mut terms = Vec::new();
    let mut i = 0;
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i] == ' ' {
            *i += 1;
        }
    };
    let read_uint = |i: &mut usize| -> Option<u32> {
        let start = *i;
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        chars[start..*i].iter().collect::<String>().parse().ok()
    };
    skip_ws(&mut i);
    if i == chars.len() {
        return Err(err(0, "empty expression"));
    }
    loop {
        skip_ws(&mut i);
        let mut sign = 1.0;
        if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
            if chars[i] == '-' {
                sign = -1.0;
            }
            i += 1;
        } else if !terms.is_empty() {
            return Err(err(i, "expected '+' or '-'"));
        }
        let (mut c, mut xs, mut ds) = (sign, Vec::new(), Vec::new());
        let mut factors = 0;
        loop {
            skip_ws(&mut i);
            if i >= chars.len() || chars[i] == '+' || chars[i] == '-' {
                break;
            }
            if chars[i] == '*' {
                if factors == 0 {
                    return Err(err(i, "dangling '*'"));
                }
                i += 1;
                continue;
            }
            let ch = chars[i];
            if ch.is_ascii_digit() || ch == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || matches!(chars[i], '.' | 'e' | 'E')) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                c *= s.parse::<f64>().map_err(|_| err(start, "bad number"))?;
            } else if ch == 'x' || ch == 'D' {
                i += 1;
                let idx = read_uint(&mut i).filter(|&v| v >= 1).ok_or_else(|| err(i, "expected index >= 1"))?;
                let mut p = 1;
                if i < chars.len() && chars[i] == '^' {
                    i += 1;
                    p = read_uint(&mut i).ok_or_else(|| err(i, "expected exponent"))?;
                }
                if ch == 'x' {
                    xs.push((idx as usize, p));
                } else {
                    ds.push((idx as usize, p));
                }
            } else {
                return Err(err(i, &format!("unexpected '{ch}'")));
            }
            factors += 1;
        }
        if factors == 0 {
            return Err(err(i, "empty term"));
        }
        terms.push((c, xs, ds));
        if i >= chars.len() {
            break;
        }
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box2() -> SearchBox {
        SearchBox {
            center: vec![0.0, 0.0],
            half_width: 1.0,
        }
    }

    #[test]
    fn parses_shorthands() {
        let p = DiffOperator::parse("x2*D1", None).unwrap();
        assert_eq!((p.dimension, p.order), (2, 1));
        assert_eq!(p.symbol(&[0.0, 3.0], &[2.0, 5.0]), 6.0);
        let h = DiffOperator::parse("heat", None).unwrap();
        assert_eq!(h.order, 2);
        assert_eq!(h.principal(&[0.0, 0.0], &[1.0, 2.0]), -4.0);
        let q = DiffOperator::parse("3 x1^2 D2 - 0.5", Some(2)).unwrap();
        assert_eq!(q.symbol(&[2.0, 0.0], &[0.0, 1.0]), 11.5);
        assert!(DiffOperator::parse("D1 +", None).is_err());
        assert!(DiffOperator::parse("y1", None).is_err());
    }

    #[test]
    fn witnesses() {
        let d1 = DiffOperator::parse("D1", Some(2)).unwrap();
        let w = d1.find_nonelliptic_point(&box2(), 8, 1);
        assert!(w.found);
        assert_eq!(w.xi0, vec![0.0, 1.0]);
        let heat = DiffOperator::parse("heat", None).unwrap();
        let w = heat.find_nonelliptic_point(&box2(), 8, 1);
        assert!(w.found);
        assert_eq!(w.xi0, vec![1.0, 0.0]);
        let lap = DiffOperator::parse("laplacian", None).unwrap();
        let w = lap.find_nonelliptic_point(&box2(), 16, 1);
        assert!(!w.found);
        assert!(w.residual >= 1.0 - 1e-12);
    }

    #[test]
    fn newton_finds_oblique_zero() {
        // principal symbol xi1 + x1 xi2 vanishes off the axes
        let p = DiffOperator::parse("D1 + x1 D2", None).unwrap();
        let sb = SearchBox {
            center: vec![0.5, 0.0],
            half_width: 0.25,
        };
        let w = p.find_nonelliptic_point(&sb, 16, 3);
        assert!(w.found, "{w:?}");
        assert!((w.xi0.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shrinking_bound_examples() {
        let grid: Vec<f64> = (0..40).map(|i| 1.5f64.powi(i)).collect();
        let p = DiffOperator::parse("D1 + x1 D2", None).unwrap();
        let r = p.check_symbol_shrinking_bound(&[0.0, 0.0], &[0.0, 1.0], 0.3, 0.5, &grid).unwrap();
        assert!(r.holds);
        assert!((r.fitted_d - 1.0).abs() < 1e-12);
        assert!(p.check_symbol_shrinking_bound(&[0.0, 0.0], &[1.0, 0.0], 0.3, 0.5, &grid).is_err());
        let q = DiffOperator::parse("x2 D1", None).unwrap();
        let r = q.check_symbol_shrinking_bound(&[0.3, 0.2], &[0.0, 1.0], 0.3, 0.5, &grid).unwrap();
        assert_eq!(r.fitted_d, 0.0);
    }

    #[test]
    fn xi_derivatives_collapse_along_direction() {
        let p = DiffOperator::parse("D1 - D2^2 + x1 D2", None).unwrap();
        // p(x, t xi0) with xi0 = (1, 0) is t
        let parts = p.xi_derivative_along(&[0, 0], &[1.0, 0.0]);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].0, 1);
        // d_xi2 p = -2 xi2 + x1 -> at t xi0: x1
        let parts = p.xi_derivative_along(&[0, 1], &[1.0, 0.0]);
        assert_eq!(parts, vec![(0, Poly::monomial(2, 1.0, vec![1, 0]))]);
        let parts = p.xi_derivative_along(&[0, 2], &[1.0, 0.0]);
        assert_eq!(parts, vec![(0, Poly::constant(2, -2.0))]);
    }

    #[test]
    fn coefficient_constant_for_constant_coefficients() {
        let l = WeightSequence::gevrey(2.0, 64).unwrap();
        let p = DiffOperator::parse("D1", Some(2)).unwrap();
        assert_eq!(p.coefficient_constant(&[0.0, 0.0], &[0.0, 1.0], 0.5, &l), 1.0);
        let q = DiffOperator::parse("x2 D1", None).unwrap();
        // d_xi1 p = x2, |x2| <= 2 delta + |x0_2| after the shift
        let c = q.coefficient_constant(&[0.0, 0.0], &[0.0, 1.0], 0.5, &l);
        assert!(c >= 1.0);
    }
}
