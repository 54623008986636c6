use super::instance::MetivierInstance;
use super::terms::{IterateTermSum, PsiDerivatives};
use crate::error::{Error, Result};
use crate::numerics::logvalue::{log_add_exp, LogSumAcc};
use crate::numerics::quad::{integrate_cells, QuadOptions};
use crate::numerics::{integrate_range, integrate_windowed, LogValue};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;

/// Points on the segment through `x0` along `xi0`.
pub const SEGMENT_POINTS: usize = 401;
/// Points per side of the planar patch around `x0`.
pub const PATCH_SIDE: usize = 41;
/// `log` of the tail fraction dropped beyond the cut-off `T`.
pub const LOG_TAIL_CUT: f64 = -40.0;

/// Evaluates `int_1^inf Q(x, t) Phi_N(t) e^(i t xi0.(x - x0)) dt` for a list of term sums.
pub struct IterateEvaluator<'a> {
    inst: &'a MetivierInstance,
    sums: Vec<IterateTermSum>,
    max_nu: usize,
    /// Upper integration limit; beyond it each exponent keeps at most `e^-40` of its mass.
    pub t_cut: f64,
    /// `log int_T^inf t^p Phi` for every exponent `p` present, keyed by `(t_pow, eps_pow)`.
    log_tails: BTreeMap<(u32, u32), f64>,
    pub quad: QuadOptions,
}

#[derive(Debug, Clone)]
pub struct PointValue {
    pub values: Vec<Complex64>,
    /// Certified bound on the part of each integral beyond `t_cut`.
    pub log_remainder: Vec<f64>,
    /// Largest quadrature error estimate relative to the integral of `|f|`.
    pub quad_rel_error: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GridMeta {
    pub segment_points: usize,
    pub patch_side: usize,
    pub patch_half_width: f64,
    pub t_cut: f64,
    pub quad_rel_tol: f64,
    pub max_quad_rel_error: f64,
    /// Largest `log(remainder / sup norm)` over `k`.
    pub max_log_remainder_ratio: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IterateNorms {
    pub k: usize,
    pub log_sup: f64,
    pub log_l2: f64,
}

#[derive(Debug, Clone)]
pub struct GridEvaluation {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<Complex64>>,
    pub norms: Vec<IterateNorms>,
    pub meta: GridMeta,
}

impl<'a> IterateEvaluator<'a> {
    pub fn new(inst: &'a MetivierInstance, sums: Vec<IterateTermSum>) -> Result<Self> {
        let n = &inst.n;
        let mut exps: Vec<(u32, u32)> = sums
            .iter()
            .flat_map(|s| s.terms.keys().map(|k| (k.t_pow, k.eps_pow)))
            .collect();
        exps.sort_unstable();
        exps.dedup();
        let big_k = n.truncation();
        let lmu = n.log_mu();
        // smallest breakpoint index that cuts every exponent's tail
        let mut j_cut = 1;
        for &(a, b) in &exps {
            let p = a as f64 + b as f64 * inst.eps;
            let total = integrate_range(n, p, 1.0, f64::INFINITY)?.log_value;
            let cuts = |j: usize| -> Result<bool> {
                Ok(integrate_range(n, p, lmu[j].exp(), f64::INFINITY)?.log_value - total <= LOG_TAIL_CUT)
            };
            let (mut lo, mut hi) = (j_cut.max(1), big_k);
            if !cuts(hi)? {
                return Err(Error::TruncationExceeded {
                    logt: lmu[big_k],
                    cap: lmu[big_k],
                    required_k: 2 * big_k,
                });
            }
            if !cuts(lo)? {
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if cuts(mid)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                j_cut = hi;
            }
        }
        let t_cut = lmu[j_cut].exp().max(1.0);
        let mut log_tails = BTreeMap::new();
        for &(a, b) in &exps {
            let p = a as f64 + b as f64 * inst.eps;
            log_tails.insert((a, b), integrate_range(n, p, t_cut, f64::INFINITY)?.log_value);
        }
        let max_nu = sums.iter().map(|s| s.max_nu()).max().unwrap_or(0) as usize;
        Ok(IterateEvaluator {
            inst,
            sums,
            max_nu,
            t_cut,
            log_tails,
            quad: QuadOptions {
                rel_tol: 1e-10,
                ..QuadOptions::default()
            },
        })
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn sums(&self) -> &[IterateTermSum] {
        &self.sums
    }

    pub fn at(&self, x: &[f64]) -> Result<PointValue> {
        let inst = self.inst;
        let dim = self.sums.len();
        let y: Vec<f64> = x.iter().zip(&inst.x0).map(|(a, b)| a - b).collect();
        let r: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let delta = inst.delta;
        if r > 2.0 * delta {
            return Ok(PointValue {
                values: vec![Complex64::new(0.0, 0.0); dim],
                log_remainder: vec![f64::NEG_INFINITY; dim],
                quad_rel_error: 0.0,
                cells: 0,
            });
        }
        let eps = inst.eps;
        // psi(t^eps y) = 0 once t^eps r >= 2 delta
        let t_support = if r > 0.0 { (2.0 * delta / r).powf(1.0 / eps) } else { f64::INFINITY };
        let upper = self.t_cut.min(t_support);
        let mut breaks = vec![1.0];
        if r > 0.0 {
            breaks.push((delta / r).powf(1.0 / eps));
        }
        for &lm in inst.n.log_mu()[1..].iter() {
            let m = lm.exp();
            if m >= upper {
                break;
            }
            breaks.push(m);
        }
        breaks.push(upper);
        breaks.retain(|&b| (1.0..=upper).contains(&b));
        breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        breaks.dedup();
        let freq: f64 = y.iter().zip(&inst.xi0).map(|(a, b)| a * b).sum();
        let max_len = if freq.abs() > 0.0 {
            std::f64::consts::PI / (2.0 * freq.abs())
        } else {
            f64::INFINITY
        };
        let weight = inst.kernel.weight();
        let mut failed = None;
        let integral = integrate_cells(
            |t, out: &mut [Complex64]| {
                let lt = t.ln();
                let phi = match weight.omega(lt) {
                    Ok(w) => (-w).exp(),
                    Err(e) => {
                        failed.get_or_insert(e);
                        0.0
                    }
                };
                let te = t.powf(eps);
                let z: Vec<f64> = y.iter().map(|v| v * te).collect();
                let mut psi = PsiDerivatives::new(&inst.bump, &z, self.max_nu);
                let phase = Complex64::new(0.0, t * freq).exp() * phi;
                for (o, s) in out.iter_mut().zip(&self.sums) {
                    *o = s.eval_with(&y, t, eps, &mut psi) * phase;
                }
            },
            dim,
            &breaks,
            max_len,
            &self.quad,
        );
        if let Some(e) = failed {
            return Err(e);
        }
        let log_remainder = if t_support <= self.t_cut {
            vec![f64::NEG_INFINITY; dim]
        } else {
            self.sums.iter().map(|s| self.log_remainder(s, &y)).collect()
        };
        Ok(PointValue {
            quad_rel_error: integral.relative_error(),
            cells: integral.cells,
            values: integral.values,
            log_remainder,
        })
    }

    fn log_remainder(&self, s: &IterateTermSum, y: &[f64]) -> f64 {
        let fit = match self.inst.bump.fit.as_ref() {
            Some(f) => f,
            None => return f64::INFINITY,
        };
        let log_l = self.inst.l.log_m();
        let mut acc = f64::NEG_INFINITY;
        for (k, c) in &s.terms {
            let m: u32 = k.nu.iter().sum();
            let mono: f64 = k.beta.iter().zip(y).map(|(&b, &v)| b as f64 * v.abs().ln()).sum();
            let v = c.norm().ln()
                + mono
                + fit.log_c0
                + m as f64 * fit.log_h0
                + log_l.get(m as usize).copied().unwrap_or(f64::INFINITY)
                + self.log_tails[&(k.t_pow, k.eps_pow)];
            acc = log_add_exp(acc, v);
        }
        acc
    }

    /// Values on the segment `x0 + s xi0`, `|s| <= 2 delta`, and on the patch
    /// `x0 + a e1 + b e2`, `|a|, |b| <= 2 delta`, with sup and trapezoidal `L^2` norms.
    pub fn grid(&self, segment_points: usize, patch_side: usize) -> Result<GridEvaluation> {
        let inst = self.inst;
        let h = 2.0 * inst.delta;
        let n = inst.dimension();
        let mut points = Vec::new();
        for i in 0..segment_points {
            let s = -h + 2.0 * h * i as f64 / (segment_points - 1).max(1) as f64;
            points.push(inst.x0.iter().zip(&inst.xi0).map(|(a, b)| a + s * b).collect::<Vec<f64>>());
        }
        let patch_start = points.len();
        let coord = |i: usize| -h + 2.0 * h * i as f64 / (patch_side - 1).max(1) as f64;
        for i in 0..patch_side {
            for j in 0..patch_side {
                let mut p = inst.x0.clone();
                p[0] += coord(i);
                if n > 1 {
                    p[1] += coord(j);
                }
                points.push(p);
            }
        }
        let results = parallel_map(&points, |p| self.at(p))?;
        let dim = self.sums.len();
        let cell = (2.0 * h / (patch_side - 1).max(1) as f64).powi(n.min(2) as i32);
        let mut norms = Vec::with_capacity(dim);
        let mut ratio = f64::NEG_INFINITY;
        for k in 0..dim {
            let sup = results.iter().map(|r| r.values[k].norm()).fold(0.0, f64::max);
            let mut l2 = 0.0;
            for i in 0..patch_side {
                for j in 0..patch_side {
                    let w = trapezoid_weight(i, patch_side) * if n > 1 { trapezoid_weight(j, patch_side) } else { 1.0 };
                    l2 += w * results[patch_start + i * patch_side + j].values[k].norm_sqr();
                }
            }
            let rem = results.iter().map(|r| r.log_remainder[k]).fold(f64::NEG_INFINITY, f64::max);
            ratio = ratio.max(rem - sup.ln());
            norms.push(IterateNorms {
                k,
                log_sup: sup.ln(),
                log_l2: 0.5 * (l2 * cell).ln(),
            });
        }
        let meta = GridMeta {
            segment_points,
            patch_side,
            patch_half_width: h,
            t_cut: self.t_cut,
            quad_rel_tol: self.quad.rel_tol,
            max_quad_rel_error: results.iter().map(|r| r.quad_rel_error).fold(0.0, f64::max),
            max_log_remainder_ratio: ratio,
            cells: results.iter().map(|r| r.cells).sum(),
        };
        Ok(GridEvaluation {
            points,
            values: results.into_iter().map(|r| r.values).collect(),
            norms,
            meta,
        })
    }
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Maps `f` over `items` on all available cores, keeping input order.
pub fn parallel_map<T: Sync, R: Send, F: Fn(&T) -> Result<R> + Sync>(items: &[T], f: F) -> Result<Vec<R>> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len().max(1));
    let chunk = items.len().div_ceil(threads).max(1);
    let parts: Vec<Result<Vec<R>>> = std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Result<Vec<R>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// `u(x)`.
pub fn evaluate_u(inst: &MetivierInstance, x: &[f64]) -> Result<Complex64> {
    let ev = IterateEvaluator::new(inst, vec![IterateTermSum::bump(inst.dimension())])?;
    Ok(ev.at(x)?.values[0])
}

/// `D_xi0^k u(x0) = int_1^inf t^k Phi_N(t) dt`, from the table when it reaches
/// far enough and from the closed-form window otherwise.
pub fn directional_derivative_at_center(inst: &MetivierInstance, k: usize) -> Result<LogValue> {
    let m = match inst.kernel.raw_moment(k as f64, 1.0) {
        Ok(m) => m,
        Err(Error::TailDivergent { .. }) => integrate_windowed(inst.n.family(), k as f64, 1.0)?,
        Err(e) => return Err(e),
    };
    Ok(LogValue::from_log(m.log_value))
}

/// Norms of `P^k u` for `k = 0..sums.len()` on the default grids.
pub fn evaluate_iterates(inst: &MetivierInstance, sums: Vec<IterateTermSum>) -> Result<GridEvaluation> {
    IterateEvaluator::new(inst, sums)?.grid(SEGMENT_POINTS, PATCH_SIDE)
}

/// `log sum_k exp(v_k)` helper for norms kept in log form.
pub fn log_sum(values: &[f64]) -> f64 {
    let mut acc = LogSumAcc::new();
    for &v in values {
        acc.push(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metivier::instance::{select_parameters, InstanceOptions, RegimeRequest};
    use crate::metivier::operator::DiffOperator;
    use crate::metivier::terms::IterateExpansion;
    use crate::weightseq::WeightSequence;

    fn g3_instance(op: &str) -> MetivierInstance {
        let m = WeightSequence::gevrey(3.0, 256).unwrap();
        let op = DiffOperator::parse(op, Some(2)).unwrap();
        let req = RegimeRequest::GammaFinite {
            power_rho: Some(0.4),
            gamma0: Some(2.0),
            gamma_tilde: Some(2.8),
        };
        select_parameters(&m, &op, req, &InstanceOptions::for_dimension(2)).unwrap()
    }

    #[test]
    fn centre_value_is_moment() {
        let inst = g3_instance("D1");
        let u = evaluate_u(&inst, &inst.x0.clone()).unwrap();
        let m = inst.kernel.raw_moment(0.0, 1.0).unwrap().log_value.exp();
        assert!(u.im == 0.0 && u.re > 0.0);
        assert!((u.re - m).abs() < 1e-9 * m, "{u} {m}");
        let d0 = directional_derivative_at_center(&inst, 0).unwrap();
        assert!((d0.log_abs() - m.ln()).abs() < 1e-12);
    }

    #[test]
    fn outside_ball_is_exactly_zero() {
        let inst = g3_instance("x2 D1");
        let e = IterateExpansion::build(&inst.operator, &inst.x0, &inst.xi0, 3).unwrap();
        let ev = IterateEvaluator::new(&inst, e.sums).unwrap();
        let v = ev.at(&[1.01, 0.0]).unwrap();
        assert!(v.values.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn matches_dense_quadrature() {
        let inst = g3_instance("D1");
        let x = [0.0, 0.3];
        let u = evaluate_u(&inst, &x).unwrap();
        // composite Simpson on [1, t_support] in log t
        let y1 = x[1] - inst.x0[1];
        let t_sup = (2.0 * inst.delta / y1.abs()).powf(1.0 / inst.eps);
        let n = 200_000;
        let (a, b) = (0.0f64, t_sup.ln());
        let h = (b - a) / n as f64;
        let f = |s: f64| {
            let t = s.exp();
            let phi = (-inst.kernel.weight().omega(s).unwrap()).exp();
            let psi = inst.bump.value(&[0.0, y1 * t.powf(inst.eps)]);
            Complex64::new(0.0, t * y1).exp() * psi * phi * t
        };
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let brute = acc * h / 3.0;
        assert!((u - brute).norm() < 1e-7 * brute.norm(), "{u} {brute}");
    }

    #[test]
    fn first_iterate_matches_finite_difference() {
        let inst = g3_instance("D1");
        let e = IterateExpansion::build(&inst.operator, &inst.x0, &inst.xi0, 1).unwrap();
        let ev = IterateEvaluator::new(&inst, e.sums).unwrap();
        let x = [0.2, 0.15];
        let d = |h: f64| {
            let up = ev.at(&[x[0] + h, x[1]]).unwrap().values[0];
            let dn = ev.at(&[x[0] - h, x[1]]).unwrap().values[0];
            Complex64::new(0.0, -1.0) * (up - dn) / (2.0 * h)
        };
        // Richardson on central differences
        let fd = (d(1e-4) * 4.0 - d(2e-4)) / 3.0;
        let sym = ev.at(&x).unwrap().values[1];
        assert!((fd - sym).norm() < 1e-5 * sym.norm(), "{fd} {sym}");
    }
}
