//! Adaptive Gauss-Kronrod quadrature for vector-valued complex integrands,
//! with phase-aware cell splitting for `f(t) exp(i w t)`.

use crate::error::{Error, Result};
use crate::numerics::logvalue::LogValue;
use num_complex::Complex64;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone)]
struct Cell {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    err: Vec<f64>,
    envelope: Vec<f64>,
}

fn gk15<F: FnMut(f64, &mut [Complex64])>(f: &mut F, a: f64, b: f64, dim: usize) -> Cell {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let mut kron = vec![Complex64::new(0.0, 0.0); dim];
    let mut gauss = vec![Complex64::new(0.0, 0.0); dim];
    let mut env = vec![0.0; dim];
    let mut node = |x: f64, wk: f64, wg: f64, buf: &mut [Complex64]| {
        f(x, buf);
        for i in 0..dim {
            kron[i] += buf[i] * wk;
            gauss[i] += buf[i] * wg;
            env[i] += buf[i].norm() * wk;
        }
    };
    node(c, WGK[7], WG[3], &mut buf);
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        node(c - h * XGK[j], WGK[j], wg, &mut buf);
        node(c + h * XGK[j], WGK[j], wg, &mut buf);
    }
    let ah = h.abs();
    Cell {
        a,
        b,
        value: kron.iter().map(|v| v * h).collect(),
        err: kron
            .iter()
            .zip(&gauss)
            .map(|(k, g)| ((k - g) * h).norm())
            .collect(),
        envelope: env.iter().map(|e| e * ah).collect(),
    }
}

struct Keyed {
    key: f64,
    idx: usize,
}
impl PartialEq for Keyed {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Keyed {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key.partial_cmp(&o.key).unwrap_or(Ordering::Equal)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Target error relative to the envelope integral of each component.
    pub rel_tol: f64,
    /// Largest ratio `b / a` of an initial cell (for `a > 0`).
    pub geometric_ratio: f64,
    /// Bisections allowed after the initial partition.
    pub max_refinements: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-11,
            geometric_ratio: 1.25,
            max_refinements: 20_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VectorIntegral {
    #[serde(skip)]
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub envelopes: Vec<f64>,
    pub cells: usize,
}

impl VectorIntegral {
    pub fn relative_error(&self) -> f64 {
        self.errors
            .iter()
            .zip(&self.envelopes)
            .map(|(e, v)| if *v > 0.0 { e / v } else { 0.0 })
            .fold(0.0, f64::max)
    }
}

/// Splits `[a, b]` into cells no longer than `max_len` and with ratio `b/a`
/// below `ratio` when `a > 0`.
fn partition(a: f64, b: f64, max_len: f64, ratio: f64, out: &mut Vec<(f64, f64)>) {
    let mut x = a;
    while x < b {
        let mut step = b - x;
        if max_len.is_finite() {
            step = step.min(max_len);
        }
        if x > 0.0 && ratio > 1.0 {
            step = step.min(x * (ratio - 1.0));
        }
        let y = if b - (x + step) < 1e-12 * b.abs().max(1.0) {
            b
        } else {
            x + step
        };
        out.push((x, y));
        x = y;
    }
}

/// Integrates `f` over the finite cells given by consecutive `breaks`,
/// splitting each into geometric pieces no longer than `max_len`, then
/// refining adaptively until every component meets `rel_tol` against its
/// envelope integral.
pub fn integrate_cells<F: FnMut(f64, &mut [Complex64])>(
    mut f: F,
    dim: usize,
    breaks: &[f64],
    max_len: f64,
    opts: &QuadOptions,
) -> VectorIntegral {
    let mut pieces = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            partition(w[0], w[1], max_len, opts.geometric_ratio, &mut pieces);
        }
    }
    let mut cells: Vec<Cell> = pieces.iter().map(|&(a, b)| gk15(&mut f, a, b, dim)).collect();
    let totals = |cells: &[Cell]| -> (Vec<f64>, Vec<f64>) {
        let mut e = vec![0.0; dim];
        let mut v = vec![0.0; dim];
        for c in cells {
            for i in 0..dim {
                e[i] += c.err[i];
                v[i] += c.envelope[i];
            }
        }
        (e, v)
    };
    let (_, env0) = totals(&cells);
    let key = |c: &Cell| -> f64 {
        (0..dim)
            .map(|i| if env0[i] > 0.0 { c.err[i] / env0[i] } else { 0.0 })
            .fold(0.0, f64::max)
    };
    let mut heap: BinaryHeap<Keyed> = cells
        .iter()
        .enumerate()
        .map(|(idx, c)| Keyed { key: key(c), idx })
        .collect();
    let mut err_tot = totals(&cells).0;
    let mut refinements = 0;
    loop {
        let done = (0..dim).all(|i| err_tot[i] <= opts.rel_tol * env0[i]);
        if done || refinements >= opts.max_refinements {
            break;
        }
        let Some(top) = heap.pop() else { break };
        let c = cells[top.idx].clone();
        let m = 0.5 * (c.a + c.b);
        if !(m > c.a && m < c.b) {
            continue;
        }
        let left = gk15(&mut f, c.a, m, dim);
        let right = gk15(&mut f, m, c.b, dim);
        for i in 0..dim {
            err_tot[i] += left.err[i] + right.err[i] - c.err[i];
        }
        let kl = key(&left);
        let kr = key(&right);
        cells[top.idx] = left;
        heap.push(Keyed {
            key: kl,
            idx: top.idx,
        });
        cells.push(right);
        heap.push(Keyed {
            key: kr,
            idx: cells.len() - 1,
        });
        refinements += 1;
    }
    // ascending-t summation order for reproducibility
    cells.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let mut values = vec![Complex64::new(0.0, 0.0); dim];
    let mut errors = vec![0.0; dim];
    let mut envelopes = vec![0.0; dim];
    for c in &cells {
        for i in 0..dim {
            values[i] += c.value[i];
            errors[i] += c.err[i];
            envelopes[i] += c.envelope[i];
        }
    }
    VectorIntegral {
        values,
        errors,
        envelopes,
        cells: cells.len(),
    }
}

/// Real adaptive quadrature on `[a, b]`; returns `(value, error estimate)`.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    let opts = QuadOptions {
        rel_tol,
        geometric_ratio: 0.0,
        max_refinements: 200_000,
    };
    let r = integrate_cells(
        |t, out: &mut [Complex64]| out[0] = Complex64::new(f(t), 0.0),
        1,
        &[a, b],
        f64::INFINITY,
        &opts,
    );
    (r.values[0].re, r.errors[0])
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Oscillatory {
    pub re: LogValue,
    pub im: LogValue,
    #[serde(skip)]
    pub value: Complex64,
    pub error: f64,
    pub envelope: f64,
    pub cells: usize,
}

/// `int f(t) exp(i w t) dt` over `breaks[0]..breaks[last]`.
///
/// Cells are limited to a quarter period of the phase. A last break of
/// `+inf` integrates until the envelope contributions stop mattering.
pub fn integrate_oscillatory<F: Fn(f64) -> Complex64>(
    f: F,
    freq: f64,
    breaks: &[f64],
    rel_tol: f64,
) -> Result<Oscillatory> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::invalid("breaks must be sorted with at least two entries"));
    }
    let quarter = if freq == 0.0 {
        f64::INFINITY
    } else {
        FRAC_PI_2 / freq.abs()
    };
    let g = |t: f64, out: &mut [Complex64]| {
        out[0] = f(t) * Complex64::from_polar(1.0, freq * t);
    };
    let opts = QuadOptions {
        rel_tol,
        ..QuadOptions::default()
    };
    let mut finite: Vec<f64> = breaks.iter().cloned().filter(|x| x.is_finite()).collect();
    let open = breaks.last().is_some_and(|x| x.is_infinite());
    if open {
        // grow the finite range until a long stretch contributes nothing
        let mut b = *finite.last().unwrap_or(&0.0);
        let mut env = integrate_cells(g, 1, &finite, quarter, &opts).envelopes[0];
        let mut quiet = 0;
        let mut pieces = 0usize;
        while quiet < 8 {
            let len = (0.25 * b.abs()).max(1.0);
            pieces += (len / quarter.min(len)).ceil() as usize;
            if pieces > 200_000 || !b.is_finite() {
                return Err(Error::NonDecaying);
            }
            let seg = integrate_cells(g, 1, &[b, b + len], quarter, &opts);
            let e = seg.envelopes[0];
            env += e;
            quiet = if e <= 1e-18 * env { quiet + 1 } else { 0 };
            b += len;
            finite.push(b);
        }
    }
    let r = integrate_cells(g, 1, &finite, quarter, &opts);
    let v = r.values[0];
    Ok(Oscillatory {
        re: LogValue::from_f64(v.re),
        im: LogValue::from_f64(v.im),
        value: v,
        error: r.errors[0],
        envelope: r.envelopes[0],
        cells: r.cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = adaptive_quad(|t| t * t * t - 2.0 * t, 0.0, 2.0, 1e-14);
        assert!((v - 0.0).abs() < 1e-13);
        let (v, _) = adaptive_quad(|t| t.powi(5), 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn decaying_exponential_closed_form() {
        for &w in &[0.0, 0.5, 3.0, 20.0] {
            let r = integrate_oscillatory(
                |t| Complex64::new((-t).exp(), 0.0),
                w,
                &[0.0, f64::INFINITY],
                1e-12,
            )
            .unwrap();
            let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -w);
            assert!((r.value - exact).norm() < 1e-9, "w={w}");
        }
    }

    #[test]
    fn non_decaying_rejected() {
        let r = integrate_oscillatory(|_| Complex64::new(1.0, 0.0), 1.0, &[0.0, f64::INFINITY], 1e-10);
        assert!(matches!(r, Err(Error::NonDecaying)));
    }
}
