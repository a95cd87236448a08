//! Quadrature rules: fixed 1D grids, tensor products, and adaptive
//! Gauss–Kronrod cubature over boxes for vector-valued integrands.

use crate::error::{Error, Result};

/// A one-dimensional rule: nodes with their weights (weights sum to the interval length).
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    /// `n` cell midpoints on `[lo, hi]`.
    pub fn midpoint(lo: f64, hi: f64, n: usize) -> Self {
        let h = (hi - lo) / n as f64;
        Self {
            nodes: (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(),
            weights: vec![h; n],
        }
    }

    /// `n ≥ 2` equispaced nodes including both endpoints.
    pub fn trapezoid(lo: f64, hi: f64, n: usize) -> Self {
        let n = n.max(2);
        let h = (hi - lo) / (n - 1) as f64;
        let mut weights = vec![h; n];
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        Self {
            nodes: (0..n).map(|i| lo + i as f64 * h).collect(),
            weights,
        }
    }

    /// `n`-point Gauss–Legendre rule mapped onto `[lo, hi]`.
    pub fn gauss_legendre(lo: f64, hi: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        Self {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|wi| wi * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on the three-term recurrence.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Tensor-product iterator over per-axis rules; yields `(point, weight)`.
pub fn tensor_points(rules: &[Rule1D]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::with_capacity(rules.len()), 1.0)];
    for r in rules {
        let mut next = Vec::with_capacity(out.len() * r.len());
        for (p, w) in &out {
            for (x, wx) in r.nodes.iter().zip(&r.weights) {
                let mut q = p.clone();
                q.push(*x);
                next.push((q, w * wx));
            }
        }
        out = next;
    }
    out
}

// Kronrod 15-point nodes (non-negative half) and weights, Gauss 7-point weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Options for adaptive Gauss–Kronrod integration.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Uniform panels the interval is split into before adaptation starts.
    pub initial_panels: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            initial_panels: 32,
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_panels: 4000,
        }
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Vec<f64>,
    err: f64,
}

fn gk15(f: &mut dyn FnMut(f64) -> Vec<f64>, lo: f64, hi: f64, dim: usize) -> (Vec<f64>, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let fc = f(c);
    for j in 0..dim {
        k[j] += WGK[7] * fc[j];
        g[j] += WG[3] * fc[j];
    }
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for j in 0..dim {
            let s = f1[j] + f2[j];
            k[j] += WGK[i] * s;
            if i % 2 == 1 {
                g[j] += WG[i / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for j in 0..dim {
        k[j] *= h;
        g[j] *= h;
        err = err.max((k[j] - g[j]).abs());
    }
    (k, err)
}

/// Adaptive G7–K15 integration of a vector-valued integrand over `[lo, hi]`.
///
/// The error criterion is the largest component error against
/// `max(abs_tol, rel_tol · max_j |I_j|)`.
pub fn adaptive_gk(
    f: &mut dyn FnMut(f64) -> Vec<f64>,
    lo: f64,
    hi: f64,
    dim: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<f64>> {
    if !(hi > lo) {
        return Ok(vec![0.0; dim]);
    }
    let n0 = opts.initial_panels.max(1);
    let w = (hi - lo) / n0 as f64;
    let mut panels: Vec<Panel> = (0..n0)
        .map(|i| {
            let a = lo + i as f64 * w;
            let b = if i + 1 == n0 { hi } else { a + w };
            let (value, err) = gk15(f, a, b, dim);
            Panel {
                lo: a,
                hi: b,
                value,
                err,
            }
        })
        .collect();
    loop {
        let mut total = vec![0.0; dim];
        let mut total_err = 0.0;
        for p in &panels {
            for j in 0..dim {
                total[j] += p.value[j];
            }
            total_err += p.err;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = opts.abs_tol.max(opts.rel_tol * scale);
        if total_err <= tol || !total_err.is_finite() {
            if total.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite integrand".into()));
            }
            return Ok(total);
        }
        if panels.len() >= opts.max_panels {
            log::debug!(
                "adaptive_gk: panel budget exhausted (err {total_err:e} > tol {tol:e})"
            );
            return Ok(total);
        }
        // split the worst panel
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.err > be { (i, p.err) } else { (bi, be) });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        for (a, b) in [(p.lo, mid), (mid, p.hi)] {
            let (value, err) = gk15(f, a, b, dim);
            panels.push(Panel {
                lo: a,
                hi: b,
                value,
                err,
            });
        }
    }
}

/// Nested adaptive cubature over an axis-aligned box for a vector integrand.
pub fn adaptive_box(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    bounds: &[(f64, f64)],
    dim: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<f64>> {
    let mut point = vec![0.0; bounds.len()];
    nested(f, bounds, 0, &mut point, dim, opts)
}

fn nested(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    bounds: &[(f64, f64)],
    axis: usize,
    point: &mut Vec<f64>,
    dim: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<f64>> {
    let (lo, hi) = bounds[axis];
    if axis + 1 == bounds.len() {
        let mut g = |t: f64| {
            point[axis] = t;
            f(point)
        };
        return adaptive_gk(&mut g, lo, hi, dim, opts);
    }
    let mut failure = None;
    let mut g = |t: f64| {
        point[axis] = t;
        match nested(f, bounds, axis + 1, point, dim, opts) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                vec![0.0; dim]
            }
        }
    };
    let r = adaptive_gk(&mut g, lo, hi, dim, opts)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let r = Rule1D::gauss_legendre(0.0, 2.0, 5);
        // degree 9 is exact for 5 points
        let v = r.integrate(|x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_large_order_weights_sum() {
        let (x, w) = gauss_legendre_unit(301);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn adaptive_finds_narrow_peak() {
        let s = 1e-3;
        let mut f = |x: f64| {
            vec![(-(x - 0.3141).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())]
        };
        let v = adaptive_gk(&mut f, 0.0, 1.0, 1, &AdaptiveOptions::default()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-9, "{}", v[0]);
    }

    #[test]
    fn adaptive_box_2d() {
        let f = |p: &[f64]| vec![p[0] * p[1], 1.0];
        let v = adaptive_box(&f, &[(0.0, 1.0), (0.0, 2.0)], 2, &AdaptiveOptions::default()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!((v[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_weights_sum_to_volume() {
        let r = [Rule1D::midpoint(0.0, 1.0, 4), Rule1D::trapezoid(0.0, 3.0, 5)];
        let pts = tensor_points(&r);
        assert_eq!(pts.len(), 20);
        let s: f64 = pts.iter().map(|(_, w)| w).sum();
        assert!((s - 3.0).abs() < 1e-14);
    }
}
