//! Differentiable maps between coordinate spaces.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

/// A smooth map `ℝⁿ → ℝᵐ` with optional analytic Jacobian.
///
/// Implementations must be total on `ℝⁿ`; domain restrictions are enforced by
/// the caller (channels, submanifolds).
pub trait SmoothMap: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;

    /// Analytic Jacobian (`output_dim × input_dim`), if the map provides one.
    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

impl fmt::Debug for dyn SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothMap({} -> {})", self.input_dim(), self.output_dim())
    }
}

/// Central finite-difference Jacobian with per-axis steps.
pub fn finite_difference_jacobian(map: &dyn SmoothMap, x: &[f64], steps: &[f64]) -> DMatrix<f64> {
    let m = map.output_dim();
    let n = map.input_dim();
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        let h = steps[c];
        xp[c] = x[c] + h;
        let fp = map.eval(&xp);
        xp[c] = x[c] - h;
        let fm = map.eval(&xp);
        xp[c] = x[c];
        for r in 0..m {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

type EvalFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Closure-backed [`SmoothMap`].
#[derive(Clone)]
pub struct FnMap {
    input_dim: usize,
    output_dim: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
}

impl FnMap {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            input_dim,
            output_dim,
            eval: Arc::new(eval),
            jac: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }
}

impl SmoothMap for FnMap {
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }
    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(x))
    }
}

/// Affine map `x ↦ A x + b`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn linear(matrix: DMatrix<f64>) -> Self {
        let offset = vec![0.0; matrix.nrows()];
        Self { matrix, offset }
    }

    pub fn identity(dim: usize) -> Self {
        Self::linear(DMatrix::identity(dim, dim))
    }
}

impl SmoothMap for AffineMap {
    fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }
    fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|r| {
                self.offset[r]
                    + (0..self.matrix.ncols())
                        .map(|c| self.matrix[(r, c)] * x[c])
                        .sum::<f64>()
            })
            .collect()
    }
    fn jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.matrix.clone())
    }
}
