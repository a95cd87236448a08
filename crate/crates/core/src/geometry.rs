//! Effect and intervention metrics, local mismatch, and the `h⁻¹g` spectrum.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::channels::{GaussianChannel, InvertedChannel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::map::{finite_difference_jacobian, SmoothMap};

/// A field of symmetric positive semi-definite matrices over parameter space.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>>;
}

impl fmt::Debug for dyn MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricField(dim={})", self.dim())
    }
}

impl<M: MetricField + ?Sized> MetricField for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        (**self).eval(theta)
    }
}

/// Same matrix everywhere.
#[derive(Debug, Clone)]
pub struct ConstantMetric(pub DMatrix<f64>);

impl MetricField for ConstantMetric {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), theta)?;
        Ok(self.0.clone())
    }
}

type MetricFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// Closure-backed metric field.
#[derive(Clone)]
pub struct FnMetric {
    dim: usize,
    f: Arc<MetricFn>,
}

impl FnMetric {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }
}

impl MetricField for FnMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim, theta)?;
        let mut m = (self.f)(theta)?;
        linalg::symmetrize(&mut m);
        Ok(m)
    }
}

fn check_dim(dim: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: theta.len(),
        });
    }
    Ok(())
}

/// `g(θ) = Jᵀ Σ⁻¹ J` for an effect channel `θ → y`.
#[derive(Debug, Clone)]
pub struct EffectMetric {
    channel: GaussianChannel,
}

impl EffectMetric {
    pub fn channel(&self) -> &GaussianChannel {
        &self.channel
    }
}

impl MetricField for EffectMetric {
    fn dim(&self) -> usize {
        self.channel.input_dim()
    }
    fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), theta)?;
        let j = self.channel.jacobian(theta);
        let m = self.channel.mean(theta);
        let cov = self.channel.noise().covariance_at(&m)?;
        let chol = Cholesky::new(cov).ok_or(Error::DegenerateDistribution)?;
        let mut g = j.transpose() * chol.solve(&j);
        linalg::symmetrize(&mut g);
        Ok(g)
    }
}

pub fn effect_metric(ch: &GaussianChannel) -> EffectMetric {
    EffectMetric { channel: ch.clone() }
}

/// Fisher metric of the inverted intervention channel `q̃(do(x) | θ)`.
#[derive(Debug, Clone)]
pub struct InterventionMetric {
    inverted: InvertedChannel,
}

impl MetricField for InterventionMetric {
    fn dim(&self) -> usize {
        self.inverted.parameter_dim()
    }
    fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), theta)?;
        Ok(self.inverted.score_moments(theta)?.fisher())
    }
}

pub fn intervention_metric(inv: &InvertedChannel) -> InterventionMetric {
    InterventionMetric {
        inverted: inv.clone(),
    }
}

/// `m′(θ′) = J_φᵀ m(φ(θ′)) J_φ`.
#[derive(Clone)]
pub struct Reparameterized {
    inner: Arc<dyn MetricField>,
    phi: Arc<dyn SmoothMap>,
    fd_step: f64,
}

impl Reparameterized {
    /// Jacobian of `φ` at `θ′`, rejecting (numerically) singular ones.
    pub fn phi_jacobian(&self, theta_prime: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.phi.jacobian(theta_prime).unwrap_or_else(|| {
            finite_difference_jacobian(self.phi.as_ref(), theta_prime, &vec![self.fd_step; theta_prime.len()])
        });
        let scale = j.amax();
        let det = j.determinant();
        let d = j.nrows() as i32;
        if !(det.abs() > 1e-10 * scale.powi(d).max(1.0)) {
            return Err(Error::SingularJacobian(theta_prime.to_vec()));
        }
        Ok(j)
    }
}

impl MetricField for Reparameterized {
    fn dim(&self) -> usize {
        self.phi.input_dim()
    }
    fn eval(&self, theta_prime: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), theta_prime)?;
        let j = self.phi_jacobian(theta_prime)?;
        let m = self.inner.eval(&self.phi.eval(theta_prime))?;
        let mut out = j.transpose() * m * j;
        linalg::symmetrize(&mut out);
        Ok(out)
    }
}

/// Pull a metric back through a coordinate change `φ: θ′ → θ`.
pub fn reparameterize(m: Arc<dyn MetricField>, phi: Arc<dyn SmoothMap>) -> Result<Reparameterized> {
    if phi.input_dim() != phi.output_dim() || phi.output_dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: phi.input_dim(),
        });
    }
    Ok(Reparameterized {
        inner: m,
        phi,
        fd_step: 1e-6,
    })
}

/// `l = ½[ln det(g + h) − ln det g]`; `+∞` when `g` is singular.
pub fn mismatch(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    if g.shape() != h.shape() || !g.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: g.nrows(),
        });
    }
    let sum = g + h;
    let ld_sum = linalg::log_det_spd(&sum).map_err(|_| Error::DegenerateModel {
        node: vec![],
        reason: "g + h is singular".into(),
    })?;
    match linalg::log_det_strict(g) {
        Some(ld_g) => Ok((0.5 * (ld_sum - ld_g)).max(0.0)),
        None => Ok(f64::INFINITY),
    }
}

/// Spectrum of the pencil `(g, h)`, i.e. the eigenvalues of `h⁻¹g`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Descending, nonnegative.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors in coordinates where `h` is the identity.
    pub basis: DMatrix<f64>,
}

impl EigenReport {
    /// `½ Σ ln(1 + 1/λ)`.
    pub fn mismatch(&self) -> f64 {
        mismatch_from_eigenvalues(&self.eigenvalues)
    }
}

pub fn mismatch_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| if l > 0.0 { 0.5 * (1.0 / l).ln_1p() } else { f64::INFINITY })
        .sum()
}

/// Generalized eigenvalues of `(g, h)` by Cholesky whitening of `h`.
pub fn causal_eigenvalues(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<EigenReport> {
    if g.shape() != h.shape() || !g.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: g.nrows(),
        });
    }
    if h.iter().any(|v| !v.is_finite()) || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite metric entries".into()));
    }
    let chol = Cholesky::new(h.clone()).ok_or(Error::IllPosedInterventions)?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(g)
        .ok_or(Error::IllPosedInterventions)?;
    let mut m = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::IllPosedInterventions)?;
    linalg::symmetrize(&mut m);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let basis = DMatrix::from_fn(g.nrows(), g.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenReport { eigenvalues, basis })
}
