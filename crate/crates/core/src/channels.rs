//! Gaussian intervention and effect channels, and the uniform-prior Bayesian
//! inversion that turns `x → q(θ | do(x))` into `θ → q̃(do(x) | θ)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CachedGaussian, LN_2PI};
use crate::map::{finite_difference_jacobian, SmoothMap};
use crate::quadrature::{adaptive_box, AdaptiveOptions};

/// Relative finite-difference step (times the axis span) when no analytic Jacobian exists.
pub const FD_STEP_FRACTION: f64 = 1e-5;

/// Normalizations below this are treated as "unreachable".
pub const DEFAULT_NORMALIZATION_FLOOR: f64 = 1e-300;

/// Axis-aligned box: one `(lo, hi)` pair per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    axes: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(axes: Vec<(f64, f64)>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidDomain("a domain needs at least one axis".into()));
        }
        for (i, (lo, hi)) in axes.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "axis {i} has bounds ({lo}, {hi}); need finite lo < hi"
                )));
            }
        }
        Ok(Self { axes })
    }

    /// `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            axes: vec![(0.0, 1.0); dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[(f64, f64)] {
        &self.axes
    }

    pub fn span(&self, axis: usize) -> f64 {
        let (lo, hi) = self.axes[axis];
        hi - lo
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.axes.len()
            && p
                .iter()
                .zip(&self.axes)
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(Error::DomainViolation {
                point: p.to_vec(),
                domain: self.axes.clone(),
            });
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

type SigmaFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Noise model of a Gaussian channel.
#[derive(Clone)]
pub enum NoiseSpec {
    /// `σ² I`.
    ConstantIsotropic(f64),
    /// Per-axis standard deviations, evaluated at the channel mean.
    DiagonalStateDependent(Arc<SigmaFn>),
    /// Fixed SPD covariance.
    FullConstant(DMatrix<f64>),
}

impl fmt::Debug for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConstantIsotropic(s) => f.debug_tuple("ConstantIsotropic").field(s).finish(),
            Self::DiagonalStateDependent(_) => f.write_str("DiagonalStateDependent(<fn>)"),
            Self::FullConstant(c) => f.debug_tuple("FullConstant").field(c).finish(),
        }
    }
}

impl NoiseSpec {
    pub fn isotropic(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidNoise(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self::ConstantIsotropic(sigma))
    }

    pub fn state_dependent(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::DiagonalStateDependent(Arc::new(f))
    }

    pub fn full(cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || linalg::asymmetry(&cov) > 1e-12 * cov.amax().max(1e-300) {
            return Err(Error::InvalidNoise("covariance must be symmetric".into()));
        }
        if nalgebra::Cholesky::new(cov.clone()).is_none() {
            return Err(Error::InvalidNoise("covariance must be positive definite".into()));
        }
        Ok(Self::FullConstant(cov))
    }

    /// Covariance of the channel output at mean point `at`.
    pub fn covariance_at(&self, at: &[f64]) -> Result<DMatrix<f64>> {
        let d = at.len();
        match self {
            Self::ConstantIsotropic(s) => Ok(DMatrix::identity(d, d) * (s * s)),
            Self::DiagonalStateDependent(f) => {
                let s = f(at);
                if s.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: s.len(),
                    });
                }
                if let Some(bad) = s.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidNoise(format!(
                        "state-dependent sigma {bad} at {at:?} is not positive"
                    )));
                }
                Ok(DMatrix::from_diagonal(&DVector::from_iterator(
                    d,
                    s.iter().map(|v| v * v),
                )))
            }
            Self::FullConstant(c) => {
                if c.nrows() != d {
                    return Err(Error::DimensionMismatch {
                        expected: c.nrows(),
                        got: d,
                    });
                }
                Ok(c.clone())
            }
        }
    }
}

/// Multivariate normal distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDistribution {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianDistribution {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn log_density(&self, p: &[f64]) -> Result<f64> {
        log_density(self, p)
    }
}

/// Exact Gaussian log-density.
pub fn log_density(dist: &GaussianDistribution, p: &[f64]) -> Result<f64> {
    if p.len() != dist.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: dist.mean.len(),
            got: p.len(),
        });
    }
    let chol = nalgebra::Cholesky::new(dist.cov.clone()).ok_or(Error::DegenerateDistribution)?;
    let r = DVector::from_column_slice(p) - &dist.mean;
    let z = chol.l().solve_lower_triangular(&r).ok_or(Error::DegenerateDistribution)?;
    let d = p.len() as f64;
    Ok(-0.5 * (d * LN_2PI + linalg::log_det_from_cholesky(&chol) + z.norm_squared()))
}

/// `input → N(mean_map(input), Σ(mean_map(input)))`, with do-semantics on the input.
#[derive(Clone)]
pub struct GaussianChannel {
    mean_map: Arc<dyn SmoothMap>,
    noise: NoiseSpec,
    input_domain: Domain,
    output_domain: Domain,
}

impl fmt::Debug for GaussianChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianChannel")
            .field("noise", &self.noise)
            .field("input_domain", &self.input_domain)
            .field("output_domain", &self.output_domain)
            .finish()
    }
}

impl GaussianChannel {
    pub fn new(
        mean_map: Arc<dyn SmoothMap>,
        noise: NoiseSpec,
        input_domain: Domain,
        output_domain: Domain,
    ) -> Result<Self> {
        if mean_map.input_dim() != input_domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: input_domain.dim(),
                got: mean_map.input_dim(),
            });
        }
        if mean_map.output_dim() != output_domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: output_domain.dim(),
                got: mean_map.output_dim(),
            });
        }
        if let NoiseSpec::FullConstant(c) = &noise {
            if c.nrows() != output_domain.dim() {
                return Err(Error::DimensionMismatch {
                    expected: output_domain.dim(),
                    got: c.nrows(),
                });
            }
        }
        Ok(Self {
            mean_map,
            noise,
            input_domain,
            output_domain,
        })
    }

    pub fn mean_map(&self) -> &Arc<dyn SmoothMap> {
        &self.mean_map
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn input_domain(&self) -> &Domain {
        &self.input_domain
    }

    pub fn output_domain(&self) -> &Domain {
        &self.output_domain
    }

    pub fn input_dim(&self) -> usize {
        self.input_domain.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.output_domain.dim()
    }

    pub fn mean(&self, x: &[f64]) -> Vec<f64> {
        self.mean_map.eval(x)
    }

    /// Mean-map Jacobian: analytic when available, central differences otherwise.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.mean_map.jacobian(x).unwrap_or_else(|| {
            let steps: Vec<f64> = (0..self.input_dim())
                .map(|a| FD_STEP_FRACTION * self.input_domain.span(a))
                .collect();
            finite_difference_jacobian(self.mean_map.as_ref(), x, &steps)
        })
    }

    /// Conditional distribution without the domain check; the mean map is total.
    pub fn conditional(&self, x: &[f64]) -> Result<GaussianDistribution> {
        let m = self.mean_map.eval(x);
        let cov = self.noise.covariance_at(&m)?;
        Ok(GaussianDistribution::new(DVector::from_vec(m), cov))
    }

    pub fn push_forward(&self, x: &[f64]) -> Result<GaussianDistribution> {
        push_forward(self, x)
    }
}

/// Distribution of the channel output for input `x`.
pub fn push_forward(ch: &GaussianChannel, x: &[f64]) -> Result<GaussianDistribution> {
    ch.input_domain.check(x)?;
    ch.conditional(x)
}

/// The set of doable interventions, always weighted uniformly.
#[derive(Debug, Clone, PartialEq)]
pub enum InterventionSet {
    UniformBox(Domain),
    Discrete(Vec<Vec<f64>>),
}

impl InterventionSet {
    pub fn discrete(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("a discrete intervention set needs at least one point".into()));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidConfig("discrete intervention points must share a positive dimension".into()));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidConfig(format!(
                        "discrete intervention points must be distinct; {:?} repeats",
                        points[i]
                    )));
                }
            }
        }
        Ok(Self::Discrete(points))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UniformBox(d) => d.dim(),
            Self::Discrete(p) => p[0].len(),
        }
    }
}

/// A family of Gaussians `θ ~ N(m(x), Σ(x))` indexed by an intervention `x`.
///
/// Implemented by [`GaussianChannel`]; other conditionals (for instance
/// observational, confounded ones) can implement it to reuse the inversion
/// and Fisher-metric machinery.
pub trait ConditionalGaussian: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn mean_cov(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)>;
}

impl ConditionalGaussian for GaussianChannel {
    fn input_dim(&self) -> usize {
        GaussianChannel::input_dim(self)
    }
    fn output_dim(&self) -> usize {
        GaussianChannel::output_dim(self)
    }
    fn mean_cov(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let m = self.mean(x);
        let c = self.noise.covariance_at(&m)?;
        Ok((m, c))
    }
}

type WindowFn = dyn Fn(&[f64]) -> Vec<(f64, f64)> + Send + Sync;

/// `θ ↦ q̃(do(x) | θ) = q(θ | do(x)) / ∫dx q(θ | do(x))` over an intervention box.
#[derive(Clone)]
pub struct InvertedChannel {
    forward: Arc<dyn ConditionalGaussian>,
    region: Domain,
    window: Option<Arc<WindowFn>>,
    floor: f64,
    opts: AdaptiveOptions,
}

impl fmt::Debug for InvertedChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvertedChannel")
            .field("region", &self.region)
            .field("floor", &self.floor)
            .finish()
    }
}

/// Moments of the score `s(x) = ∂_θ ln q(θ | x)` under `q̃(x | θ)`.
#[derive(Debug, Clone)]
pub struct ScoreMoments {
    pub normalization: f64,
    pub mean_score: DVector<f64>,
    pub score_second_moment: DMatrix<f64>,
}

impl ScoreMoments {
    /// Fisher metric of `q̃(· | θ)`: the covariance of the score.
    pub fn fisher(&self) -> DMatrix<f64> {
        let mut h = &self.score_second_moment - &self.mean_score * self.mean_score.transpose();
        linalg::symmetrize(&mut h);
        h
    }
}

impl InvertedChannel {
    pub fn new(forward: Arc<dyn ConditionalGaussian>, region: Domain) -> Result<Self> {
        if forward.input_dim() != region.dim() {
            return Err(Error::DimensionMismatch {
                expected: forward.input_dim(),
                got: region.dim(),
            });
        }
        Ok(Self {
            forward,
            region,
            window: None,
            floor: DEFAULT_NORMALIZATION_FLOOR,
            opts: AdaptiveOptions {
                initial_panels: 64,
                rel_tol: 1e-11,
                ..AdaptiveOptions::default()
            },
        })
    }

    /// Restrict integration to `window(θ) ∩ region` (useful for unbounded-looking regions).
    pub fn with_window(mut self, window: impl Fn(&[f64]) -> Vec<(f64, f64)> + Send + Sync + 'static) -> Self {
        self.window = Some(Arc::new(window));
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn with_options(mut self, opts: AdaptiveOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn region(&self) -> &Domain {
        &self.region
    }

    pub fn parameter_dim(&self) -> usize {
        self.forward.output_dim()
    }

    fn bounds(&self, theta: &[f64]) -> Vec<(f64, f64)> {
        let base = self.region.axes().to_vec();
        match &self.window {
            None => base,
            Some(w) => base
                .iter()
                .zip(w(theta))
                .map(|((lo, hi), (a, b))| (lo.max(a), hi.min(b)))
                .collect(),
        }
    }

    fn log_q(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        let (m, c) = self.forward.mean_cov(x)?;
        let g = CachedGaussian::new(DVector::from_vec(m), &c)?;
        Ok(g.ln_pdf(theta))
    }

    /// `∫dx q(θ | do(x))` over the intervention region.
    pub fn normalization(&self, theta: &[f64]) -> Result<f64> {
        let f = |x: &[f64]| vec![self.log_q(theta, x).map(f64::exp).unwrap_or(f64::NAN)];
        let v = adaptive_box(&f, &self.bounds(theta), 1, &self.opts)?[0];
        if !(v >= self.floor) {
            return Err(Error::UnreachableParameter {
                theta: theta.to_vec(),
                normalization: v,
            });
        }
        Ok(v)
    }

    /// `q̃(do(x) | θ)`.
    pub fn density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        let z = self.normalization(theta)?;
        if !self.region.contains(x) {
            return Ok(0.0);
        }
        Ok(self.log_q(theta, x)?.exp() / z)
    }

    /// Normalization and score moments in a single cubature pass.
    pub fn score_moments(&self, theta: &[f64]) -> Result<ScoreMoments> {
        let d = self.parameter_dim();
        let npair = d * (d + 1) / 2;
        let dim = 1 + d + npair;
        let f = |x: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; dim];
            let Ok((m, c)) = self.forward.mean_cov(x) else {
                out[0] = f64::NAN;
                return out;
            };
            let Some(chol) = nalgebra::Cholesky::new(c) else {
                out[0] = f64::NAN;
                return out;
            };
            let r = DVector::from_iterator(d, m.iter().zip(theta).map(|(mi, ti)| mi - ti));
            let s = chol.solve(&r);
            let z = chol.l().solve_lower_triangular(&r).unwrap_or_else(|| r.clone());
            let logq = -0.5 * (d as f64 * LN_2PI + linalg::log_det_from_cholesky(&chol) + z.norm_squared());
            let q = logq.exp();
            out[0] = q;
            for i in 0..d {
                out[1 + i] = q * s[i];
            }
            let mut k = 1 + d;
            for i in 0..d {
                for j in i..d {
                    out[k] = q * s[i] * s[j];
                    k += 1;
                }
            }
            out
        };
        let v = adaptive_box(&f, &self.bounds(theta), dim, &self.opts)?;
        let z = v[0];
        if !(z >= self.floor) {
            return Err(Error::UnreachableParameter {
                theta: theta.to_vec(),
                normalization: z,
            });
        }
        let mean_score = DVector::from_iterator(d, (0..d).map(|i| v[1 + i] / z));
        let mut second = DMatrix::zeros(d, d);
        let mut k = 1 + d;
        for i in 0..d {
            for j in i..d {
                second[(i, j)] = v[k] / z;
                second[(j, i)] = v[k] / z;
                k += 1;
            }
        }
        Ok(ScoreMoments {
            normalization: z,
            mean_score,
            score_second_moment: second,
        })
    }

    /// `E_q̃[φ(x)]` for a scalar function of the intervention.
    pub fn expectation(&self, theta: &[f64], phi: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let f = |x: &[f64]| {
            let q = self.log_q(theta, x).map(f64::exp).unwrap_or(f64::NAN);
            vec![q, q * phi(x)]
        };
        let v = adaptive_box(&f, &self.bounds(theta), 2, &self.opts)?;
        if !(v[0] >= self.floor) {
            return Err(Error::UnreachableParameter {
                theta: theta.to_vec(),
                normalization: v[0],
            });
        }
        Ok(v[1] / v[0])
    }
}

/// Bayesian inversion of `ch` under the flat prior on a box of interventions.
pub fn invert_uniform_prior(ch: &GaussianChannel, x_set: &InterventionSet) -> Result<InvertedChannel> {
    match x_set {
        InterventionSet::UniformBox(b) => {
            if b != ch.input_domain() {
                return Err(Error::InvalidConfig(
                    "intervention box must equal the channel input domain".into(),
                ));
            }
            InvertedChannel::new(Arc::new(ch.clone()), b.clone())
        }
        InterventionSet::Discrete(_) => Err(Error::InvalidConfig(
            "uniform-prior inversion needs a box of interventions".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{AffineMap, FnMap};
    use std::f64::consts::PI;

    fn identity_channel(delta: f64) -> GaussianChannel {
        GaussianChannel::new(
            Arc::new(AffineMap::identity(1)),
            NoiseSpec::isotropic(delta).unwrap(),
            Domain::unit(1),
            Domain::unit(1),
        )
        .unwrap()
    }

    #[test]
    fn push_forward_identity() {
        let d = identity_channel(0.1).push_forward(&[0.5]).unwrap();
        assert_eq!(d.mean[0], 0.5);
        assert!((d.cov[(0, 0)] - 0.01).abs() < 1e-17);
    }

    #[test]
    fn push_forward_dimmer_square() {
        let f = FnMap::new(1, 1, |t| vec![t[0] * t[0]]);
        let ch = GaussianChannel::new(
            Arc::new(f),
            NoiseSpec::isotropic(0.03).unwrap(),
            Domain::unit(1),
            Domain::unit(1),
        )
        .unwrap();
        let d = ch.push_forward(&[0.5]).unwrap();
        assert_eq!(d.mean[0], 0.25);
        assert!((d.cov[(0, 0)] - 9e-4).abs() < 1e-17);
    }

    #[test]
    fn push_forward_rejects_outside_domain() {
        let err = identity_channel(0.1).push_forward(&[1.5]).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }));
    }

    #[test]
    fn state_dependent_noise_is_evaluated_at_the_mean() {
        let f = FnMap::new(1, 1, |t| vec![2.0 * t[0]]);
        let ch = GaussianChannel::new(
            Arc::new(f),
            NoiseSpec::state_dependent(|y| vec![0.1 * y[0]]),
            Domain::unit(1),
            Domain::new(vec![(0.0, 2.0)]).unwrap(),
        )
        .unwrap();
        let d = ch.push_forward(&[0.5]).unwrap();
        assert!((d.cov[(0, 0)] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn log_density_examples() {
        let n01 = GaussianDistribution::new(DVector::zeros(1), DMatrix::identity(1, 1));
        assert!((log_density(&n01, &[0.0]).unwrap() + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        let s = 0.3;
        let n = GaussianDistribution::new(DVector::zeros(1), DMatrix::identity(1, 1) * (s * s));
        let want = -0.5 * (2.0 * PI * s * s).ln() - 0.5;
        assert!((log_density(&n, &[s]).unwrap() - want).abs() < 1e-14);
        let e = 0.05;
        let n2 = GaussianDistribution::new(DVector::zeros(2), DMatrix::identity(2, 2) * (e * e));
        assert!((log_density(&n2, &[0.0, 0.0]).unwrap() + (2.0 * PI * e * e).ln()).abs() < 1e-13);
    }

    #[test]
    fn log_density_singular_is_an_error() {
        let n = GaussianDistribution::new(DVector::zeros(2), DMatrix::from_element(2, 2, 1.0));
        assert_eq!(log_density(&n, &[0.0, 0.0]), Err(Error::DegenerateDistribution));
    }

    #[test]
    fn inversion_matches_self_inverse_gaussian() {
        let delta = 0.03;
        let ch = identity_channel(delta);
        let inv = invert_uniform_prior(&ch, &InterventionSet::UniformBox(Domain::unit(1))).unwrap();
        for x in [0.4, 0.5, 0.55, 0.62] {
            let want = (-(x - 0.5f64).powi(2) / (2.0 * delta * delta)).exp() / (delta * (2.0 * PI).sqrt());
            let got = inv.density(&[0.5], &[x]).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn inversion_at_boundary_doubles_density() {
        let delta = 0.03;
        let inv = invert_uniform_prior(&identity_channel(delta), &InterventionSet::UniformBox(Domain::unit(1))).unwrap();
        let unbounded = 1.0 / (delta * (2.0 * PI).sqrt());
        let got = inv.density(&[0.0], &[0.0]).unwrap();
        assert!((got / (2.0 * unbounded) - 1.0).abs() < 0.01);
    }

    #[test]
    fn inversion_is_normalized() {
        let inv = invert_uniform_prior(&identity_channel(0.05), &InterventionSet::UniformBox(Domain::unit(1))).unwrap();
        for t in [0.0, 0.02, 0.3, 0.97] {
            let v = crate::quadrature::adaptive_gk(
                &mut |x| vec![inv.density(&[t], &[x]).unwrap()],
                0.0,
                1.0,
                1,
                &AdaptiveOptions::default(),
            )
            .unwrap()[0];
            assert!((v - 1.0).abs() < 1e-6, "theta={t}: {v}");
        }
    }

    #[test]
    fn unreachable_parameter_errors() {
        let inv = invert_uniform_prior(&identity_channel(0.001), &InterventionSet::UniformBox(Domain::unit(1)))
            .unwrap()
            .with_floor(1e-10);
        assert!(matches!(
            inv.normalization(&[-0.5]),
            Err(Error::UnreachableParameter { .. })
        ));
    }

    #[test]
    fn discrete_points_must_be_distinct() {
        assert!(InterventionSet::discrete(vec![vec![0.0], vec![0.0]]).is_err());
        assert!(InterventionSet::discrete(vec![]).is_err());
        assert!(InterventionSet::discrete(vec![vec![0.0], vec![1.0]]).is_ok());
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(vec![(1.0, 0.0)]).is_err());
        assert!(Domain::new(vec![]).is_err());
        assert!(Domain::new(vec![(0.0, f64::INFINITY)]).is_err());
    }
}
