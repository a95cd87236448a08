//! Exact EI by nested Monte Carlo with Laplace-mixture importance sampling.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{EIReport, Method, Sampling, Warning};
use crate::channels::{Domain, GaussianChannel, InterventionSet};
use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, CachedGaussian};
use crate::quadrature::{tensor_points, Rule1D};

const LAPLACE_SHARE: f64 = 0.8;
const LAPLACE_INFLATION: f64 = 1.5;
const MODE_STARTS: usize = 3;
const MAX_GRID_NODES: usize = 4096;
const UNRELIABLE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub outer_samples: usize,
    pub inner_samples: usize,
    pub seed: u64,
    /// Batches for the batch-means standard error; each gets its own stream.
    pub batches: usize,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            outer_samples: 20_000,
            inner_samples: 256,
            seed: 0,
            batches: 20,
        }
    }
}

impl MonteCarloSpec {
    pub fn validate(&self) -> Result<()> {
        if self.outer_samples == 0 || self.inner_samples == 0 {
            return Err(Error::InvalidConfig("sample counts must be positive".into()));
        }
        if self.batches < 2 || self.batches > self.outer_samples {
            return Err(Error::InvalidConfig(format!(
                "batches must lie in [2, outer_samples], got {}",
                self.batches
            )));
        }
        Ok(())
    }
}

fn gaussian(ch: &GaussianChannel, input: &[f64]) -> Result<CachedGaussian> {
    let d = ch.conditional(input)?;
    CachedGaussian::new(d.mean, &d.cov)
}

fn draw_normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Whitened residual block `L⁻¹ (target − mean(z))` and its Jacobian in `z`.
fn whiten(cov: &DMatrix<f64>, resid: DVector<f64>, jac: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new(cov.clone()).ok_or(Error::DegenerateDistribution)?;
    let l = chol.l();
    let r = l.solve_lower_triangular(&resid).ok_or(Error::DegenerateDistribution)?;
    let j = l.solve_lower_triangular(&jac).ok_or(Error::DegenerateDistribution)?;
    Ok((r, j))
}

/// Levenberg–Marquardt on `½‖r(z)‖²`; returns the point and `JᵀJ` there.
fn levenberg_marquardt(
    z0: &[f64],
    residual: &dyn Fn(&[f64]) -> Result<(DVector<f64>, DMatrix<f64>)>,
) -> Result<(Vec<f64>, f64, DMatrix<f64>)> {
    let n = z0.len();
    let mut z = DVector::from_column_slice(z0);
    let (mut r, mut j) = residual(z.as_slice())?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..50 {
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * &r;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(ch) = Cholesky::new(a) else {
                lambda *= 10.0;
                continue;
            };
            let step = ch.solve(&grad);
            let cand = &z - &step;
            let Ok((rc, jc)) = residual(cand.as_slice()) else {
                lambda *= 10.0;
                continue;
            };
            let cc = rc.norm_squared();
            if cc.is_finite() && cc <= cost {
                let small = step.norm() <= 1e-12 * (1.0 + z.norm());
                z = cand;
                r = rc;
                j = jc;
                cost = cc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = !small;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let jtj = j.transpose() * &j;
    Ok((z.as_slice().to_vec(), cost, jtj))
}

/// Inflated Gaussian proposal from a precision matrix.
fn laplace(mode: Vec<f64>, precision: &DMatrix<f64>) -> Result<CachedGaussian> {
    let mut p = precision.clone();
    crate::linalg::symmetrize(&mut p);
    let cov = crate::linalg::cholesky_jittered(&p)?.inverse() * (LAPLACE_INFLATION * LAPLACE_INFLATION);
    CachedGaussian::new(DVector::from_vec(mode), &cov)
}

struct Setup<'a> {
    ch_x: &'a GaussianChannel,
    ch_y: &'a GaussianChannel,
    dx: usize,
    dt: usize,
    /// Box interventions only.
    domain: Option<Domain>,
    ln_volume: f64,
    /// Coarse θ grid with cached effect Gaussians.
    grid: Vec<(Vec<f64>, CachedGaussian)>,
    grid_step: Vec<f64>,
    x_probe: Vec<(Vec<f64>, CachedGaussian)>,
    points: Vec<Vec<f64>>,
    inner: usize,
}

impl<'a> Setup<'a> {
    fn new(
        x_set: &InterventionSet,
        ch_x: &'a GaussianChannel,
        ch_y: &'a GaussianChannel,
        inner: usize,
    ) -> Result<Self> {
        let dx = x_set.dim();
        let dt = ch_x.output_dim();
        if dx != ch_x.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: ch_x.input_dim(),
                got: dx,
            });
        }
        if dt != ch_y.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: ch_y.input_dim(),
                got: dt,
            });
        }
        let (domain, points) = match x_set {
            InterventionSet::UniformBox(d) => (Some(d.clone()), Vec::new()),
            InterventionSet::Discrete(p) => (None, p.clone()),
        };
        let x_probe_pts: Vec<Vec<f64>> = match &domain {
            Some(d) => {
                let per = (2000f64.powf(1.0 / dx as f64).floor() as usize).clamp(2, 33);
                let rules: Vec<Rule1D> = d.axes().iter().map(|&(lo, hi)| Rule1D::trapezoid(lo, hi, per)).collect();
                tensor_points(&rules).into_iter().map(|(p, _)| p).collect()
            }
            None => points.clone(),
        };
        let x_probe: Vec<(Vec<f64>, CachedGaussian)> = x_probe_pts
            .into_iter()
            .map(|p| gaussian(ch_x, &p).map(|g| (p, g)))
            .collect::<Result<_>>()?;
        let hull: Vec<(f64, f64)> = (0..dt)
            .map(|a| {
                x_probe.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, g)| {
                    let s = (0..=a).map(|k| g.chol_l[(a, k)].powi(2)).sum::<f64>().sqrt();
                    (lo.min(g.mean[a] - 3.0 * s), hi.max(g.mean[a] + 3.0 * s))
                })
            })
            .collect();
        let per = if dt <= 2 {
            16
        } else {
            (MAX_GRID_NODES as f64).powf(1.0 / dt as f64).floor() as usize
        };
        let rules: Vec<Rule1D> = hull.iter().map(|&(lo, hi)| Rule1D::midpoint(lo, hi, per)).collect();
        let grid = tensor_points(&rules)
            .into_iter()
            .map(|(p, _)| gaussian(ch_y, &p).map(|g| (p, g)))
            .collect::<Result<_>>()?;
        let grid_step = hull.iter().map(|(lo, hi)| (hi - lo) / per as f64).collect();
        let ln_volume = domain.as_ref().map(|d| d.volume().ln()).unwrap_or(0.0);
        Ok(Self {
            ch_x,
            ch_y,
            dx,
            dt,
            domain,
            ln_volume,
            grid,
            grid_step,
            x_probe,
            points,
            inner,
        })
    }

    fn ln_effect(&self, theta: &[f64], y: &[f64]) -> Result<f64> {
        Ok(gaussian(self.ch_y, theta)?.ln_pdf(y))
    }

    /// Effect residual block for θ.
    fn effect_block(&self, theta: &[f64], y: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let m = self.ch_y.mean(theta);
        let cov = self.ch_y.noise().covariance_at(&m)?;
        let resid = DVector::from_iterator(y.len(), y.iter().zip(&m).map(|(a, b)| a - b));
        whiten(&cov, resid, -self.ch_y.jacobian(theta))
    }

    /// `ln P̂(y | do(x))` by importance sampling over θ.
    fn ln_conditional(
        &self,
        x: &[f64],
        y: &[f64],
        starts: &[&[f64]],
        rng: &mut ChaCha8Rng,
    ) -> Result<f64> {
        let q = gaussian(self.ch_x, x)?;
        let qcov = {
            let l = &q.chol_l;
            l * l.transpose()
        };
        let dt = self.dt;
        let residual = |t: &[f64]| -> Result<(DVector<f64>, DMatrix<f64>)> {
            let (re, je) = self.effect_block(t, y)?;
            let resid = DVector::from_iterator(dt, t.iter().zip(q.mean.iter()).map(|(a, b)| a - b));
            let (rp, jp) = whiten(&qcov, resid, DMatrix::identity(dt, dt))?;
            Ok((stack(&re, &rp), vstack(&je, &jp)))
        };
        let mut best: Option<(Vec<f64>, f64, DMatrix<f64>)> = None;
        for s in starts {
            let cand = levenberg_marquardt(s, &residual)?;
            if best.as_ref().is_none_or(|b| cand.1 < b.1) {
                best = Some(cand);
            }
        }
        let (mode, _, prec) = best.expect("at least one start");
        let lap = laplace(mode, &prec)?;
        let ln_a = LAPLACE_SHARE.ln();
        let ln_b = (1.0 - LAPLACE_SHARE).ln();
        let mut lw = Vec::with_capacity(self.inner);
        for _ in 0..self.inner {
            let u: f64 = rng.random();
            let xi = draw_normal(rng, dt);
            let t = if u < LAPLACE_SHARE { lap.transform(&xi) } else { q.transform(&xi) };
            let lq = q.ln_pdf(&t);
            let lp = self.ln_effect(&t, y)?;
            let prop = log_sum_exp([ln_a + lap.ln_pdf(&t), ln_b + lq]);
            lw.push(lq + lp - prop);
        }
        Ok(log_sum_exp(lw) - (self.inner as f64).ln())
    }

    /// `ln Ê_D(y)` for a box of interventions, by joint `(x′, θ′)` importance sampling.
    fn ln_effect_distribution(&self, y: &[f64], theta_outer: &[f64], rng: &mut ChaCha8Rng) -> Result<f64> {
        let domain = self.domain.as_ref().expect("box interventions");
        let (dx, dt) = (self.dx, self.dt);
        // θ starts: best coarse nodes that are not grid neighbours, plus the sampled θ
        let mut scored: Vec<(f64, usize)> = self
            .grid
            .iter()
            .enumerate()
            .map(|(i, (_, g))| (g.ln_pdf(y), i))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut starts: Vec<Vec<f64>> = Vec::new();
        for (_, i) in &scored {
            let p = &self.grid[*i].0;
            let far = starts.iter().all(|s| {
                s.iter()
                    .zip(p)
                    .zip(&self.grid_step)
                    .any(|((a, b), h)| (a - b).abs() > 1.5 * h)
            });
            if far {
                starts.push(p.clone());
            }
            if starts.len() == MODE_STARTS {
                break;
            }
        }
        starts.push(theta_outer.to_vec());

        let box_prior: Vec<f64> = (0..dx).map(|a| 12.0 / domain.span(a).powi(2)).collect();
        let center = domain.center();
        let residual = |z: &[f64]| -> Result<(DVector<f64>, DMatrix<f64>)> {
            let (x, t) = z.split_at(dx);
            let (re, je_t) = self.effect_block(t, y)?;
            let mut je = DMatrix::zeros(re.len(), dx + dt);
            je.view_mut((0, dx), (re.len(), dt)).copy_from(&je_t);
            let qd = self.ch_x.conditional(x)?;
            let resid = DVector::from_iterator(dt, t.iter().zip(qd.mean.iter()).map(|(a, b)| a - b));
            let mut jq = DMatrix::zeros(dt, dx + dt);
            jq.view_mut((0, 0), (dt, dx)).copy_from(&(-self.ch_x.jacobian(x)));
            jq.view_mut((0, dx), (dt, dt)).fill_with_identity();
            let (rq, jq) = whiten(&qd.cov, resid, jq)?;
            let rb = DVector::from_iterator(dx, (0..dx).map(|a| box_prior[a].sqrt() * (x[a] - center[a])));
            let mut jb = DMatrix::zeros(dx, dx + dt);
            for a in 0..dx {
                jb[(a, a)] = box_prior[a].sqrt();
            }
            Ok((stack(&stack(&re, &rq), &rb), vstack(&vstack(&je, &jq), &jb)))
        };

        let mut modes: Vec<CachedGaussian> = Vec::new();
        for t0 in &starts {
            // x start: the probe intervention whose θ-mean is closest to the start
            let x0 = self
                .x_probe
                .iter()
                .min_by(|a, b| a.1.mahalanobis2(t0).total_cmp(&b.1.mahalanobis2(t0)))
                .map(|(p, _)| p.clone())
                .unwrap_or_else(|| center.clone());
            let z0: Vec<f64> = x0.iter().chain(t0.iter()).cloned().collect();
            let (z, _, prec) = levenberg_marquardt(&z0, &residual)?;
            let cand = laplace(z, &prec)?;
            let dup = modes.iter().any(|m| {
                m.mahalanobis2(cand.mean.as_slice()) < 1.0 || cand.mahalanobis2(m.mean.as_slice()) < 1.0
            });
            if !dup {
                modes.push(cand);
            }
        }

        let ln_mode = (LAPLACE_SHARE / modes.len() as f64).ln();
        let ln_def = (1.0 - LAPLACE_SHARE).ln() - self.ln_volume;
        let mut lw = Vec::with_capacity(self.inner);
        for _ in 0..self.inner {
            let u: f64 = rng.random();
            let z: Vec<f64> = if u < LAPLACE_SHARE {
                let k = ((u / LAPLACE_SHARE) * modes.len() as f64) as usize;
                let xi = draw_normal(rng, dx + dt);
                modes[k.min(modes.len() - 1)].transform(&xi)
            } else {
                let x: Vec<f64> = domain
                    .axes()
                    .iter()
                    .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect();
                let xi = draw_normal(rng, dt);
                let t = gaussian(self.ch_x, &x)?.transform(&xi);
                x.into_iter().chain(t).collect()
            };
            let (x, t) = z.split_at(dx);
            if !domain.contains(x) {
                lw.push(f64::NEG_INFINITY);
                continue;
            }
            let lq = gaussian(self.ch_x, x)?.ln_pdf(t);
            let lp = self.ln_effect(t, y)?;
            let mut parts: Vec<f64> = modes.iter().map(|m| ln_mode + m.ln_pdf(&z)).collect();
            parts.push(ln_def + lq);
            lw.push(lq + lp - self.ln_volume - log_sum_exp(parts));
        }
        Ok(log_sum_exp(lw) - (self.inner as f64).ln())
    }

    /// One outer draw: `ln P̂(y | x) − ln Ê_D(y)`.
    fn outer(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
        let x: Vec<f64> = match &self.domain {
            Some(d) => d
                .axes()
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            None => self.points[index % self.points.len()].clone(),
        };
        let xi = draw_normal(rng, self.dt);
        let theta = gaussian(self.ch_x, &x)?.transform(&xi);
        let eg = gaussian(self.ch_y, &theta)?;
        let xi = draw_normal(rng, eg.mean.len());
        let y = eg.transform(&xi);
        match &self.domain {
            Some(_) => {
                let lp = self.ln_conditional(&x, &y, &[&theta], rng)?;
                let le = self.ln_effect_distribution(&y, &theta, rng)?;
                Ok(lp - le)
            }
            None => {
                let own = index % self.points.len();
                let mut lps = Vec::with_capacity(self.points.len());
                for (k, p) in self.points.iter().enumerate() {
                    let start = self.x_probe[k].1.mean.as_slice().to_vec();
                    lps.push(self.ln_conditional(p, &y, &[&start, &theta], rng)?);
                }
                let le = log_sum_exp(lps.iter().cloned()) - (self.points.len() as f64).ln();
                Ok(lps[own] - le)
            }
        }
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).cloned())
}

fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Exact EI by nested Monte Carlo.
///
/// Outer draws `x ~ U(𝒳)`, `θ ~ q(·|x)`, `y ~ p(·|θ)`; the inner densities
/// `P(y|x)` and `E_D(y)` are importance-sampled from Laplace approximations
/// mixed with a defensive prior component. Discrete sets are enumerated
/// cyclically and share their conditional estimates with `E_D`.
pub fn ei_exact_mc(
    x_set: &InterventionSet,
    ch_xtheta: &GaussianChannel,
    ch_thetay: &GaussianChannel,
    mc: &MonteCarloSpec,
) -> Result<EIReport> {
    mc.validate()?;
    let setup = Setup::new(x_set, ch_xtheta, ch_thetay, mc.inner_samples)?;
    let b = mc.batches;
    let base = mc.outer_samples / b;
    let extra = mc.outer_samples % b;
    let starts: Vec<usize> = (0..b).map(|i| i * base + i.min(extra)).collect();
    let batches: Vec<Result<(f64, usize)>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(i as u64);
            let n = base + usize::from(i < extra);
            let mut sum = 0.0;
            for k in 0..n {
                sum += setup.outer(starts[i] + k, &mut rng)?;
            }
            Ok((sum, n))
        })
        .collect();
    let mut total = 0.0;
    let mut means = Vec::with_capacity(b);
    for r in batches {
        let (s, n) = r?;
        total += s;
        means.push(s / n as f64);
    }
    let estimate = total / mc.outer_samples as f64;
    let bm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / ((b - 1) as f64 * b as f64);
    let stderr = var.sqrt();
    if !estimate.is_finite() {
        return Err(Error::Numeric("Monte Carlo estimate is not finite".into()));
    }
    let mut report = EIReport::new(
        estimate,
        Method::MonteCarlo,
        Sampling::Samples {
            outer: mc.outer_samples,
            inner: mc.inner_samples,
            batches: b,
        },
    );
    report.stderr = Some(stderr);
    report.seed = Some(mc.seed);
    if stderr > UNRELIABLE_FRACTION * estimate.abs() {
        report.warnings.push(Warning::Unreliable {
            relative_stderr: stderr / estimate.abs(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::AffineMap;
    use std::sync::Arc;

    fn linear(sigma: f64) -> GaussianChannel {
        GaussianChannel::new(
            Arc::new(AffineMap::identity(1)),
            crate::channels::NoiseSpec::isotropic(sigma).unwrap(),
            Domain::unit(1),
            Domain::unit(1),
        )
        .unwrap()
    }

    fn small() -> MonteCarloSpec {
        MonteCarloSpec {
            outer_samples: 400,
            inner_samples: 64,
            seed: 7,
            batches: 10,
        }
    }

    #[test]
    fn single_point_is_exactly_zero() {
        let x = InterventionSet::discrete(vec![vec![0.4]]).unwrap();
        let r = ei_exact_mc(&x, &linear(0.05), &linear(0.05), &small()).unwrap();
        assert_eq!(r.nats, 0.0);
        assert_eq!(r.stderr, Some(0.0));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let x = InterventionSet::UniformBox(Domain::unit(1));
        let a = ei_exact_mc(&x, &linear(0.05), &linear(0.05), &small()).unwrap();
        let b = ei_exact_mc(&x, &linear(0.05), &linear(0.05), &small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.nats.to_bits(), b.nats.to_bits());
    }

    #[test]
    fn linear_dimmer_close_to_oracle() {
        let x = InterventionSet::UniformBox(Domain::unit(1));
        let mc = MonteCarloSpec {
            outer_samples: 4000,
            inner_samples: 64,
            seed: 1,
            batches: 20,
        };
        let r = ei_exact_mc(&x, &linear(0.03), &linear(0.03), &mc).unwrap();
        let se = r.stderr.unwrap();
        assert!((r.nats - 1.817684604880319).abs() <= 3.0 * se + 1e-3, "{} ± {se}", r.nats);
    }

    #[test]
    fn bad_spec_is_rejected() {
        let mc = MonteCarloSpec {
            batches: 1,
            ..small()
        };
        assert!(mc.validate().is_err());
    }
}
