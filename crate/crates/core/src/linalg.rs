//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Symmetrize in place: `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factorization with a single jitter retry of `1e-12 · trace / d`.
pub fn cholesky_jittered(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearAlgebra("matrix has non-finite entries".into()));
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let d = m.nrows().max(1) as f64;
    let jitter = 1e-12 * m.trace().abs() / d;
    if jitter > 0.0 {
        let mut j = m.clone();
        for i in 0..m.nrows() {
            j[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(j) {
            return Ok(c);
        }
    }
    Err(Error::LinearAlgebra(
        "matrix is not positive definite after jitter".into(),
    ))
}

/// `ln det` of a symmetric positive-definite matrix.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let c = cholesky_jittered(m)?;
    Ok(log_det_from_cholesky(&c))
}

/// `ln det` without jitter; `None` when the plain Cholesky factorization fails.
pub fn log_det_strict(m: &DMatrix<f64>) -> Option<f64> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let c = Cholesky::new(m.clone())?;
    let v = log_det_from_cholesky(&c);
    v.is_finite().then_some(v)
}

pub fn log_det_from_cholesky(c: &Cholesky<f64, Dyn>) -> f64 {
    let l = c.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// Precomputed Gaussian with cached Cholesky factor of the covariance.
#[derive(Debug, Clone)]
pub(crate) struct CachedGaussian {
    pub mean: DVector<f64>,
    pub chol_l: DMatrix<f64>,
    pub log_norm: f64,
}

impl CachedGaussian {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let c = Cholesky::new(cov.clone()).ok_or(Error::DegenerateDistribution)?;
        let d = mean.len() as f64;
        let log_norm = -0.5 * (d * LN_2PI + log_det_from_cholesky(&c));
        Ok(Self {
            mean,
            chol_l: c.l(),
            log_norm,
        })
    }

    /// Mahalanobis squared distance of `p` from the mean.
    pub fn mahalanobis2(&self, p: &[f64]) -> f64 {
        let n = self.mean.len();
        // forward substitution L z = (p - mean)
        let mut z = [0.0f64; 8];
        let mut zv;
        let z: &mut [f64] = if n <= 8 {
            &mut z[..n]
        } else {
            zv = vec![0.0; n];
            &mut zv[..]
        };
        let mut acc = 0.0;
        for i in 0..n {
            let mut s = p[i] - self.mean[i];
            for (k, zk) in z.iter().enumerate().take(i) {
                s -= self.chol_l[(i, k)] * zk;
            }
            let zi = s / self.chol_l[(i, i)];
            z[i] = zi;
            acc += zi * zi;
        }
        acc
    }

    pub fn ln_pdf(&self, p: &[f64]) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis2(p)
    }

    /// Draw `mean + L ξ` for a standard-normal `ξ`.
    pub fn transform(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.mean.len();
        (0..n)
            .map(|i| self.mean[i] + (0..=i).map(|k| self.chol_l[(i, k)] * xi[k]).sum::<f64>())
            .collect()
    }
}

/// Numerically stable `ln Σ exp(a_i)`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.into_iter().collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY || v.is_nan() {
            return;
        }
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Largest absolute asymmetry `max |M_ij - M_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert!((log_det_spd(&m).unwrap() - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(log_det_strict(&m).is_none());
        assert!(log_det_spd(&m).is_ok());
    }

    #[test]
    fn indefinite_is_an_error() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(log_det_spd(&m).is_err());
    }

    #[test]
    fn streaming_lse_matches_batch() {
        let vals = [-1000.0, -1001.5, -999.2, f64::NEG_INFINITY];
        let mut acc = LogSumExp::default();
        vals.iter().for_each(|v| acc.push(*v));
        assert!((acc.value() - log_sum_exp(vals)).abs() < 1e-12);
    }

    #[test]
    fn cached_gaussian_standard_normal() {
        let g = CachedGaussian::new(DVector::zeros(1), &DMatrix::identity(1, 1)).unwrap();
        assert!((g.ln_pdf(&[0.0]) + 0.5 * LN_2PI).abs() < 1e-15);
    }
}
