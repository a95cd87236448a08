//! Submanifold coarse-graining: pullback metrics, coarse-grained EI_g, and
//! crossover scans over error or time-step sweeps.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::Domain;
use crate::ei::{ei_geometric, EIReport, QuadratureSpec};
use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::linalg;
use crate::map::{finite_difference_jacobian, SmoothMap};

/// Embedding `σ ↦ θ(σ)` of a coarse-grained model.
#[derive(Clone)]
pub struct Submanifold {
    embed: Arc<dyn SmoothMap>,
    sigma_domain: Domain,
    label: String,
}

impl fmt::Debug for Submanifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Submanifold")
            .field("label", &self.label)
            .field("sigma_domain", &self.sigma_domain)
            .field("dims", &(self.embed.input_dim(), self.embed.output_dim()))
            .finish()
    }
}

impl Submanifold {
    pub fn new(embed: Arc<dyn SmoothMap>, sigma_domain: Domain, label: impl Into<String>) -> Result<Self> {
        if embed.input_dim() != sigma_domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma_domain.dim(),
                got: embed.input_dim(),
            });
        }
        if embed.input_dim() > embed.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: embed.output_dim(),
                got: embed.input_dim(),
            });
        }
        Ok(Self {
            embed,
            sigma_domain,
            label: label.into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sigma_domain(&self) -> &Domain {
        &self.sigma_domain
    }

    pub fn dim(&self) -> usize {
        self.embed.input_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.embed.output_dim()
    }

    pub fn embed(&self, sigma: &[f64]) -> Vec<f64> {
        self.embed.eval(sigma)
    }

    pub fn jacobian(&self, sigma: &[f64]) -> DMatrix<f64> {
        self.embed.jacobian(sigma).unwrap_or_else(|| {
            let steps: Vec<f64> = (0..self.dim())
                .map(|a| crate::channels::FD_STEP_FRACTION * self.sigma_domain.span(a))
                .collect();
            finite_difference_jacobian(self.embed.as_ref(), sigma, &steps)
        })
    }

    /// Jacobian, rejecting rank-deficient ones.
    fn full_rank_jacobian(&self, sigma: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.jacobian(sigma);
        let ev = SymmetricEigen::new(j.transpose() * &j).eigenvalues;
        let max = ev.iter().cloned().fold(0.0f64, f64::max);
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min <= 1e-12 * max {
            return Err(Error::DegenerateEmbedding(sigma.to_vec()));
        }
        Ok(j)
    }
}

/// `m̂(σ) = Jᵀ m(s(σ)) J`.
pub fn pullback(m: &dyn MetricField, sub: &Submanifold, sigma: &[f64]) -> Result<DMatrix<f64>> {
    sub.sigma_domain.check(sigma)?;
    if m.dim() != sub.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: sub.ambient_dim(),
            got: m.dim(),
        });
    }
    let j = sub.full_rank_jacobian(sigma)?;
    let mut out = j.transpose() * m.eval(&sub.embed(sigma))? * j;
    linalg::symmetrize(&mut out);
    Ok(out)
}

/// A metric field on a submanifold induced by one on the ambient space.
#[derive(Clone)]
pub struct PullbackMetric {
    inner: Arc<dyn MetricField>,
    sub: Submanifold,
}

impl PullbackMetric {
    pub fn new(inner: Arc<dyn MetricField>, sub: Submanifold) -> Self {
        Self { inner, sub }
    }
}

impl MetricField for PullbackMetric {
    fn dim(&self) -> usize {
        self.sub.dim()
    }
    fn eval(&self, sigma: &[f64]) -> Result<DMatrix<f64>> {
        pullback(self.inner.as_ref(), &self.sub, sigma)
    }
}

/// EI_g of the coarse-grained model living on `sub`.
pub fn coarse_grained_ei(
    g: Arc<dyn MetricField>,
    h: Arc<dyn MetricField>,
    sub: &Submanifold,
    grid: &QuadratureSpec,
) -> Result<EIReport> {
    let gp = PullbackMetric::new(g, sub.clone());
    let hp = PullbackMetric::new(h, sub.clone());
    ei_geometric(&gp, &hp, sub.sigma_domain(), grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Epsilon,
    Delta,
    /// `δ = ε` varied together.
    Both,
    DeltaT,
    /// Any other model parameter (e.g. a profile family index).
    Parameter,
    /// A scalar parameter point, for metric queries.
    Theta,
}

impl SweepVariable {
    pub fn column(&self) -> &'static str {
        match self {
            Self::Epsilon => "epsilon",
            Self::Delta => "delta",
            Self::Both => "delta",
            Self::DeltaT => "delta_t",
            Self::Parameter => "a",
            Self::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default)]
    pub log_spaced: bool,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.steps < 2 {
            return Err(Error::InvalidConfig(format!("sweep needs at least 2 steps, got {}", self.steps)));
        }
        if !(self.from.is_finite() && self.to.is_finite()) || self.from == self.to {
            return Err(Error::InvalidConfig("sweep bounds must be finite and distinct".into()));
        }
        if self.log_spaced && !(self.from > 0.0 && self.to > 0.0) {
            return Err(Error::InvalidConfig("log-spaced sweeps need positive bounds".into()));
        }
        let n = self.steps - 1;
        Ok((0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                if i == n {
                    self.to
                } else if self.log_spaced {
                    self.from * (self.to / self.from).powf(t)
                } else {
                    self.from + (self.to - self.from) * t
                }
            })
            .collect())
    }

    fn midpoint(&self, a: f64, b: f64) -> f64 {
        if self.log_spaced {
            (a * b).sqrt()
        } else {
            0.5 * (a + b)
        }
    }

    fn coord(&self, v: f64) -> f64 {
        if self.log_spaced {
            v.ln()
        } else {
            v
        }
    }

    fn uncoord(&self, c: f64) -> f64 {
        if self.log_spaced {
            c.exp()
        } else {
            c
        }
    }
}

type CurveFn = dyn Fn(f64) -> Result<EIReport> + Send + Sync;

/// One labelled EI curve as a function of the sweep value.
#[derive(Clone)]
pub struct SweepModel {
    pub label: String,
    eval: Arc<CurveFn>,
}

impl SweepModel {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> Result<EIReport> + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, v: f64) -> Result<EIReport> {
        (self.eval)(v)
    }
}

impl fmt::Debug for SweepModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SweepModel({})", self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub labels: (String, String),
    pub location: f64,
    pub bracket: (f64, f64),
    /// Sign of `EI_first − EI_second` just above the crossing.
    pub first_wins_above: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvalidPoint {
    pub index: usize,
    pub value: f64,
    pub label: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverScan {
    pub sweep_variable: SweepVariable,
    pub sweep_grid: Vec<f64>,
    pub models: Vec<(String, Vec<Option<EIReport>>)>,
    pub crossings: Vec<Crossing>,
    /// Per grid point, the label with the largest EI among valid models.
    pub argmax: Vec<Option<String>>,
    pub invalid: Vec<InvalidPoint>,
}

impl CrossoverScan {
    pub fn curve(&self, label: &str) -> Option<Vec<Option<f64>>> {
        self.models
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, r)| r.iter().map(|r| r.as_ref().map(|r| r.nats)).collect())
    }

    pub fn crossings_between(&self, a: &str, b: &str) -> Vec<&Crossing> {
        self.crossings
            .iter()
            .filter(|c| (c.labels.0 == a && c.labels.1 == b) || (c.labels.0 == b && c.labels.1 == a))
            .collect()
    }

    /// Argmax labels with consecutive repeats collapsed.
    pub fn regimes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in self.argmax.iter().flatten() {
            if out.last() != Some(l) {
                out.push(l.clone());
            }
        }
        out
    }
}

const REFINE_REL_WIDTH: f64 = 1e-3;
const REFINE_MAX_ITERS: usize = 20;

fn difference(a: &EIReport, b: &EIReport) -> Option<f64> {
    let d = a.nats - b.nats;
    (!d.is_nan()).then_some(d)
}

/// Scan every pair of curves for sign changes of their EI difference.
pub fn crossover_scan(models: &[SweepModel], sweep: &SweepSpec) -> Result<CrossoverScan> {
    if models.len() < 2 {
        return Err(Error::InvalidConfig("a crossover scan needs at least two models".into()));
    }
    let grid = sweep.grid()?;
    if grid.len() < 8 {
        return Err(Error::InvalidConfig("a crossover scan needs at least 8 sweep points".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|m| (0..grid.len()).map(move |i| (m, i)))
        .collect();
    let results: Vec<Result<EIReport>> = jobs.par_iter().map(|&(m, i)| models[m].eval(grid[i])).collect();
    let mut curves: Vec<Vec<Option<EIReport>>> = vec![vec![None; grid.len()]; models.len()];
    let mut invalid = Vec::new();
    for (&(m, i), r) in jobs.iter().zip(results) {
        match r {
            Ok(rep) if !rep.nats.is_nan() => curves[m][i] = Some(rep),
            Ok(rep) => invalid.push(InvalidPoint {
                index: i,
                value: grid[i],
                label: models[m].label.clone(),
                error: format!("EI is NaN ({rep:?})"),
            }),
            Err(e) => {
                log::warn!("{} failed at {}={}: {e}", models[m].label, sweep.variable.column(), grid[i]);
                invalid.push(InvalidPoint {
                    index: i,
                    value: grid[i],
                    label: models[m].label.clone(),
                    error: e.to_string(),
                })
            }
        }
    }

    let mut brackets = Vec::new();
    for a in 0..models.len() {
        for b in (a + 1)..models.len() {
            let valid: Vec<(usize, f64)> = (0..grid.len())
                .filter_map(|i| match (&curves[a][i], &curves[b][i]) {
                    (Some(ra), Some(rb)) => difference(ra, rb).map(|d| (i, d)),
                    _ => None,
                })
                .collect();
            for w in valid.windows(2) {
                let ((i, di), (j, dj)) = (w[0], w[1]);
                if di == 0.0 || (di > 0.0) != (dj > 0.0) && dj != 0.0 {
                    brackets.push((a, b, grid[i], di, grid[j], dj));
                }
            }
        }
    }
    let crossings: Vec<Crossing> = brackets
        .par_iter()
        .map(|&(a, b, lo, dlo, hi, dhi)| refine(&models[a], &models[b], sweep, lo, dlo, hi, dhi))
        .collect();

    let argmax = (0..grid.len())
        .map(|i| {
            let mut best: Option<(usize, f64)> = None;
            for (m, c) in curves.iter().enumerate() {
                if let Some(r) = &c[i] {
                    if best.is_none_or(|(_, v)| r.nats > v) {
                        best = Some((m, r.nats));
                    }
                }
            }
            best.map(|(m, _)| models[m].label.clone())
        })
        .collect();

    Ok(CrossoverScan {
        sweep_variable: sweep.variable,
        sweep_grid: grid,
        models: models.iter().map(|m| m.label.clone()).zip(curves).collect(),
        crossings,
        argmax,
        invalid,
    })
}

/// Bisection with real evaluations, then linear interpolation inside the final bracket.
fn refine(a: &SweepModel, b: &SweepModel, sweep: &SweepSpec, mut lo: f64, mut dlo: f64, mut hi: f64, mut dhi: f64) -> Crossing {
    let (lo0, hi0) = (lo, hi);
    let up = dhi > 0.0 || (dhi == 0.0 && dlo < 0.0);
    for _ in 0..REFINE_MAX_ITERS {
        if (hi - lo).abs() <= REFINE_REL_WIDTH * lo.abs().max(hi.abs()) || dlo == 0.0 {
            break;
        }
        let mid = sweep.midpoint(lo, hi);
        let d = match (a.eval(mid), b.eval(mid)) {
            (Ok(ra), Ok(rb)) => difference(&ra, &rb),
            _ => None,
        };
        let Some(d) = d else { break };
        if d == 0.0 {
            lo = mid;
            hi = mid;
            dlo = 0.0;
            dhi = 0.0;
            break;
        }
        if (d > 0.0) == (dlo > 0.0) {
            lo = mid;
            dlo = d;
        } else {
            hi = mid;
            dhi = d;
        }
    }
    let location = if dlo == 0.0 {
        lo
    } else if dlo.is_finite() && dhi.is_finite() && dlo != dhi {
        let (cl, ch) = (sweep.coord(lo), sweep.coord(hi));
        sweep.uncoord(cl + (ch - cl) * dlo / (dlo - dhi))
    } else {
        sweep.midpoint(lo, hi)
    };
    Crossing {
        labels: (a.label.clone(), b.label.clone()),
        location,
        bracket: (lo0, hi0),
        first_wins_above: up,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConstantMetric, FnMetric};
    use crate::map::{AffineMap, FnMap};

    fn diagonal() -> Submanifold {
        Submanifold::new(
            Arc::new(FnMap::new(1, 2, |s| vec![s[0], s[0]])),
            Domain::unit(1),
            "A",
        )
        .unwrap()
    }

    fn anti() -> Submanifold {
        Submanifold::new(
            Arc::new(FnMap::new(1, 2, |s| vec![s[0], 1.0 - s[0]])),
            Domain::unit(1),
            "B",
        )
        .unwrap()
    }

    fn sample_metric() -> FnMetric {
        FnMetric::new(2, |t| {
            Ok(DMatrix::from_row_slice(2, 2, &[2.0 + t[0], 0.3 * t[1], 0.3 * t[1], 1.0 + t[0] * t[1]]))
        })
    }

    #[test]
    fn pullback_formulas() {
        let m = sample_metric();
        let s = 0.3;
        let g = m.eval(&[s, s]).unwrap();
        let a = pullback(&m, &diagonal(), &[s]).unwrap()[(0, 0)];
        assert!((a - (g[(0, 0)] + 2.0 * g[(0, 1)] + g[(1, 1)])).abs() < 1e-8);
        let g = m.eval(&[s, 1.0 - s]).unwrap();
        let b = pullback(&m, &anti(), &[s]).unwrap()[(0, 0)];
        assert!((b - (g[(0, 0)] - 2.0 * g[(0, 1)] + g[(1, 1)])).abs() < 1e-8);
    }

    #[test]
    fn identity_embedding_is_a_no_op() {
        let id = Submanifold::new(Arc::new(AffineMap::identity(2)), Domain::unit(2), "id").unwrap();
        let m = sample_metric();
        let p = pullback(&m, &id, &[0.2, 0.9]).unwrap();
        assert_eq!(p, m.eval(&[0.2, 0.9]).unwrap());
    }

    #[test]
    fn degenerate_embedding_is_rejected() {
        let flat = Submanifold::new(Arc::new(FnMap::new(1, 2, |s| vec![s[0] * s[0], 0.0])), Domain::unit(1), "f").unwrap();
        assert!(matches!(
            pullback(&sample_metric(), &flat, &[0.0]),
            Err(Error::DegenerateEmbedding(_))
        ));
    }

    #[test]
    fn self_embedding_reproduces_geometric_ei() {
        let c = DMatrix::from_element(1, 1, 900.0);
        let g: Arc<dyn MetricField> = Arc::new(ConstantMetric(c.clone()));
        let h: Arc<dyn MetricField> = Arc::new(ConstantMetric(c));
        let id = Submanifold::new(Arc::new(AffineMap::identity(1)), Domain::unit(1), "id").unwrap();
        let grid = QuadratureSpec::geometric();
        let a = coarse_grained_ei(g.clone(), h.clone(), &id, &grid).unwrap();
        let b = ei_geometric(g.as_ref(), h.as_ref(), &Domain::unit(1), &grid).unwrap();
        assert_eq!(a.nats, b.nats);
    }

    #[test]
    fn scan_finds_a_refined_crossing() {
        let sweep = SweepSpec {
            variable: SweepVariable::Epsilon,
            from: 1e-3,
            to: 1.0,
            steps: 10,
            log_spaced: true,
        };
        let flat = SweepModel::new("flat", |_| Ok(EIReport::new(1.0, crate::ei::Method::Geometric, crate::ei::Sampling::Adaptive { panels: 0 })));
        let falling = SweepModel::new("falling", |e: f64| {
            Ok(EIReport::new(-e.ln() - 2.0, crate::ei::Method::Geometric, crate::ei::Sampling::Adaptive { panels: 0 }))
        });
        let scan = crossover_scan(&[flat, falling], &sweep).unwrap();
        assert_eq!(scan.crossings.len(), 1);
        let want = (-3.0f64).exp();
        assert!((scan.crossings[0].location / want - 1.0).abs() < 1e-3);
        assert_eq!(scan.regimes(), vec!["falling".to_string(), "flat".to_string()]);
    }

    #[test]
    fn failing_points_are_marked_invalid() {
        let sweep = SweepSpec {
            variable: SweepVariable::DeltaT,
            from: 0.0,
            to: 1.0,
            steps: 8,
            log_spaced: false,
        };
        let ok = SweepModel::new("ok", |_| Ok(EIReport::new(0.0, crate::ei::Method::Geometric, crate::ei::Sampling::Adaptive { panels: 0 })));
        let bad = SweepModel::new("bad", |v: f64| {
            if v > 0.5 {
                Err(Error::Numeric("boom".into()))
            } else {
                Ok(EIReport::new(1.0, crate::ei::Method::Geometric, crate::ei::Sampling::Adaptive { panels: 0 }))
            }
        });
        let scan = crossover_scan(&[ok, bad], &sweep).unwrap();
        assert_eq!(scan.invalid.len(), 4);
        assert!(scan.crossings.is_empty());
        assert_eq!(scan.argmax[7].as_deref(), Some("ok"));
    }
}
