//! Exact EI by nested tensor quadrature.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{EIReport, Method, Sampling, Warning};
use crate::channels::{GaussianChannel, InterventionSet};
use crate::error::{Error, Result};
use crate::geometry::{effect_metric, MetricField};
use crate::linalg::{CachedGaussian, LogSumExp};
use crate::quadrature::{tensor_points, Rule1D};

/// Reference resolution; grid spacings scale by `REFERENCE_NODES / nodes_per_axis`.
const REFERENCE_NODES: f64 = 201.0;
/// Mixture weights below `max · e^{-46}` are dropped.
const WEIGHT_CUT: f64 = 46.0;
/// Components farther than this many σ from a y node are skipped.
const COMPONENT_CUT: f64 = 12.0;
const NONNEGATIVE_SLACK: f64 = -1e-6;
const CONVERGENCE_TOL: f64 = 1e-3;
const MAX_DIMS: usize = 4;
/// Switch to locally adaptive y cells when component widths differ by more than this factor.
const VARYING_SD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes_per_axis: usize,
    pub rule: Rule,
    pub effect_tail_sigmas: f64,
    /// Recompute with doubled nodes and warn on a change above 1e-3 nats.
    pub convergence_check: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_axis: 201,
            rule: Rule::Trapezoid,
            effect_tail_sigmas: 8.0,
            convergence_check: true,
        }
    }
}

impl QuadratureSpec {
    /// Default grid for metric-field integrals (101 midpoints per axis).
    pub fn geometric() -> Self {
        Self {
            nodes_per_axis: 101,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 21 {
            return Err(Error::InvalidConfig(format!(
                "nodes_per_axis must be at least 21, got {}",
                self.nodes_per_axis
            )));
        }
        if !(self.effect_tail_sigmas >= 4.0) {
            return Err(Error::InvalidConfig(format!(
                "effect_tail_sigmas must be at least 4, got {}",
                self.effect_tail_sigmas
            )));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        REFERENCE_NODES / self.nodes_per_axis as f64
    }

    fn rule(&self, lo: f64, hi: f64, n: usize) -> Rule1D {
        match self.rule {
            Rule::Trapezoid => Rule1D::trapezoid(lo, hi, n),
            Rule::GaussLegendre => Rule1D::gauss_legendre(lo, hi, n),
        }
    }
}

/// `x → θ → y` with θ marginalized.
#[derive(Debug, Clone)]
pub struct ComposedChannel {
    pub intervention: GaussianChannel,
    pub effect: GaussianChannel,
}

pub fn compose(intervention: &GaussianChannel, effect: &GaussianChannel) -> Result<ComposedChannel> {
    if intervention.output_dim() != effect.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: effect.input_dim(),
            got: intervention.output_dim(),
        });
    }
    Ok(ComposedChannel {
        intervention: intervention.clone(),
        effect: effect.clone(),
    })
}

/// Effect Gaussians `p(y | θ_j)` at the θ nodes.
struct Components {
    dy: usize,
    gauss: Vec<CachedGaussian>,
    /// Per-axis standard deviations.
    sd: Vec<Vec<f64>>,
    /// 1D only: component indices sorted by mean, and those means.
    order: Vec<usize>,
    sorted_means: Vec<f64>,
    max_sd: f64,
}

impl Components {
    fn new(effect: &GaussianChannel, thetas: &[Vec<f64>]) -> Result<Self> {
        let dy = effect.output_dim();
        let built: Vec<Result<(CachedGaussian, Vec<f64>)>> = thetas
            .par_iter()
            .map(|t| {
                let d = effect.conditional(t)?;
                let sd = (0..dy).map(|a| d.cov[(a, a)].sqrt()).collect();
                Ok((CachedGaussian::new(d.mean, &d.cov)?, sd))
            })
            .collect();
        let mut gauss = Vec::with_capacity(thetas.len());
        let mut sd = Vec::with_capacity(thetas.len());
        for b in built {
            let (g, s) = b?;
            gauss.push(g);
            sd.push(s);
        }
        let max_sd = sd.iter().flatten().cloned().fold(0.0, f64::max);
        let (order, sorted_means) = if dy == 1 {
            let mut order: Vec<usize> = (0..gauss.len()).collect();
            order.sort_by(|&a, &b| gauss[a].mean[0].total_cmp(&gauss[b].mean[0]));
            let m = order.iter().map(|&j| gauss[j].mean[0]).collect();
            (order, m)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            dy,
            gauss,
            sd,
            order,
            sorted_means,
            max_sd,
        })
    }

    /// `ln Σ_j exp(lw_j) N(y; μ_j, Σ_j)` over a dense log-weight vector.
    fn ln_mixture(&self, lw: &[f64], y: &[f64]) -> f64 {
        let mut acc = LogSumExp::default();
        if self.dy == 1 {
            let cut = COMPONENT_CUT * self.max_sd;
            let lo = self.sorted_means.partition_point(|m| *m < y[0] - cut);
            let hi = self.sorted_means.partition_point(|m| *m <= y[0] + cut);
            for &j in &self.order[lo..hi] {
                if lw[j] > f64::NEG_INFINITY {
                    acc.push(lw[j] + self.gauss[j].ln_pdf(y));
                }
            }
        } else {
            for (j, g) in self.gauss.iter().enumerate() {
                if lw[j] > f64::NEG_INFINITY {
                    acc.push(lw[j] + g.ln_pdf(y));
                }
            }
        }
        acc.value()
    }
}

/// Sparse normalized log-weights `ln w_ij` of θ nodes for one intervention.
type SparseWeights = Vec<(usize, f64)>;

struct Discretization {
    x_weights: Vec<f64>,
    theta_weights: Vec<SparseWeights>,
    components: Components,
    /// `ln W_j = ln Σ_i ω_i w_ij`.
    effect_log_weights: Vec<f64>,
    x_nodes: usize,
    theta_nodes: usize,
}

fn x_rules(domain: &crate::channels::Domain, ch: &GaussianChannel, spec: &QuadratureSpec) -> Result<Vec<Rule1D>> {
    // resolution of each x axis: 1/√(Jᵀ Σ⁻¹ J)_aa, minimized over probe points
    let probe: Vec<Rule1D> = domain
        .axes()
        .iter()
        .map(|&(lo, hi)| Rule1D::midpoint(lo, hi, 9))
        .collect();
    let g = effect_metric(ch);
    let mut res = vec![f64::INFINITY; domain.dim()];
    for (p, _) in tensor_points(&probe) {
        let m = g.eval(&p)?;
        for (a, r) in res.iter_mut().enumerate() {
            if m[(a, a)] > 0.0 {
                *r = r.min(1.0 / m[(a, a)].sqrt());
            }
        }
    }
    Ok(domain
        .axes()
        .iter()
        .zip(&res)
        .map(|(&(lo, hi), r)| {
            let h = spec.scale() * 0.5 * r;
            let n = if h.is_finite() {
                spec.nodes_per_axis.max(((hi - lo) / h).ceil() as usize + 1)
            } else {
                spec.nodes_per_axis
            };
            spec.rule(lo, hi, n)
        })
        .collect())
}

fn merge_intervals(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Cells `(center, width)` marched across `[lo, hi]` with a local step.
fn march(lo: f64, hi: f64, step: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let mut cells = Vec::new();
    let mut e = lo;
    while e < hi {
        let mut w = step(e).min(hi - e);
        if hi - (e + w) < 0.25 * w {
            w = hi - e;
        }
        cells.push((e + 0.5 * w, w));
        e += w;
    }
    cells
}

fn discretize(x_set: &InterventionSet, comp: &ComposedChannel, spec: &QuadratureSpec) -> Result<Discretization> {
    let ch_x = &comp.intervention;
    let ch_y = &comp.effect;
    let tail = spec.effect_tail_sigmas;
    let scale = spec.scale();

    let (x_points, x_weights): (Vec<Vec<f64>>, Vec<f64>) = match x_set {
        InterventionSet::UniformBox(domain) => {
            if domain.dim() != ch_x.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: ch_x.input_dim(),
                    got: domain.dim(),
                });
            }
            let vol = domain.volume();
            tensor_points(&x_rules(domain, ch_x, spec)?)
                .into_iter()
                .map(|(p, w)| (p, w / vol))
                .unzip()
        }
        InterventionSet::Discrete(points) => {
            if points[0].len() != ch_x.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: ch_x.input_dim(),
                    got: points[0].len(),
                });
            }
            let k = points.len() as f64;
            (points.clone(), vec![1.0 / k; points.len()])
        }
    };

    // q(θ | x_i) for every x node
    let dt = ch_x.output_dim();
    let q: Vec<CachedGaussian> = x_points
        .par_iter()
        .map(|x| {
            let d = ch_x.conditional(x)?;
            CachedGaussian::new(d.mean, &d.cov)
        })
        .collect::<Result<_>>()?;
    let q_sd: Vec<Vec<f64>> = q
        .iter()
        .map(|g| {
            (0..dt)
                .map(|a| (0..=a).map(|k| g.chol_l[(a, k)].powi(2)).sum::<f64>().sqrt())
                .collect()
        })
        .collect();
    let min_sd: Vec<f64> = (0..dt)
        .map(|a| q_sd.iter().map(|s| s[a]).fold(f64::INFINITY, f64::min))
        .collect();
    let reach = tail + 4.0;

    // θ grid: per-axis cell lists
    let g = effect_metric(ch_y);
    let axes: Vec<Vec<(f64, f64)>> = if dt == 1 {
        let iv = merge_intervals(
            q.iter()
                .zip(&q_sd)
                .map(|(g, s)| (g.mean[0] - reach * s[0], g.mean[0] + reach * s[0]))
                .collect(),
        );
        let step = |t: f64| {
            let gt = g.eval(&[t]).map(|m| m[(0, 0)]).unwrap_or(0.0);
            let eff = if gt > 0.0 { 1.0 / gt.sqrt() } else { f64::INFINITY };
            scale * 0.5 * min_sd[0].min(eff)
        };
        vec![iv.into_iter().flat_map(|(lo, hi)| march(lo, hi, step)).collect()]
    } else {
        let hull: Vec<(f64, f64)> = (0..dt)
            .map(|a| {
                q.iter().zip(&q_sd).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (g, s)| {
                    (lo.min(g.mean[a] - reach * s[a]), hi.max(g.mean[a] + reach * s[a]))
                })
            })
            .collect();
        let probe: Vec<Rule1D> = hull.iter().map(|&(lo, hi)| Rule1D::midpoint(lo, hi, 17)).collect();
        let mut res = min_sd.clone();
        for (p, _) in tensor_points(&probe) {
            let m = g.eval(&p)?;
            for (a, r) in res.iter_mut().enumerate() {
                if m[(a, a)] > 0.0 {
                    *r = r.min(1.0 / m[(a, a)].sqrt());
                }
            }
        }
        hull.iter()
            .zip(&res)
            .map(|(&(lo, hi), r)| {
                let h = scale * 0.5 * r;
                march(lo, hi, |_| h)
            })
            .collect()
    };
    let rules: Vec<Rule1D> = axes
        .iter()
        .map(|cells| Rule1D {
            nodes: cells.iter().map(|c| c.0).collect(),
            weights: cells.iter().map(|c| c.1).collect(),
        })
        .collect();
    let theta_cells = tensor_points(&rules);
    let thetas: Vec<Vec<f64>> = theta_cells.iter().map(|(p, _)| p.clone()).collect();
    let strides: Vec<usize> = (0..dt)
        .map(|a| axes[a + 1..].iter().map(|c| c.len()).product())
        .collect();

    // w_ij ∝ q(θ_j | x_i) vol_j, restricted to a box around each mean
    let theta_weights: Vec<SparseWeights> = q
        .par_iter()
        .zip(&q_sd)
        .map(|(qi, sdi)| {
            let ranges: Vec<(usize, usize)> = (0..dt)
                .map(|a| {
                    let nodes = &rules[a].nodes;
                    let lo = nodes.partition_point(|t| *t < qi.mean[a] - reach * sdi[a]);
                    let hi = nodes.partition_point(|t| *t <= qi.mean[a] + reach * sdi[a]);
                    (lo, hi)
                })
                .collect();
            let mut out = Vec::new();
            if ranges.iter().any(|(lo, hi)| lo >= hi) {
                return out;
            }
            for_each_index(&ranges, |idx| {
                let j: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                let (p, vol) = &theta_cells[j];
                out.push((j, qi.ln_pdf(p) + vol.ln()));
            });
            let mut lse = LogSumExp::default();
            out.iter().for_each(|(_, v)| lse.push(*v));
            let norm = lse.value();
            let max = out.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
            out.retain(|(_, v)| *v >= max - WEIGHT_CUT);
            out.iter_mut().for_each(|(_, v)| *v -= norm);
            out
        })
        .collect();
    if let Some(i) = theta_weights.iter().position(|w| w.is_empty()) {
        return Err(Error::DegenerateModel {
            node: x_points[i].clone(),
            reason: "intervention distribution misses the θ grid".into(),
        });
    }

    let mut acc = vec![LogSumExp::default(); thetas.len()];
    for (wi, tw) in x_weights.iter().zip(&theta_weights) {
        let lo = wi.ln();
        for &(j, v) in tw {
            acc[j].push(lo + v);
        }
    }
    let effect_log_weights: Vec<f64> = acc.iter().map(|a| a.value()).collect();
    let used: Vec<bool> = effect_log_weights.iter().map(|v| *v > f64::NEG_INFINITY).collect();
    // components are only needed where some weight is non-zero
    let comp_thetas: Vec<Vec<f64>> = thetas
        .iter()
        .zip(&used)
        .map(|(t, u)| if *u { t.clone() } else { thetas[0].clone() })
        .collect();
    let mut components = Components::new(ch_y, &comp_thetas)?;
    if components.dy == 1 {
        // drop unused placeholders from the search order
        let keep: Vec<usize> = components.order.iter().cloned().filter(|&j| used[j]).collect();
        components.sorted_means = keep.iter().map(|&j| components.gauss[j].mean[0]).collect();
        components.order = keep;
    }
    components.max_sd = components
        .sd
        .iter()
        .zip(&used)
        .filter(|(_, u)| **u)
        .flat_map(|(s, _)| s.iter().cloned())
        .fold(0.0, f64::max);

    Ok(Discretization {
        x_nodes: x_points.len(),
        theta_nodes: thetas.len(),
        x_weights,
        theta_weights,
        components,
        effect_log_weights,
    })
}

/// Visit every multi-index in the product of half-open ranges, last axis fastest.
fn for_each_index(ranges: &[(usize, usize)], mut f: impl FnMut(&[usize])) {
    if ranges.iter().any(|(lo, hi)| lo >= hi) {
        return;
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&idx);
        let mut a = ranges.len();
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < ranges[a].1 {
                break;
            }
            idx[a] = ranges[a].0;
        }
    }
}

fn dense(n: usize, sparse: &SparseWeights) -> Vec<f64> {
    let mut v = vec![f64::NEG_INFINITY; n];
    for &(j, w) in sparse {
        v[j] = w;
    }
    v
}

/// y window (per axis) covering the components in `weights`.
fn y_window(c: &Components, weights: &[(usize, f64)], tail: f64) -> Vec<(f64, f64, f64)> {
    (0..c.dy)
        .map(|a| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut sd = f64::INFINITY;
            for &(j, _) in weights {
                let m = c.gauss[j].mean[a];
                let s = c.sd[j][a];
                lo = lo.min(m - tail * s);
                hi = hi.max(m + tail * s);
                sd = sd.min(s);
            }
            (lo, hi, sd)
        })
        .collect()
}

fn y_rules(window: &[(f64, f64, f64)], spec: &QuadratureSpec) -> Vec<Rule1D> {
    window
        .iter()
        .map(|&(lo, hi, sd)| {
            let h = spec.scale() * 0.5 * sd;
            let n = (((hi - lo) / h).ceil() as usize + 1).max(41);
            spec.rule(lo, hi, n)
        })
        .collect()
}

fn max_sd(c: &Components, weights: &[(usize, f64)]) -> f64 {
    weights.iter().map(|&(j, _)| c.sd[j][0]).fold(0.0, f64::max)
}

/// Midpoint cells whose width follows the narrowest component covering each point.
fn y_cells_1d(c: &Components, weights: &[(usize, f64)], spec: &QuadratureSpec) -> Rule1D {
    let tail = spec.effect_tail_sigmas;
    let mut events: Vec<(f64, bool, u64)> = Vec::with_capacity(2 * weights.len());
    for &(j, _) in weights {
        let (m, s) = (c.gauss[j].mean[0], c.sd[j][0]);
        events.push((m - tail * s, true, s.to_bits()));
        events.push((m + tail * s, false, s.to_bits()));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut active: BTreeMap<u64, usize> = BTreeMap::new();
    let mut segments: Vec<(f64, f64, f64)> = Vec::new();
    let mut prev = events[0].0;
    for (y, open, key) in events {
        if y > prev {
            if let Some((&k, _)) = active.iter().next() {
                segments.push((prev, y, f64::from_bits(k)));
            }
        }
        prev = y;
        if open {
            *active.entry(key).or_default() += 1;
        } else if let Some(n) = active.get_mut(&key) {
            *n -= 1;
            if *n == 0 {
                active.remove(&key);
            }
        }
    }
    let (lo, hi) = (segments[0].0, segments[segments.len() - 1].1);
    let scale = spec.scale();
    let cells = march(lo, hi, |y| {
        let i = segments.partition_point(|s| s.1 <= y).min(segments.len() - 1);
        let sd = if segments[i].0 <= y { segments[i].2 } else { (hi - lo) / 40.0 };
        (scale * 0.5 * sd).min((hi - lo) / 40.0)
    });
    Rule1D {
        nodes: cells.iter().map(|c| c.0).collect(),
        weights: cells.iter().map(|c| c.1).collect(),
    }
}

struct ExactResult {
    nats: f64,
    sampling: Sampling,
}

fn exact_once(x_set: &InterventionSet, comp: &ComposedChannel, spec: &QuadratureSpec) -> Result<ExactResult> {
    let disc = discretize(x_set, comp, spec)?;
    let n = disc.theta_nodes;
    let c = &disc.components;
    let per_x: Vec<(f64, usize)> = disc
        .theta_weights
        .par_iter()
        .map(|tw| {
            let lw = dense(n, tw);
            let window = y_window(c, tw, spec.effect_tail_sigmas);
            let rules = match c.dy {
                1 if window[0].2 * VARYING_SD < max_sd(c, tw) => vec![y_cells_1d(c, tw, spec)],
                _ => y_rules(&window, spec),
            };
            let ny = rules.iter().map(|r| r.len()).product();
            let mut kl = 0.0;
            for (y, v) in tensor_points(&rules) {
                let lp = c.ln_mixture(&lw, &y);
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let le = c.ln_mixture(&disc.effect_log_weights, &y);
                kl += v * lp.exp() * (lp - le);
            }
            (kl, ny)
        })
        .collect();
    let mut total = 0.0;
    let mut max_y = 0;
    for (w, (kl, ny)) in disc.x_weights.iter().zip(&per_x) {
        total += w * kl;
        max_y = max_y.max(*ny);
    }
    Ok(ExactResult {
        nats: total,
        sampling: Sampling::Grid {
            nodes_per_axis: spec.nodes_per_axis,
            x_nodes: disc.x_nodes,
            theta_nodes: disc.theta_nodes,
            max_y_nodes: max_y,
        },
    })
}

fn check_dims(x_set: &InterventionSet, comp: &ComposedChannel) -> Result<()> {
    let dims = x_set.dim() + comp.effect.output_dim();
    if dims > MAX_DIMS {
        return Err(Error::UseMonteCarlo { dims });
    }
    Ok(())
}

/// Exact EI `⟨D_KL[P(y | do(x)) ‖ E_D(y)]⟩_x` by nested quadrature.
///
/// θ is marginalized on a grid resolving both the intervention and effect
/// noise; y is integrated over a window of `effect_tail_sigmas` around every
/// contributing component.
pub fn ei_exact_quadrature(
    x_set: &InterventionSet,
    ch_xtheta: &GaussianChannel,
    ch_thetay: &GaussianChannel,
    spec: &QuadratureSpec,
) -> Result<EIReport> {
    spec.validate()?;
    let comp = compose(ch_xtheta, ch_thetay)?;
    check_dims(x_set, &comp)?;
    let base = exact_once(x_set, &comp, spec)?;
    let mut report = EIReport::new(base.nats, Method::Quadrature, base.sampling);
    if spec.convergence_check {
        let fine = QuadratureSpec {
            nodes_per_axis: 2 * spec.nodes_per_axis,
            ..spec.clone()
        };
        let refined = exact_once(x_set, &comp, &fine)?;
        let change = (refined.nats - base.nats).abs();
        if !(change <= CONVERGENCE_TOL) {
            log::warn!("quadrature EI changed by {change:e} nats under grid doubling");
            report.warnings.push(Warning::NotConverged { change });
        }
    }
    if report.nats < NONNEGATIVE_SLACK {
        report.warnings.push(Warning::NegativeExact { value: report.nats });
    }
    Ok(report)
}

/// The effect distribution `E_D(y) = ⟨P(y | do(x))⟩_x` as a Gaussian mixture.
#[derive(Clone)]
pub struct DensityEstimate {
    components: std::sync::Arc<Components>,
    log_weights: Vec<f64>,
    window: Vec<(f64, f64)>,
    spec: QuadratureSpec,
}

impl std::fmt::Debug for DensityEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityEstimate")
            .field("components", &self.components.gauss.len())
            .field("window", &self.window)
            .finish()
    }
}

impl DensityEstimate {
    pub fn ln_density(&self, y: &[f64]) -> f64 {
        self.components.ln_mixture(&self.log_weights, y)
    }

    pub fn density(&self, y: &[f64]) -> f64 {
        self.ln_density(y).exp()
    }

    /// Evaluation window: every component's mean ± tail σ.
    pub fn window(&self) -> &[(f64, f64)] {
        &self.window
    }

    pub fn component_count(&self) -> usize {
        self.log_weights.iter().filter(|w| **w > f64::NEG_INFINITY).count()
    }

    /// `∫ E_D` over the window.
    pub fn normalization(&self) -> f64 {
        let c = &self.components;
        let active: Vec<(usize, f64)> = self
            .log_weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > f64::NEG_INFINITY)
            .map(|(j, w)| (j, *w))
            .collect();
        let rules = y_rules(&y_window(c, &active, self.spec.effect_tail_sigmas), &self.spec);
        tensor_points(&rules)
            .par_iter()
            .map(|(y, v)| v * self.density(y))
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }
}

pub fn effect_distribution(
    x_set: &InterventionSet,
    comp: &ComposedChannel,
    spec: &QuadratureSpec,
) -> Result<DensityEstimate> {
    spec.validate()?;
    let disc = discretize(x_set, comp, spec)?;
    let active: Vec<(usize, f64)> = disc
        .effect_log_weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > f64::NEG_INFINITY)
        .map(|(j, w)| (j, *w))
        .collect();
    let window = y_window(&disc.components, &active, spec.effect_tail_sigmas)
        .into_iter()
        .map(|(lo, hi, _)| (lo, hi))
        .collect();
    Ok(DensityEstimate {
        components: std::sync::Arc::new(disc.components),
        log_weights: disc.effect_log_weights,
        window,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{Domain, NoiseSpec};
    use crate::map::AffineMap;
    use std::sync::Arc;

    fn linear(sigma: f64) -> GaussianChannel {
        GaussianChannel::new(
            Arc::new(AffineMap::identity(1)),
            NoiseSpec::isotropic(sigma).unwrap(),
            Domain::unit(1),
            Domain::unit(1),
        )
        .unwrap()
    }

    #[test]
    fn single_point_gives_zero() {
        let x = InterventionSet::discrete(vec![vec![0.3]]).unwrap();
        let r = ei_exact_quadrature(&x, &linear(0.05), &linear(0.05), &QuadratureSpec::default()).unwrap();
        assert!(r.nats.abs() < 1e-8, "{}", r.nats);
    }

    #[test]
    fn single_point_effect_distribution_is_the_conditional() {
        let x = InterventionSet::discrete(vec![vec![0.3]]).unwrap();
        let comp = compose(&linear(0.05), &linear(0.04)).unwrap();
        let ed = effect_distribution(&x, &comp, &QuadratureSpec::default()).unwrap();
        // θ marginalized analytically: y ~ N(0.3, 0.05² + 0.04²)
        let s2: f64 = 0.05f64.powi(2) + 0.04f64.powi(2);
        for y in [0.2, 0.3, 0.41] {
            let want = -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (y - 0.3f64).powi(2) / (2.0 * s2);
            assert!((ed.ln_density(&[y]) - want).abs() < 1e-6, "{y}");
        }
        assert!((ed.normalization() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn linear_dimmer_oracle() {
        let x = InterventionSet::UniformBox(Domain::unit(1));
        let spec = QuadratureSpec {
            convergence_check: false,
            ..QuadratureSpec::default()
        };
        let r = ei_exact_quadrature(&x, &linear(0.03), &linear(0.03), &spec).unwrap();
        assert!((r.nats - 1.817684604880319).abs() < 1e-4, "{}", r.nats);
    }

    #[test]
    fn interior_effect_distribution_is_flat() {
        let x = InterventionSet::UniformBox(Domain::unit(1));
        let comp = compose(&linear(0.01), &linear(0.01)).unwrap();
        let ed = effect_distribution(&x, &comp, &QuadratureSpec::default()).unwrap();
        for y in [0.3, 0.5, 0.7] {
            assert!((ed.density(&[y]) - 1.0).abs() < 1e-6);
        }
        assert!((ed.normalization() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn too_many_dimensions() {
        let x = InterventionSet::UniformBox(Domain::unit(2));
        let three = GaussianChannel::new(
            Arc::new(AffineMap::linear(nalgebra::DMatrix::from_element(3, 2, 1.0))),
            NoiseSpec::isotropic(0.1).unwrap(),
            Domain::unit(2),
            Domain::unit(3),
        )
        .unwrap();
        let id2 = GaussianChannel::new(
            Arc::new(AffineMap::identity(2)),
            NoiseSpec::isotropic(0.1).unwrap(),
            Domain::unit(2),
            Domain::unit(2),
        )
        .unwrap();
        assert_eq!(
            ei_exact_quadrature(&x, &id2, &three, &QuadratureSpec::default()).unwrap_err(),
            Error::UseMonteCarlo { dims: 5 }
        );
    }

    #[test]
    fn spec_validation() {
        let bad = QuadratureSpec {
            nodes_per_axis: 10,
            ..QuadratureSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
