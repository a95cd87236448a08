use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::exact::QuadratureSpec;
use super::report::{EIReport, Sampling, Warning};
use crate::channels::Domain;
use crate::error::{Error, Result};
use crate::geometry::{mismatch, MetricField};
use crate::linalg::{self, LN_2PI};
use crate::quadrature::{tensor_points, Rule1D};

/// Smallest-to-largest eigenvalue ratio below which `g` counts as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// Raw integrals behind a geometric EI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricTerms {
    /// `V_I = ∫ √det h`.
    pub volume: f64,
    /// `⟨l⟩_I`.
    pub mean_mismatch: f64,
    pub singular_cells: usize,
    pub cells: usize,
}

fn numerically_singular(g: &DMatrix<f64>) -> bool {
    let ev = SymmetricEigen::new(g.clone()).eigenvalues;
    let max = ev.iter().cloned().fold(0.0f64, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    !(max > 0.0) || min <= SINGULAR_RATIO * max
}

fn sqrt_det_h(h: &dyn MetricField, theta: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let hm = h.eval(theta)?;
    let ld = linalg::log_det_strict(&hm).ok_or(Error::IllPosedInterventions)?;
    Ok((hm, (0.5 * ld).exp()))
}

/// `(√det h, √det h · l)` at one point; `l = ∞` on singular `g`.
fn point_terms(g: &dyn MetricField, h: &dyn MetricField, theta: &[f64]) -> Result<(f64, f64)> {
    let (hm, w) = sqrt_det_h(h, theta)?;
    let gm = g.eval(theta)?;
    let l = mismatch(&gm, &hm).map_err(|e| match e {
        Error::DegenerateModel { reason, .. } => Error::DegenerateModel {
            node: theta.to_vec(),
            reason,
        },
        other => other,
    })?;
    if numerically_singular(&gm) {
        return Ok((w, f64::INFINITY));
    }
    Ok((w, w * l))
}

/// Cell average over an asymmetric sub-grid (4, 5, 4, … points per axis).
fn cell_terms(
    g: &dyn MetricField,
    h: &dyn MetricField,
    center: &[f64],
    widths: &[f64],
) -> Result<(f64, f64, bool)> {
    let (w, wl) = point_terms(g, h, center)?;
    if wl.is_finite() {
        return Ok((w, wl, false));
    }
    let rules: Vec<Rule1D> = center
        .iter()
        .zip(widths)
        .enumerate()
        .map(|(a, (c, w))| Rule1D::midpoint(c - 0.5 * w, c + 0.5 * w, if a % 2 == 0 { 4 } else { 5 }))
        .collect();
    let pts = tensor_points(&rules);
    let n = pts.len() as f64;
    let (mut sw, mut swl) = (0.0, 0.0);
    for (p, _) in &pts {
        let (w, wl) = point_terms(g, h, p)?;
        sw += w;
        swl += wl;
    }
    Ok((sw / n, swl / n, true))
}

fn midpoint_cells(domain: &Domain, n: usize) -> (Vec<Rule1D>, Vec<f64>) {
    let rules: Vec<Rule1D> = domain
        .axes()
        .iter()
        .map(|&(lo, hi)| Rule1D::midpoint(lo, hi, n))
        .collect();
    let widths = domain.axes().iter().map(|&(lo, hi)| (hi - lo) / n as f64).collect();
    (rules, widths)
}

/// `V_I` and `⟨l⟩_I` on a midpoint grid.
pub fn geometric_terms(
    g: &dyn MetricField,
    h: &dyn MetricField,
    domain: &Domain,
    nodes_per_axis: usize,
) -> Result<GeometricTerms> {
    let d = domain.dim();
    if g.dim() != d || h.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if g.dim() != d { g.dim() } else { h.dim() },
        });
    }
    let (rules, widths) = midpoint_cells(domain, nodes_per_axis);
    let pts = tensor_points(&rules);
    let cells: Vec<Result<(f64, f64, bool)>> = pts
        .par_iter()
        .map(|(p, _)| cell_terms(g, h, p, &widths))
        .collect();
    let (mut v, mut vl, mut singular) = (0.0, 0.0, 0usize);
    for ((_, vol), c) in pts.iter().zip(cells) {
        let (w, wl, s) = c?;
        v += vol * w;
        vl += vol * wl;
        singular += s as usize;
    }
    Ok(GeometricTerms {
        volume: v,
        mean_mismatch: vl / v,
        singular_cells: singular,
        cells: pts.len(),
    })
}

/// `EI_g = ln[V_I / (2πe)^{d/2}] − ⟨l⟩_I`.
pub fn ei_geometric(
    g: &dyn MetricField,
    h: &dyn MetricField,
    domain: &Domain,
    grid: &QuadratureSpec,
) -> Result<EIReport> {
    let d = domain.dim() as f64;
    let t = geometric_terms(g, h, domain, grid.nodes_per_axis)?;
    let volume_term = t.volume.ln() - 0.5 * d * (LN_2PI + 1.0);
    let mut r = EIReport::geometric(
        volume_term,
        t.mean_mismatch,
        Sampling::Midpoint {
            nodes_per_axis: grid.nodes_per_axis,
            cells: t.cells,
        },
    );
    if t.singular_cells > 0 {
        r.warnings.push(Warning::SingularCells {
            count: t.singular_cells,
        });
    }
    Ok(r)
}

/// `V_I = ∫ √det h` on a midpoint grid.
pub fn intervention_volume(h: &dyn MetricField, domain: &Domain, grid: &QuadratureSpec) -> Result<f64> {
    if h.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: h.dim(),
        });
    }
    let (rules, _) = midpoint_cells(domain, grid.nodes_per_axis);
    let pts = tensor_points(&rules);
    let vals: Vec<Result<f64>> = pts
        .par_iter()
        .map(|(p, _)| sqrt_det_h(h, p).map(|(_, w)| w))
        .collect();
    let mut v = 0.0;
    for ((_, vol), w) in pts.iter().zip(vals) {
        v += vol * w?;
    }
    Ok(v)
}
