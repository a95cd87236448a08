#![allow(dead_code)]

use std::sync::Arc;

use causal_geometry::channels::Domain;
use causal_geometry::ei::{MonteCarloSpec, QuadratureSpec};
use causal_geometry::geometry::{causal_eigenvalues, mismatch, ConstantMetric};
use causal_geometry::manifold::{pullback, Submanifold};
use causal_geometry::map::FnMap;
use causal_geometry::models::{
    dimmer_model, submanifold_a, two_species_model, DimmerProfile, EffectError, TwoSpeciesConfig,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

pub type Check = std::result::Result<(), String>;

/// SPD matrix `LLᵀ + 0.1·I` from `d²` raw entries.
pub fn spd(d: usize, raw: &[f64]) -> DMatrix<f64> {
    let l = DMatrix::from_fn(d, d, |i, j| if j <= i { raw[i * d + j] } else { 0.0 });
    &l * l.transpose() + DMatrix::identity(d, d) * 0.1
}

pub fn spd_pair() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(-2.0..2.0f64, d * d),
            prop::collection::vec(-2.0..2.0f64, d * d),
        )
    })
}

pub fn mismatch_matches_eigenvalues((d, a, b): (usize, Vec<f64>, Vec<f64>)) -> Check {
    let g = spd(d, &a);
    let h = spd(d, &b);
    let direct = mismatch(&g, &h).map_err(|e| e.to_string())?;
    let rep = causal_eigenvalues(&g, &h).map_err(|e| e.to_string())?;
    let via = rep.mismatch();
    if (direct - via).abs() > 1e-10 {
        return Err(format!("d={d}: {direct} vs {via}"));
    }
    Ok(())
}

pub fn pullback_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64, f64)> {
    (
        prop::collection::vec(-2.0..2.0f64, 9),
        prop::collection::vec(-2.0..2.0f64, 9),
        prop::collection::vec(-1.0..1.0f64, 6),
        -3.0..3.0f64,
        -3.0..3.0f64,
        0.0..1.0f64,
    )
}

/// Pullback is linear in the metric and equals `BᵀMB` for a linear embedding.
pub fn pullback_is_linear((m1, m2, b, s, t, sigma): (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64, f64)) -> Check {
    let bm = DMatrix::from_row_slice(3, 2, &b);
    if (bm.transpose() * &bm).determinant().abs() < 1e-3 {
        return Ok(());
    }
    let bj = bm.clone();
    let be = bm.clone();
    let embed = FnMap::new(2, 3, move |x| (&be * nalgebra::DVector::from_row_slice(x)).iter().copied().collect())
        .with_jacobian(move |_| bj.clone());
    let sub = Submanifold::new(Arc::new(embed), Domain::unit(2), "lin").map_err(|e| e.to_string())?;
    let (g1, g2) = (spd(3, &m1), spd(3, &m2));
    let combo = &g1 * s + &g2 * t;
    let at = [sigma, 1.0 - sigma];
    let pb = |m: &DMatrix<f64>| pullback(&ConstantMetric(m.clone()), &sub, &at).map_err(|e| e.to_string());
    let lhs = pb(&combo)?;
    let rhs = pb(&g1)? * s + pb(&g2)? * t;
    let direct = bm.transpose() * &combo * &bm;
    let scale = 1.0 + combo.amax() * bm.amax() * bm.amax();
    let e1 = (&lhs - &rhs).amax() / scale;
    let e2 = (&lhs - &direct).amax() / scale;
    if e1 > 1e-12 || e2 > 1e-12 {
        return Err(format!("linearity {e1:e}, closed form {e2:e}"));
    }
    Ok(())
}

fn two_species(eps: f64, delta: f64) -> std::result::Result<causal_geometry::models::TwoSpeciesModel, String> {
    two_species_model(&TwoSpeciesConfig {
        epsilon: eps,
        delta,
        ..Default::default()
    })
    .map_err(|e| e.to_string())
}

/// EI_g converges at first order under grid doubling: each doubling at least
/// roughly halves the change, and from 202 nodes on the change is below 1e-3 nats.
pub fn geometric_grid_converges((eps, delta): (f64, f64)) -> Check {
    let m = two_species(eps, delta)?;
    let at = |n: usize| {
        m.ei_geometric(&QuadratureSpec {
            nodes_per_axis: n,
            ..QuadratureSpec::geometric()
        })
        .map(|r| r.nats)
        .map_err(|e| e.to_string())
    };
    let (a, b, c) = (at(101)?, at(202)?, at(404)?);
    let (d1, d2) = ((a - b).abs(), (b - c).abs());
    if d2 >= 1e-3 || d2 > 0.6 * d1 {
        return Err(format!("eps={eps} delta={delta}: {a} / {b} / {c}"));
    }
    Ok(())
}

/// Doubling the nested-quadrature grid moves exact dimmer EI by less than 1e-3 nats.
pub fn exact_grid_converges(err: f64) -> Check {
    let m = dimmer_model(DimmerProfile::linear(), EffectError::Constant { epsilon: err }, err)
        .map_err(|e| e.to_string())?;
    let at = |n: usize| {
        m.ei_exact(&QuadratureSpec {
            nodes_per_axis: n,
            convergence_check: false,
            ..QuadratureSpec::default()
        })
        .map(|r| r.nats)
        .map_err(|e| e.to_string())
    };
    let (a, b) = (at(201)?, at(402)?);
    if (a - b).abs() >= 1e-3 {
        return Err(format!("err={err}: {a} vs {b}"));
    }
    Ok(())
}

/// Same seed gives the same bits, whatever the thread count.
pub fn mc_is_deterministic(seed: u64) -> Check {
    let m = two_species(0.05, 0.05)?;
    let spec = MonteCarloSpec {
        outer_samples: 400,
        inner_samples: 32,
        seed,
        batches: 8,
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| m.ei_exact_mc(&spec))
            .map_err(|e| e.to_string())
    };
    let (a, b, c) = (run(1)?, run(4)?, run(4)?);
    let bits = |r: &causal_geometry::ei::EIReport| (r.nats.to_bits(), r.stderr.map(f64::to_bits));
    if bits(&a) != bits(&b) || bits(&b) != bits(&c) {
        return Err(format!("seed {seed}: {} / {} / {}", a.nats, b.nats, c.nats));
    }
    Ok(())
}

/// `nats` is exactly `volume_term − mean_mismatch`, and `bits` is `nats / ln 2`.
pub fn decomposition_is_exact((eps, delta): (f64, f64)) -> Check {
    let m = two_species(eps, delta)?;
    let grid = QuadratureSpec {
        nodes_per_axis: 31,
        ..QuadratureSpec::geometric()
    };
    let full = m.ei_geometric(&grid).map_err(|e| e.to_string())?;
    let coarse = m.coarse_ei(&submanifold_a(), &grid).map_err(|e| e.to_string())?;
    for r in [full, coarse] {
        let (v, l) = (r.volume_term.ok_or("no volume term")?, r.mean_mismatch.ok_or("no mismatch")?);
        if r.nats.to_bits() != (v - l).to_bits() || r.bits.to_bits() != (r.nats / std::f64::consts::LN_2).to_bits() {
            return Err(format!("{} != {} - {}", r.nats, v, l));
        }
    }
    Ok(())
}

/// Coarse EI_g does not depend on how the submanifold is parameterized.
pub fn coarse_ei_is_invariant((k, err): (f64, f64)) -> Check {
    let m = two_species(err, err)?;
    let s = move |u: f64| (k * u).exp_m1() / k.exp_m1();
    let ds = move |u: f64| k * (k * u).exp() / k.exp_m1();
    let embed = FnMap::new(1, 2, move |u| vec![s(u[0]), s(u[0])])
        .with_jacobian(move |u| DMatrix::from_column_slice(2, 1, &[ds(u[0]), ds(u[0])]));
    let warped = Submanifold::new(Arc::new(embed), Domain::unit(1), "A'").map_err(|e| e.to_string())?;
    let grid = QuadratureSpec {
        nodes_per_axis: 401,
        ..QuadratureSpec::geometric()
    };
    let a = m.coarse_ei(&submanifold_a(), &grid).map_err(|e| e.to_string())?.nats;
    let b = m.coarse_ei(&warped, &grid).map_err(|e| e.to_string())?.nats;
    if (a - b).abs() >= 1e-3 {
        return Err(format!("k={k}: {a} vs {b}"));
    }
    Ok(())
}

