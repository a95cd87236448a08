//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use causal_geometry::ei::{MonteCarloSpec, QuadratureSpec};
use causal_geometry::geometry::{causal_eigenvalues, reparameterize, MetricField};
use causal_geometry::manifold::{crossover_scan, CrossoverScan, SweepModel, SweepSpec, SweepVariable};
use causal_geometry::map::FnMap;
use causal_geometry::models::*;
use nalgebra::DMatrix;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn lib<T>(r: causal_geometry::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within_time(start: Instant, limit: Duration, detail: String) -> Outcome {
    let t = start.elapsed();
    ensure!(t < limit, "{detail}; took {t:.1?}, limit {limit:?}");
    Ok(format!("{detail}; {t:.1?}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn linear_dimmer(err: f64) -> causal_geometry::Result<DimmerModel> {
    dimmer_model(DimmerProfile::linear(), EffectError::Constant { epsilon: err }, err)
}

fn binary_switch_limit() -> Outcome {
    let t = Instant::now();
    let r = lib(lib(binary_switch_model(1e-4, 1e-4))?.ei_exact(&QuadratureSpec::default()))?;
    ensure!((r.bits - 1.0).abs() <= 0.002, "{} bits", r.bits);
    within_time(t, Duration::from_secs(5), format!("{:.6} bits", r.bits))
}

fn approx_matches_exact() -> Outcome {
    let t = Instant::now();
    let m = lib(linear_dimmer(0.03))?;
    let exact = lib(m.ei_exact(&QuadratureSpec::default()))?.nats;
    let approx = lib(m.ei_approx())?.nats;
    let detail = format!("exact {exact:.5}, approx {approx:.5} nats");
    ensure!(rel(approx, exact) < 0.05, "{detail}: disagree");
    ensure!(rel(exact, 1.741) < 0.05 && rel(approx, 1.741) < 0.05, "{detail}: expected 1.741");
    within_time(t, Duration::from_secs(10), detail)
}

fn family_peak() -> Outcome {
    let grid: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();
    let ei: Vec<f64> = grid
        .par_iter()
        .map(|&a| {
            let m = dimmer_model(lib(dimmer_family(a))?, EffectError::Constant { epsilon: 0.03 }, 0.03);
            lib(lib(m)?.ei_exact(&QuadratureSpec::default())).map(|r| r.nats)
        })
        .collect::<std::result::Result<_, String>>()?;
    let best = (0..ei.len()).max_by(|&i, &j| ei[i].total_cmp(&ei[j])).unwrap();
    ensure!(grid[best] == 0.0, "peak at a={}", grid[best]);
    for i in 21..41 {
        ensure!(ei[i] < ei[i - 1], "not decreasing at a={}", grid[i]);
    }
    for i in 0..20 {
        ensure!(ei[i] < ei[i + 1], "not decreasing at a={}", grid[i]);
    }
    Ok(format!("peak {:.5} nats at a=0, ends {:.5}/{:.5}", ei[20], ei[0], ei[40]))
}

fn dimmer_vs_switch() -> Outcome {
    let t = Instant::now();
    let models = [
        SweepModel::new("continuous", |e| linear_dimmer(e)?.ei_exact(&QuadratureSpec::default())),
        SweepModel::new("binary", |e| binary_switch_model(e, e)?.ei_exact(&QuadratureSpec::default())),
    ];
    let sweep = SweepSpec {
        variable: SweepVariable::Both,
        from: 1e-3,
        to: 0.5,
        steps: 12,
        log_spaced: true,
    };
    let scan = lib(crossover_scan(&models, &sweep))?;
    let c = scan.curve("continuous").unwrap();
    let b = scan.curve("binary").unwrap();
    let n = c.len() - 1;
    ensure!(scan.invalid.is_empty(), "invalid points {:?}", scan.invalid);
    ensure!(c[0] > b[0], "continuous loses at smallest error");
    ensure!(b[n] > c[n], "binary loses at largest error");
    let x = scan.crossings_between("continuous", "binary");
    ensure!(x.len() == 1, "{} crossings", x.len());
    within_time(t, Duration::from_secs(60), format!("one crossing at {:.4}", x[0].location))
}

fn weber_optimality() -> Outcome {
    let run = |p: DimmerProfile| -> std::result::Result<f64, String> {
        let m = lib(dimmer_model(p, EffectError::Weber { eps0: 0.03 }, 0.003))?;
        lib(m.ei_exact(&QuadratureSpec::default())).map(|r| r.nats)
    };
    let opt = run(lib(weber_optimal(0.1))?)?;
    let lin = run(DimmerProfile::linear())?;
    ensure!(opt > lin, "optimal {opt} <= linear {lin}");
    Ok(format!("exponential {opt:.4} > linear {lin:.4} nats"))
}

fn two_species(eps: f64, delta: f64) -> causal_geometry::Result<TwoSpeciesModel> {
    two_species_model(&TwoSpeciesConfig {
        epsilon: eps,
        delta,
        ..Default::default()
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn log_scaling_slopes() -> Outcome {
    let grid = QuadratureSpec::geometric();
    let deltas: Vec<f64> = (0..7).map(|i| 1e-3 * 10f64.powf(i as f64 / 6.0)).collect();
    let mut full = Vec::new();
    let mut sub = Vec::new();
    for &d in &deltas {
        let m = lib(two_species(d, d))?;
        full.push(lib(m.ei_geometric(&grid))?.nats);
        sub.push(lib(m.coarse_ei(&submanifold_a(), &grid))?.nats);
    }
    let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let (s2, s1) = (slope(&x, &full), slope(&x, &sub));
    ensure!((s2 + 2.0).abs() <= 0.02 && (s1 + 1.0).abs() <= 0.02, "slopes {s2:.4} / {s1:.4}");
    Ok(format!("full {s2:.4}, submanifold A {s1:.4}"))
}

fn species_models(cfg: TwoSpeciesConfig, var: SweepVariable, subs: &[&'static str], full: bool) -> Vec<SweepModel> {
    let grid = QuadratureSpec::geometric();
    let mut out = Vec::new();
    let build = move |v: f64| {
        let mut c = cfg.clone();
        match var {
            SweepVariable::Epsilon => c.epsilon = v,
            SweepVariable::Delta => c.delta = v,
            SweepVariable::Both => (c.epsilon, c.delta) = (v, v),
            SweepVariable::DeltaT => c.delta_t = v,
            _ => unreachable!(),
        }
        two_species_model(&c)
    };
    if full {
        let (b, g) = (build.clone(), grid.clone());
        out.push(SweepModel::new("2d", move |v| b(v)?.ei_geometric(&g)));
    }
    for &s in subs {
        let (b, g) = (build.clone(), grid.clone());
        out.push(SweepModel::new(s, move |v| b(v)?.coarse_ei(&submanifold(s)?, &g)));
    }
    out
}

fn full_vs_coarse_crossovers() -> Outcome {
    let t = Instant::now();
    let base = TwoSpeciesConfig {
        epsilon: 1e-2,
        delta: 1e-2,
        ..Default::default()
    };
    let sweeps = [
        (SweepVariable::Epsilon, 1e-3, 1.0, 19),
        (SweepVariable::Delta, 1e-3, 10.0, 25),
        (SweepVariable::Both, 1e-3, 0.1, 21),
    ];
    let mut found = Vec::new();
    for (var, from, to, steps) in sweeps {
        let models = species_models(base.clone(), var, &["A"], true);
        let sweep = SweepSpec {
            variable: var,
            from,
            to,
            steps,
            log_spaced: true,
        };
        let scan = lib(crossover_scan(&models, &sweep))?;
        let x = scan.crossings_between("2d", "A");
        ensure!(x.len() == 1, "{} sweep: {} crossings", var.column(), x.len());
        let (full, sub) = (scan.curve("2d").unwrap(), scan.curve("A").unwrap());
        let n = full.len() - 1;
        ensure!(sub[n] > full[n], "{} sweep: 1D loses at large error", var.column());
        found.push(format!("{}={:.4}", var.column(), x[0].location));
    }
    within_time(t, Duration::from_secs(120), format!("crossings {}", found.join(", ")))
}

fn delta_t_scan(a: [[f64; 2]; 2]) -> causal_geometry::Result<CrossoverScan> {
    let cfg = TwoSpeciesConfig {
        a,
        epsilon: 0.02,
        delta: 0.02,
        ..Default::default()
    };
    let models = species_models(cfg, SweepVariable::DeltaT, &["A", "B"], true);
    let sweep = SweepSpec {
        variable: SweepVariable::DeltaT,
        from: 0.01,
        to: 100.0,
        steps: 33,
        log_spaced: true,
    };
    crossover_scan(&models, &sweep)
}

fn independent_species_regimes() -> Outcome {
    let scan = lib(delta_t_scan([[1.0, 0.0], [0.0, 1.0]]))?;
    let r = scan.regimes();
    ensure!(r == ["A", "2d", "B"], "regimes {r:?}");
    Ok(format!("regimes {}", r.join(" -> ")))
}

fn coupled_species_never_full() -> Outcome {
    let scan = lib(delta_t_scan([[1.0, 0.8], [0.7, 1.0]]))?;
    let wins = scan.argmax.iter().filter(|l| l.as_deref() == Some("2d")).count();
    ensure!(wins == 0, "full model is argmax at {wins} points");
    Ok(format!("regimes {}", scan.regimes().join(" -> ")))
}

fn mc_vs_geometric() -> Outcome {
    let t = Instant::now();
    let m = lib(two_species(1e-2, 1e-2))?;
    let mc = lib(m.ei_exact_mc(&MonteCarloSpec::default()))?;
    let geo = lib(m.ei_geometric(&QuadratureSpec::geometric()))?.nats;
    let se = mc.stderr.unwrap_or(0.0);
    let tol = (3.0 * se).max(0.05 * geo.abs());
    let detail = format!("mc {:.4} ± {se:.4}, geometric {geo:.4} nats", mc.nats);
    ensure!((mc.nats - geo).abs() <= tol, "{detail}: off by more than {tol:.4}");
    within_time(t, Duration::from_secs(120), detail)
}

/// `θ = c + Bθ′ + κ (sin θ′₂, sin θ′₁)`, so `φ(0) = c`.
fn random_map(rng: &mut ChaCha8Rng, c: [f64; 2]) -> FnMap {
    let b: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let b = DMatrix::from_row_slice(2, 2, &b) + DMatrix::identity(2, 2) * 1.5;
    let k = rng.random_range(-0.3..0.3);
    let bj = b.clone();
    FnMap::new(2, 2, move |u| {
        vec![
            c[0] + b[(0, 0)] * u[0] + b[(0, 1)] * u[1] + k * u[1].sin(),
            c[1] + b[(1, 0)] * u[0] + b[(1, 1)] * u[1] + k * u[0].sin(),
        ]
    })
    .with_jacobian(move |u| {
        let mut j = bj.clone();
        j[(0, 1)] += k * u[1].cos();
        j[(1, 0)] += k * u[0].cos();
        j
    })
}

fn coordinate_invariance() -> Outcome {
    let m = lib(two_species(0.02, 0.02))?;
    let (g, h): (Arc<dyn MetricField>, Arc<dyn MetricField>) = (Arc::new(m.g.clone()), Arc::new(m.h.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst, mut least_g_change) = (0.0f64, f64::INFINITY);
    let mut tried = 0;
    while tried < 10 {
        let c = [rng.random_range(0.3..0.7), rng.random_range(0.05..0.25)];
        let phi = Arc::new(random_map(&mut rng, c));
        let u = [rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)];
        let gp = lib(reparameterize(g.clone(), phi.clone()))?;
        let hp = lib(reparameterize(h.clone(), phi.clone()))?;
        let Ok(j) = gp.phi_jacobian(&u) else { continue };
        if j.determinant().abs() < 0.1 {
            continue;
        }
        tried += 1;
        let theta = causal_geometry::map::SmoothMap::eval(phi.as_ref(), &u);
        let before = lib(causal_eigenvalues(&lib(g.eval(&theta))?, &lib(h.eval(&theta))?))?;
        let after = lib(causal_eigenvalues(&lib(gp.eval(&u))?, &lib(hp.eval(&u))?))?;
        for (a, b) in before.eigenvalues.iter().zip(&after.eigenvalues) {
            worst = worst.max((a - b).abs() / a.abs().max(1e-300));
        }
        let g0 = lib(g.eval(&theta))?.symmetric_eigenvalues();
        let g1 = lib(gp.eval(&u))?.symmetric_eigenvalues();
        let top = |v: &nalgebra::DVector<f64>| v.max();
        least_g_change = least_g_change.min(rel(top(&g1), top(&g0)));
    }
    ensure!(worst <= 1e-8, "h^-1 g eigenvalues moved by {worst:e}");
    ensure!(least_g_change > 0.1, "g eigenvalues moved by only {least_g_change:.3}");
    Ok(format!("max rel drift {worst:.1e}; g alone changes >= {:.0}%", 100.0 * least_g_change))
}

fn confounder_metrics() -> Outcome {
    let cfg = DecayConfounderConfig::default();
    ensure!((cfg.ratio() - 0.05).abs() < 1e-15, "ratio {}", cfg.ratio());
    let m = lib(decay_confounder_metrics(&cfg))?;
    let thetas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let c0 = lib(m.h_caus_at(thetas[0]))?;
    for &t in &thetas {
        let c = lib(m.h_caus_at(t))?;
        ensure!((c - c0).abs() <= 1e-12 * c0, "h_caus varies at {t}");
    }
    let s0 = lib(m.h_stat_at(thetas[0]))?;
    let q0 = lib(m.h_stat_series.eval(thetas[0]))?;
    let mut spread = 0.0f64;
    for &t in &thetas[1..] {
        let (s, q) = (lib(m.h_stat_at(t))?, lib(m.h_stat_series.eval(t))?);
        spread = spread.max((s - s0).abs());
        ensure!(rel(s, q) <= 0.2, "h_stat {s} vs series {q} at {t}");
        if (q - q0).abs() > 1e-3 {
            ensure!(rel(s - s0, q - q0) <= 0.2, "variation {} vs series {} at {t}", s - s0, q - q0);
        }
    }
    ensure!(spread > 1e-3 * s0, "h_stat flat to {spread:e}");
    Ok(format!("h_caus {c0:.6}; h_stat spans {spread:.4} over [0,1]"))
}

fn run_property<S: Strategy>(name: &str, cases: u32, strat: S, f: fn(S::Value) -> common::Check) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner
        .run(&strat, |v| f(v).map_err(proptest::test_runner::TestCaseError::fail))
        .map_err(|e| format!("{name}: {e}"))
}

fn property_suites() -> Outcome {
    use common::*;
    run_property("mismatch-eigenvalue identity", 256, spd_pair(), mismatch_matches_eigenvalues)?;
    run_property("pullback linearity", 256, pullback_case(), pullback_is_linear)?;
    run_property("exact grid doubling", 2, 0.03..0.1f64, exact_grid_converges)?;
    run_property("geometric grid doubling", 4, (0.01..0.1f64, 0.01..0.1f64), geometric_grid_converges)?;
    run_property("seeded MC determinism", 4, proptest::num::u64::ANY, mc_is_deterministic)?;
    run_property("decomposition exactness", 8, (0.005..0.2f64, 0.005..0.2f64), decomposition_is_exact)?;
    Ok("all property suites hold".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("binary switch carries one bit", binary_switch_limit),
        ("small-error approximation matches exact EI", approx_matches_exact),
        ("profile family peaks at linear", family_peak),
        ("dimmer and switch cross once", dimmer_vs_switch),
        ("Weber-optimal profile beats linear", weber_optimality),
        ("EI_g scales as -d ln delta", log_scaling_slopes),
        ("full and coarse models cross once per sweep", full_vs_coarse_crossovers),
        ("regimes A -> 2d -> B for independent species", independent_species_regimes),
        ("coupled species never favour the full model", coupled_species_never_full),
        ("Monte Carlo agrees with EI_g", mc_vs_geometric),
        ("causal eigenvalues are coordinate invariant", coordinate_invariance),
        ("confounded decay metrics", confounder_metrics),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({why}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
