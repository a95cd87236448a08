//! C ABI over the causal-geometry library.
//!
//! Every function returns a [`CgStatus`]. On failure the message is kept per
//! thread and can be read with [`cg_last_error`]. Handles are opaque and must
//! be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use causal_geometry::ei::{EIReport, Method, MonteCarloSpec, QuadratureSpec};
use causal_geometry::geometry::{causal_eigenvalues, mismatch, MetricField};
use causal_geometry::models::{
    binary_switch_model, dimmer_model, submanifold_a, submanifold_b, two_species_model, DimmerModel, DimmerProfile,
    EffectError, TwoSpeciesConfig, TwoSpeciesModel,
};
use causal_geometry::Error;
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgMethod {
    Quadrature = 0,
    MonteCarlo = 1,
    Geometric = 2,
    DimmerApprox = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgProfile {
    Linear = 0,
    Quadratic = 1,
    Exponential = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgSubmanifold {
    A = 0,
    B = 1,
}

/// EI estimate; optional fields are NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub nats: f64,
    pub bits: f64,
    pub method: CgMethod,
    pub volume_term: f64,
    pub mean_mismatch: f64,
    pub std_error: f64,
    pub warning_count: usize,
}

impl From<&EIReport> for CgReport {
    fn from(r: &EIReport) -> Self {
        Self {
            nats: r.nats,
            bits: r.bits,
            method: match r.method {
                Method::Quadrature => CgMethod::Quadrature,
                Method::MonteCarlo => CgMethod::MonteCarlo,
                Method::Geometric => CgMethod::Geometric,
                Method::DimmerApprox => CgMethod::DimmerApprox,
            },
            volume_term: r.volume_term.unwrap_or(f64::NAN),
            mean_mismatch: r.mean_mismatch.unwrap_or(f64::NAN),
            std_error: r.stderr.unwrap_or(f64::NAN),
            warning_count: r.warnings.len(),
        }
    }
}

/// Opaque two-species model.
pub struct CgTwoSpecies(TwoSpeciesModel);

/// Opaque dimmer or binary-switch model.
pub struct CgDimmer(DimmerModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CgStatus {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidDomain(_)
        | Error::InvalidNoise(_)
        | Error::DimensionMismatch { .. }
        | Error::DomainViolation { .. }
        | Error::UseMonteCarlo { .. }
        | Error::Regime(_) => CgStatus::InvalidArgument,
        _ => CgStatus::Numeric,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CgStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed as {what}"));
            CgStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            CgStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message of the last failed call on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn cg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(c) => c,
        Err(_) => panic!("version string"),
    };
    V.as_ptr()
}

/// `l = ½[ln det(g+h) − ln det g]` for row-major `d×d` matrices.
///
/// # Safety
/// `g` and `h` must point to `d*d` doubles; `out_l` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_mismatch(g: *const f64, h: *const f64, d: usize, out_l: *mut f64) -> CgStatus {
    guard(|| {
        let g = DMatrix::from_row_slice(d, d, slice(g, d * d, "g")?);
        let h = DMatrix::from_row_slice(d, d, slice(h, d * d, "h")?);
        *out(out_l, "out_l")? = mismatch(&g, &h)?;
        Ok(())
    })
}

/// Generalized eigenvalues of `(g, h)`, written in descending order to `out_eigenvalues[0..d]`.
///
/// # Safety
/// `g`, `h` must point to `d*d` doubles and `out_eigenvalues` to `d` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cg_causal_eigenvalues(
    g: *const f64,
    h: *const f64,
    d: usize,
    out_eigenvalues: *mut f64,
) -> CgStatus {
    guard(|| {
        let g = DMatrix::from_row_slice(d, d, slice(g, d * d, "g")?);
        let h = DMatrix::from_row_slice(d, d, slice(h, d * d, "h")?);
        if out_eigenvalues.is_null() {
            return Err(Fail::Null("out_eigenvalues"));
        }
        let rep = causal_eigenvalues(&g, &h)?;
        std::slice::from_raw_parts_mut(out_eigenvalues, d).copy_from_slice(&rep.eigenvalues);
        Ok(())
    })
}

/// Builds a two-species model. `a` is the row-major 2×2 intervention matrix.
///
/// # Safety
/// `a` must point to 4 doubles; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_two_species_new(
    a: *const f64,
    delta_t: f64,
    n_points: usize,
    epsilon: f64,
    delta: f64,
    out_model: *mut *mut CgTwoSpecies,
) -> CgStatus {
    guard(|| {
        let a = slice(a, 4, "a")?;
        let slot = out(out_model, "out_model")?;
        let cfg = TwoSpeciesConfig {
            a: [[a[0], a[1]], [a[2], a[3]]],
            delta_t,
            n_points,
            epsilon,
            delta,
        };
        *slot = Box::into_raw(Box::new(CgTwoSpecies(two_species_model(&cfg)?)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`cg_two_species_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cg_two_species_free(model: *mut CgTwoSpecies) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// EI_g of the full model on a midpoint grid.
///
/// # Safety
/// `model` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_two_species_ei_geometric(
    model: *const CgTwoSpecies,
    nodes_per_axis: usize,
    out_report: *mut CgReport,
) -> CgStatus {
    guard(|| {
        let m = get(model, "model")?;
        let slot = out(out_report, "out_report")?;
        let grid = QuadratureSpec {
            nodes_per_axis,
            ..QuadratureSpec::geometric()
        };
        *slot = (&m.0.ei_geometric(&grid)?).into();
        Ok(())
    })
}

/// EI_g of the coarse-grained model on submanifold A or B.
///
/// # Safety
/// `model` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_two_species_coarse_ei(
    model: *const CgTwoSpecies,
    sub: CgSubmanifold,
    nodes_per_axis: usize,
    out_report: *mut CgReport,
) -> CgStatus {
    guard(|| {
        let m = get(model, "model")?;
        let slot = out(out_report, "out_report")?;
        let grid = QuadratureSpec {
            nodes_per_axis,
            ..QuadratureSpec::geometric()
        };
        let s = match sub {
            CgSubmanifold::A => submanifold_a(),
            CgSubmanifold::B => submanifold_b(),
        };
        *slot = (&m.0.coarse_ei(&s, &grid)?).into();
        Ok(())
    })
}

/// Exact EI by seeded nested Monte Carlo.
///
/// # Safety
/// `model` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_two_species_ei_mc(
    model: *const CgTwoSpecies,
    outer_samples: usize,
    inner_samples: usize,
    seed: u64,
    out_report: *mut CgReport,
) -> CgStatus {
    guard(|| {
        let m = get(model, "model")?;
        let slot = out(out_report, "out_report")?;
        let spec = MonteCarloSpec {
            outer_samples,
            inner_samples,
            seed,
            ..MonteCarloSpec::default()
        };
        *slot = (&m.0.ei_exact_mc(&spec)?).into();
        Ok(())
    })
}

/// Eigenvalues of `h⁻¹g` at `theta[0..2]` (descending) and the mismatch there.
///
/// # Safety
/// `theta` must point to 2 doubles, `out_eigenvalues` to 2 writable doubles, `out_mismatch` to one.
#[no_mangle]
pub unsafe extern "C" fn cg_two_species_eigen(
    model: *const CgTwoSpecies,
    theta: *const f64,
    out_eigenvalues: *mut f64,
    out_mismatch: *mut f64,
) -> CgStatus {
    guard(|| {
        let m = get(model, "model")?;
        let t = slice(theta, 2, "theta")?;
        if out_eigenvalues.is_null() {
            return Err(Fail::Null("out_eigenvalues"));
        }
        let l = out(out_mismatch, "out_mismatch")?;
        let rep = m.0.eigen(t)?;
        std::slice::from_raw_parts_mut(out_eigenvalues, 2).copy_from_slice(&rep.eigenvalues);
        *l = rep.mismatch();
        Ok(())
    })
}

/// Row-major effect metric `g(θ)` written to `out_g[0..4]`.
///
/// # Safety
/// `theta` must point to 2 doubles and `out_g` to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cg_two_species_effect_metric(
    model: *const CgTwoSpecies,
    theta: *const f64,
    out_g: *mut f64,
) -> CgStatus {
    guard(|| {
        let m = get(model, "model")?;
        let t = slice(theta, 2, "theta")?;
        if out_g.is_null() {
            return Err(Fail::Null("out_g"));
        }
        let g = m.0.g.eval(t)?;
        let dst = std::slice::from_raw_parts_mut(out_g, 4);
        for i in 0..2 {
            for j in 0..2 {
                dst[2 * i + j] = g[(i, j)];
            }
        }
        Ok(())
    })
}

/// Dimmer with constant effect error. `a` is used only by the exponential profile.
///
/// # Safety
/// `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_dimmer_new(
    profile: CgProfile,
    a: f64,
    epsilon: f64,
    delta: f64,
    out_model: *mut *mut CgDimmer,
) -> CgStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let p = match profile {
            CgProfile::Linear => DimmerProfile::linear(),
            CgProfile::Quadratic => DimmerProfile::quadratic(),
            CgProfile::Exponential => DimmerProfile::exponential(a),
        };
        *slot = Box::into_raw(Box::new(CgDimmer(dimmer_model(p, EffectError::Constant { epsilon }, delta)?)));
        Ok(())
    })
}

/// The linear dimmer restricted to the interventions {0, 1}.
///
/// # Safety
/// `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_binary_switch_new(epsilon: f64, delta: f64, out_model: *mut *mut CgDimmer) -> CgStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        *slot = Box::into_raw(Box::new(CgDimmer(binary_switch_model(epsilon, delta)?)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a dimmer constructor and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cg_dimmer_free(model: *mut CgDimmer) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Exact EI by nested quadrature (`nodes_per_axis` 0 selects the default).
///
/// # Safety
/// `model` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_dimmer_ei_exact(
    model: *const CgDimmer,
    nodes_per_axis: usize,
    out_report: *mut CgReport,
) -> CgStatus {
    guard(|| {
        let m = get(model, "model")?;
        let slot = out(out_report, "out_report")?;
        let mut spec = QuadratureSpec::default();
        if nodes_per_axis > 0 {
            spec.nodes_per_axis = nodes_per_axis;
        }
        *slot = (&m.0.ei_exact(&spec)?).into();
        Ok(())
    })
}

/// Small-error approximation of the dimmer EI.
///
/// # Safety
/// `model` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_dimmer_ei_approx(model: *const CgDimmer, out_report: *mut CgReport) -> CgStatus {
    guard(|| {
        let m = get(model, "model")?;
        let slot = out(out_report, "out_report")?;
        *slot = (&m.0.ei_approx()?).into();
        Ok(())
    })
}
