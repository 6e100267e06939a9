//! C interface to the btrelax grids, functionals and time steppers.
//!
//! Objects are opaque heap handles created by `btr_*_new` and released by the
//! matching `btr_*_free`. Every fallible call returns a [`BtrStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`btr_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use btrelax::bt::{bt_step, BtConfig, BtMode};
use btrelax::functionals::{collect_diagnostics, energy, entropy};
use btrelax::nsk::{nsk_step, NskConfig, Scheme};
use btrelax::state::CoefficientMatrix;
use btrelax::{Error, GridSpec, Params, ScalarField, SpeciesState, SystemState, VectorField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Blow-up, clip budget, step too large or positivity loss.
    Numerical = 3,
    Panic = 4,
}

pub struct BtrGrid(GridSpec);
pub struct BtrParams(Params);
pub struct BtrState(SystemState);

/// Scalar diagnostics of one state; per-species entries are summed.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct BtrDiagnostics {
    pub time: f64,
    pub energy: f64,
    pub entropy: f64,
    pub h1: f64,
    pub h2: f64,
    pub mass_total: f64,
    pub d_relax: f64,
    pub d_visc: f64,
    pub d_lin: f64,
    pub d_quartic: f64,
    pub d_grad: f64,
    pub d_bohm_total: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: BtrStatus, msg: impl Into<String>) -> BtrStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> BtrStatus {
    let status = if e.is_numerical() {
        BtrStatus::Numerical
    } else {
        BtrStatus::InvalidArgument
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), BtrStatus>) -> BtrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BtrStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(BtrStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: btrelax::Result<T>) -> Result<T, BtrStatus> {
    r.map_err(from_error)
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, BtrStatus> {
    p.as_ref()
        .ok_or_else(|| fail(BtrStatus::NullPointer, format!("{what} is null")))
}

fn null_out<T>(p: *mut T, what: &str) -> Result<(), BtrStatus> {
    if p.is_null() {
        Err(fail(BtrStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn btr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Create a periodic grid with `n^dim` points on `[0, 2π)^dim`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn btr_grid_new(dim: usize, n: usize, out: *mut *mut BtrGrid) -> BtrStatus {
    guard(|| {
        null_out(out, "out")?;
        let g = check(GridSpec::new(dim, n))?;
        *out = Box::into_raw(Box::new(BtrGrid(g)));
        Ok(())
    })
}

/// Number of grid points, `n^dim`; 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle from [`btr_grid_new`].
#[no_mangle]
pub unsafe extern "C" fn btr_grid_len(grid: *const BtrGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `grid` must be null or a handle from [`btr_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn btr_grid_free(grid: *mut BtrGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Create parameters for `n_species` species. A negative `delta` selects the
/// default `min(10⁻³, eps)`.
///
/// # Safety
/// `k` must point to `n_species` readable values and `out` to writable storage
/// for one handle.
#[no_mangle]
pub unsafe extern "C" fn btr_params_new(
    eps: f64,
    delta: f64,
    k: *const f64,
    n_species: usize,
    out: *mut *mut BtrParams,
) -> BtrStatus {
    guard(|| {
        null_out(out, "out")?;
        if k.is_null() {
            return Err(fail(BtrStatus::NullPointer, "k is null"));
        }
        let k = std::slice::from_raw_parts(k, n_species).to_vec();
        let mut p = check(Params::new(eps, k))?;
        if delta >= 0.0 {
            p = check(p.with_delta(delta))?;
        }
        *out = Box::into_raw(Box::new(BtrParams(p)));
        Ok(())
    })
}

/// Attach a row-major `n_species × n_species` coefficient matrix (symmetric,
/// nonnegative) for the generalized limit system.
///
/// # Safety
/// `params` must be a live handle and `entries` must point to
/// `n_species²` readable values.
#[no_mangle]
pub unsafe extern "C" fn btr_params_set_matrix(params: *mut BtrParams, entries: *const f64) -> BtrStatus {
    guard(|| {
        let p = params
            .as_mut()
            .ok_or_else(|| fail(BtrStatus::NullPointer, "params is null"))?;
        if entries.is_null() {
            return Err(fail(BtrStatus::NullPointer, "entries is null"));
        }
        let n = p.0.n_species();
        let flat = std::slice::from_raw_parts(entries, n * n);
        let rows: Vec<Vec<f64>> = flat.chunks(n).map(<[f64]>::to_vec).collect();
        let a = check(CoefficientMatrix::from_rows(&rows))?;
        p.0 = check(p.0.clone().with_matrix(a))?;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from [`btr_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn btr_params_free(params: *mut BtrParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Create a state. `rho` holds `n_species` density arrays of `n^dim` values
/// each; `u` holds `n_species · dim` velocity arrays in the order species,
/// then component, or is null for a state at rest. Arrays are row-major.
///
/// # Safety
/// `grid` must be live; `rho` and (if non-null) `u` must point to the stated
/// number of readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btr_state_new(
    grid: *const BtrGrid,
    n_species: usize,
    time: f64,
    rho: *const f64,
    u: *const f64,
    out: *mut *mut BtrState,
) -> BtrStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0;
        null_out(out, "out")?;
        if rho.is_null() {
            return Err(fail(BtrStatus::NullPointer, "rho is null"));
        }
        if n_species == 0 {
            return Err(fail(BtrStatus::InvalidArgument, "n_species must be ≥ 1"));
        }
        let len = g.len();
        let rho = std::slice::from_raw_parts(rho, n_species * len);
        let u = if u.is_null() {
            None
        } else {
            Some(std::slice::from_raw_parts(u, n_species * g.dim() * len))
        };
        let species = (0..n_species)
            .map(|i| {
                let r = check(ScalarField::from_values(g, rho[i * len..(i + 1) * len].to_vec()))?;
                let v = match u {
                    None => VectorField::zeros(g),
                    Some(u) => {
                        let comps = (0..g.dim())
                            .map(|a| {
                                let off = (i * g.dim() + a) * len;
                                check(ScalarField::from_values(g, u[off..off + len].to_vec()))
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        check(VectorField::from_components(g, comps))?
                    }
                };
                Ok(SpeciesState { rho: r, u: v })
            })
            .collect::<Result<Vec<_>, BtrStatus>>()?;
        let s = check(SystemState::new(time, species))?;
        *out = Box::into_raw(Box::new(BtrState(s)));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn btr_state_free(state: *mut BtrState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Time of a state; NaN for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn btr_state_time(state: *const BtrState) -> f64 {
    state.as_ref().map_or(f64::NAN, |s| s.0.time)
}

/// Copy the density of `species` into `buf`, which holds `len` values.
///
/// # Safety
/// `state` must be live and `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn btr_state_density(
    state: *const BtrState,
    species: usize,
    buf: *mut f64,
    len: usize,
) -> BtrStatus {
    guard(|| {
        let s = &deref(state, "state")?.0;
        null_out(buf, "buf")?;
        let sp = s
            .species
            .get(species)
            .ok_or_else(|| fail(BtrStatus::InvalidArgument, format!("no species {species}")))?;
        let v = sp.rho.values();
        if len != v.len() {
            return Err(fail(
                BtrStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", v.len()),
            ));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
        Ok(())
    })
}

/// Copy velocity component `component` of `species` into `buf`.
///
/// # Safety
/// `state` must be live and `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn btr_state_velocity(
    state: *const BtrState,
    species: usize,
    component: usize,
    buf: *mut f64,
    len: usize,
) -> BtrStatus {
    guard(|| {
        let s = &deref(state, "state")?.0;
        null_out(buf, "buf")?;
        let sp = s
            .species
            .get(species)
            .ok_or_else(|| fail(BtrStatus::InvalidArgument, format!("no species {species}")))?;
        let c = sp
            .u
            .components()
            .get(component)
            .ok_or_else(|| fail(BtrStatus::InvalidArgument, format!("no component {component}")))?;
        if len != c.values().len() {
            return Err(fail(
                BtrStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", c.values().len()),
            ));
        }
        ptr::copy_nonoverlapping(c.values().as_ptr(), buf, len);
        Ok(())
    })
}

/// Energy `½∫ρ̄² + (ε/2)Σ∫ρ_i|u_i|² + εΣ∫|∇√ρ_i|²`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btr_energy(state: *const BtrState, params: *const BtrParams, out: *mut f64) -> BtrStatus {
    guard(|| {
        let s = &deref(state, "state")?.0;
        let p = &deref(params, "params")?.0;
        null_out(out, "out")?;
        *out = check(energy(s, p))?;
        Ok(())
    })
}

/// Entropy `Σ k_i^{-1}∫ρ_i(log ρ_i − 1)`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btr_entropy(state: *const BtrState, params: *const BtrParams, out: *mut f64) -> BtrStatus {
    guard(|| {
        let s = &deref(state, "state")?.0;
        let p = &deref(params, "params")?.0;
        null_out(out, "out")?;
        *out = check(entropy(s, p))?;
        Ok(())
    })
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btr_diagnostics(
    state: *const BtrState,
    params: *const BtrParams,
    out: *mut BtrDiagnostics,
) -> BtrStatus {
    guard(|| {
        let s = &deref(state, "state")?.0;
        let p = &deref(params, "params")?.0;
        null_out(out, "out")?;
        let d = check(collect_diagnostics(s, p, None))?;
        *out = BtrDiagnostics {
            time: d.time,
            energy: d.energy,
            entropy: d.entropy,
            h1: d.h1,
            h2: d.h2,
            mass_total: d.masses.iter().sum(),
            d_relax: d.d_relax,
            d_visc: d.d_visc,
            d_lin: d.d_lin,
            d_quartic: d.d_quartic,
            d_grad: d.d_grad,
            d_bohm_total: d.d_bohm.iter().sum(),
        };
        Ok(())
    })
}

/// Advance the relaxed system by `dt`; `scheme` is 1 or 2 for the first- or
/// second-order IMEX method. The result is a new handle in `out`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btr_nsk_step(
    state: *const BtrState,
    params: *const BtrParams,
    dt: f64,
    scheme: u32,
    out: *mut *mut BtrState,
) -> BtrStatus {
    guard(|| {
        let s = &deref(state, "state")?.0;
        let p = &deref(params, "params")?.0;
        null_out(out, "out")?;
        let scheme = match scheme {
            1 => Scheme::Imex1,
            2 => Scheme::Imex2,
            other => return Err(fail(BtrStatus::InvalidArgument, format!("scheme must be 1 or 2 (got {other})"))),
        };
        let cfg = NskConfig {
            scheme,
            ..NskConfig::new(*s.grid(), p.clone(), dt, dt)
        };
        let next = check(nsk_step(s, &cfg))?;
        *out = Box::into_raw(Box::new(BtrState(next)));
        Ok(())
    })
}

/// Advance the limit system by `dt`: with `a_ij = k_i`, or with the matrix
/// set by [`btr_params_set_matrix`] when one is attached.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btr_bt_step(
    state: *const BtrState,
    params: *const BtrParams,
    dt: f64,
    out: *mut *mut BtrState,
) -> BtrStatus {
    guard(|| {
        let s = &deref(state, "state")?.0;
        let p = &deref(params, "params")?.0;
        null_out(out, "out")?;
        let mode = if p.a_matrix.is_some() {
            BtMode::GeneralMatrix
        } else {
            BtMode::RankOne
        };
        let cfg = BtConfig {
            mode,
            ..BtConfig::new(*s.grid(), p.clone(), dt, dt)
        };
        let next = check(bt_step(s, &cfg))?;
        *out = Box::into_raw(Box::new(BtrState(next)));
        Ok(())
    })
}
