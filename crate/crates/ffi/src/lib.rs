//! C interface to `orbitglue`.
//!
//! Systems and suspensions are opaque handles created by `*_new` and released
//! by `*_free`. Every fallible call returns an [`OgStatus`]; on failure the
//! message is kept per thread and read back with [`og_last_error_message`].
//!
//! Function tables are dense arrays of `size^depth` doubles indexed by the
//! word `w_0 .. w_{depth-1}` read as a base-`size` number, `w_0` most
//! significant. Entries for inadmissible words are ignored.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use orbitglue::deviations::{FlowProblem, flow_free_energy};
use orbitglue::gluing::{discrete_gluing_bound, flow_gluing_scale};
use orbitglue::sft::TransitionSystem;
use orbitglue::suspension::{FlowObservable, SuspensionSystem};
use orbitglue::thermo::{pressure, LocallyConstantFunction};
use orbitglue::Error;

/// Largest table accepted across the boundary, matching the library limit.
const MAX_TABLE: usize = 1 << 24;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    OutsideRange = 4,
    Panic = 5,
}

/// Subshift of finite type.
pub struct OgSystem {
    inner: TransitionSystem,
}

/// Suspension flow over a subshift with a locally constant roof.
pub struct OgSuspension {
    inner: SuspensionSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(message: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.as_bytes().to_vec());
}

struct Failure(OgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::OutsideFeasibleRange { .. } => OgStatus::OutsideRange,
            ref e if e.is_numerical() => OgStatus::Numerical,
            _ => OgStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OgStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OgStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OgStatus::Panic
        }
    }
}

unsafe fn table(
    sys: &TransitionSystem,
    values: *const f64,
    depth: usize,
    what: &str,
) -> Result<LocallyConstantFunction, Failure> {
    if values.is_null() {
        return Err(null(what));
    }
    let k = sys.size();
    let len = u32::try_from(depth)
        .ok()
        .and_then(|d| k.checked_pow(d))
        .filter(|&n| n <= MAX_TABLE && depth > 0)
        .ok_or_else(|| Failure(OgStatus::InvalidArgument, format!("{what}: unsupported depth {depth}")))?;
    let values = std::slice::from_raw_parts(values, len);
    let f = LocallyConstantFunction::from_fn(sys, depth, |w| {
        values[w.iter().fold(0, |acc, &s| acc * k + s as usize)]
    })?;
    if f.entries().iter().any(|(_, v)| !v.is_finite()) {
        return Err(Failure(OgStatus::InvalidArgument, format!("{what}: admissible entries must be finite")));
    }
    Ok(f)
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Version string of the library, NUL terminated and statically allocated.
#[no_mangle]
pub extern "C" fn og_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buffer`, truncating to
/// `capacity - 1` bytes and NUL terminating. Returns the untruncated length.
///
/// # Safety
/// `buffer` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn og_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        if !buffer.is_null() && capacity > 0 {
            let n = message.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(message.as_ptr(), buffer.cast(), n);
            *buffer.add(n) = 0;
        }
        message.len()
    })
}

/// Builds a system from a row-major `size x size` matrix of 0/1 entries.
///
/// # Safety
/// `matrix` must point to `size * size` bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_system_new(matrix: *const u8, size: usize, out: *mut *mut OgSystem) -> OgStatus {
    guard(|| {
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        let cells = size.checked_mul(size).ok_or_else(|| Failure(OgStatus::InvalidArgument, "size overflows".into()))?;
        let cells = std::slice::from_raw_parts(matrix, cells);
        let rows: Vec<Vec<i64>> = cells.chunks(size.max(1)).map(|r| r.iter().map(|&v| v as i64).collect()).collect();
        let inner = TransitionSystem::from_rows(&rows)?;
        write(out, Box::into_raw(Box::new(OgSystem { inner })), "out")
    })
}

/// # Safety
/// `sys` must be null or a handle from [`og_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn og_system_free(sys: *mut OgSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Alphabet size, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn og_system_size(sys: *const OgSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.size())
}

/// Topological pressure of a potential table.
///
/// # Safety
/// `values` must hold `size^depth` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_pressure(sys: *const OgSystem, values: *const f64, depth: usize, out: *mut f64) -> OgStatus {
    guard(|| {
        let sys = &sys.as_ref().ok_or_else(|| null("sys"))?.inner;
        let u = table(sys, values, depth, "values")?;
        write(out, pressure(sys, &u)?, "out")
    })
}

/// Gluing bound `N(epsilon)` of the discrete system.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_discrete_gluing_bound(sys: *const OgSystem, epsilon: f64, out: *mut usize) -> OgStatus {
    guard(|| {
        let sys = &sys.as_ref().ok_or_else(|| null("sys"))?.inner;
        write(out, discrete_gluing_bound(sys, epsilon)?, "out")
    })
}

/// Suspension of a copy of `sys` under a positive roof table.
///
/// # Safety
/// `roof` must hold `size^depth` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_suspension_new(
    sys: *const OgSystem,
    roof: *const f64,
    depth: usize,
    out: *mut *mut OgSuspension,
) -> OgStatus {
    guard(|| {
        let sys = &sys.as_ref().ok_or_else(|| null("sys"))?.inner;
        let roof = table(sys, roof, depth, "roof")?;
        let inner = SuspensionSystem::new(sys.clone(), roof)?;
        write(out, Box::into_raw(Box::new(OgSuspension { inner })), "out")
    })
}

/// # Safety
/// `susp` must be null or a handle from [`og_suspension_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn og_suspension_free(susp: *mut OgSuspension) {
    if !susp.is_null() {
        drop(Box::from_raw(susp));
    }
}

/// Internal scale `xi` and flow gluing bound `T(epsilon)`.
///
/// # Safety
/// `susp` must be a live handle; `xi` and `bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_flow_gluing_scale(
    susp: *const OgSuspension,
    epsilon: f64,
    xi: *mut f64,
    bound: *mut f64,
) -> OgStatus {
    guard(|| {
        let susp = &susp.as_ref().ok_or_else(|| null("susp"))?.inner;
        let (x, t) = flow_gluing_scale(susp, epsilon)?;
        write(xi, x, "xi")?;
        write(bound, t, "bound")
    })
}

unsafe fn observables(
    susp: &SuspensionSystem,
    phi: *const f64,
    phi_depth: usize,
    psi: *const f64,
    psi_depth: usize,
) -> Result<(FlowObservable, FlowObservable), Failure> {
    Ok((
        FlowObservable::new(table(susp.base(), phi, phi_depth, "phi")?),
        FlowObservable::new(table(susp.base(), psi, psi_depth, "psi")?),
    ))
}

/// Free energy `c(q)` for fiberwise-constant `phi` and `psi`.
///
/// # Safety
/// Tables must hold `size^depth` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_free_energy(
    susp: *const OgSuspension,
    phi: *const f64,
    phi_depth: usize,
    psi: *const f64,
    psi_depth: usize,
    q: f64,
    out: *mut f64,
) -> OgStatus {
    guard(|| {
        let susp = &susp.as_ref().ok_or_else(|| null("susp"))?.inner;
        let (phi, psi) = observables(susp, phi, phi_depth, psi, psi_depth)?;
        write(out, flow_free_energy(susp, &phi, &psi, q)?, "out")
    })
}

/// Rate function `I(s)` of flow averages of `psi` under the equilibrium of
/// `phi`, with the maximizing tilt `q*`. Returns `OG_STATUS_OUTSIDE_RANGE`
/// outside the open feasible interval.
///
/// # Safety
/// Tables must hold `size^depth` doubles; `rate` and `q_star` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_rate_function(
    susp: *const OgSuspension,
    phi: *const f64,
    phi_depth: usize,
    psi: *const f64,
    psi_depth: usize,
    s: f64,
    rate: *mut f64,
    q_star: *mut f64,
) -> OgStatus {
    guard(|| {
        let susp = &susp.as_ref().ok_or_else(|| null("susp"))?.inner;
        let (phi, psi) = observables(susp, phi, phi_depth, psi, psi_depth)?;
        let (i, q) = FlowProblem::new(susp, &phi, &psi)?.rate(s)?;
        write(rate, i, "rate")?;
        write(q_star, q, "q_star")
    })
}

/// Closure of the set of attainable flow averages of `psi`.
///
/// # Safety
/// `psi` must hold `size^depth` doubles; `min` and `max` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_feasible_range(
    susp: *const OgSuspension,
    psi: *const f64,
    psi_depth: usize,
    min: *mut f64,
    max: *mut f64,
) -> OgStatus {
    guard(|| {
        let susp = &susp.as_ref().ok_or_else(|| null("susp"))?.inner;
        let psi = FlowObservable::new(table(susp.base(), psi, psi_depth, "psi")?);
        let phi = FlowObservable::new(LocallyConstantFunction::constant(susp.base(), 0.0));
        let (lo, hi) = FlowProblem::new(susp, &phi, &psi)?.feasible_range()?;
        write(min, lo, "min")?;
        write(max, hi, "max")
    })
}
