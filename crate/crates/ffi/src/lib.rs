//! C ABI over `fermi-core`.
//!
//! Every entry point returns a [`FermiStatus`]; on failure a description is
//! available from [`fermi_last_error_message`] on the same thread. Objects
//! cross the boundary as opaque handles that the caller owns and releases
//! with the matching `_free` function. Coordinate axes are zero-based here,
//! unlike the command line.
//!
//! The header `include/fermi.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fermi_core::analysis::{analyze_kernel, mc_defect, KernelConfig, QuadrupleSampler, SphericalFunction};
use fermi_core::funcspec::resolve_function;
use fermi_core::geometry::{Direction, SpherePoint};
use fermi_core::kinematics::{construct_quadruple, post_collision_quantum, CollisionPair, QuadrupleSeed};
use fermi_core::simulator::{init_ensemble, Ensemble, InitDistribution};
use fermi_core::Error;

/// Largest dimension accepted across the boundary; guards against garbage
/// lengths turning into huge slices.
const MAX_DIM: usize = 1 << 16;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FermiStatus {
    Ok = 0,
    InvalidArgument = 1,
    UnsupportedDimension = 2,
    DegenerateSeed = 3,
    RankDeficient = 4,
    UnderDetermined = 5,
    NotAnInvariant = 6,
    UnsupportedConfiguration = 7,
    ParseError = 8,
    EvalError = 9,
    DataError = 10,
    IoError = 11,
    NullPointer = 12,
    /// A Rust panic was caught at the boundary; the handle arguments of the
    /// call should be considered unusable.
    Panic = 13,
}

impl From<&Error> for FermiStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => FermiStatus::InvalidArgument,
            Error::UnsupportedDimension { .. } => FermiStatus::UnsupportedDimension,
            Error::DegenerateSeed(_) => FermiStatus::DegenerateSeed,
            Error::RankDeficient(_) => FermiStatus::RankDeficient,
            Error::UnderDetermined { .. } => FermiStatus::UnderDetermined,
            Error::NotAnInvariant(_) => FermiStatus::NotAnInvariant,
            Error::UnsupportedConfiguration(_) => FermiStatus::UnsupportedConfiguration,
            Error::Parse(_) => FermiStatus::ParseError,
            Error::Eval(_) => FermiStatus::EvalError,
            Error::Data { .. } => FermiStatus::DataError,
            Error::Io(_) => FermiStatus::IoError,
        }
    }
}

/// Parsed function on a sphere.
pub struct FermiFunction {
    inner: SphericalFunction,
}

/// Particle ensemble evolved one collision per step.
pub struct FermiEnsemble {
    inner: Ensemble,
}

/// Defect statistics over sampled admissible quadruples.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FermiDefectStats {
    pub sample_count: usize,
    pub mean_abs_defect: f64,
    pub max_abs_defect: f64,
    pub rms_defect: f64,
    /// RMS of the function over the sampled points.
    pub function_rms: f64,
    pub normalized_mean_defect: f64,
    pub normalized_max_defect: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(FermiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(FermiStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FermiStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(FermiStatus::InvalidArgument, msg.into())
}

fn set_last_error(msg: &str) {
    // Interior NULs cannot be represented; truncate at the first one.
    let bytes = msg.split('\0').next().unwrap_or_default();
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FermiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            FermiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            FermiStatus::Panic
        }
    }
}

fn check_dim(dim: usize) -> Result<(), Failure> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(invalid(format!("dimension {dim} outside [2, {MAX_DIM}]")));
    }
    Ok(())
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Message describing the most recent failed call on this thread, or an
/// empty string after a successful one. The pointer stays valid until the
/// next `fermi_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fermi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fermi_version() -> *const c_char {
    const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Outgoing velocities of the quantized collision of `omega`, `omega_star`
/// (both of length `dim`, on the sphere of radius `radius`) along the unit
/// direction `n`, which must be orthogonal to `omega + omega_star`.
/// `out1` and `out2` receive `dim` values each.
///
/// # Safety
/// Every pointer must be valid for `dim` doubles; outputs must not alias inputs.
#[no_mangle]
pub unsafe extern "C" fn fermi_collide(
    dim: usize,
    radius: f64,
    omega: *const f64,
    omega_star: *const f64,
    n: *const f64,
    out1: *mut f64,
    out2: *mut f64,
) -> FermiStatus {
    guard(|| {
        check_dim(dim)?;
        let w = input(omega, dim, "omega")?;
        let ws = input(omega_star, dim, "omega_star")?;
        let n = input(n, dim, "n")?;
        let o1 = output(out1, dim, "out1")?;
        let o2 = output(out2, dim, "out2")?;
        let pair = CollisionPair::new(
            SpherePoint::new(w.to_vec(), radius)?,
            SpherePoint::new(ws.to_vec(), radius)?,
        )?;
        let q = post_collision_quantum(&pair, &Direction::new(n.to_vec())?)?;
        o1.copy_from_slice(q.out1.as_slice());
        o2.copy_from_slice(q.out2.as_slice());
        Ok(())
    })
}

/// Admissible quadruple on the unit sphere from the scalar seed
/// `(s, t, u, v)` with `s + t = u + v`, built around coordinate `axis`
/// (zero-based). `out` receives the four points consecutively,
/// `4 * dim` values: `omega, omega_star, omega', omega_star'`.
///
/// # Safety
/// `out` must be valid for `4 * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn fermi_construct_quadruple(
    s: f64,
    t: f64,
    u: f64,
    v: f64,
    axis: usize,
    dim: usize,
    out: *mut f64,
) -> FermiStatus {
    guard(|| {
        check_dim(dim)?;
        let out = output(out, 4 * dim, "out")?;
        let (q, _) = construct_quadruple(&QuadrupleSeed::new(s, t, u, v, axis, dim)?)?;
        for (chunk, p) in out.chunks_exact_mut(dim).zip(q.points()) {
            chunk.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// Parses `spec` (an expression in `w1..wd`, or `fourier:cos:K`,
/// `fourier:sin:K`, `sh:L:M`) as a function on the sphere of radius
/// `radius` in dimension `dim`. On success `*out` owns a new handle.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermi_function_parse(
    spec: *const c_char,
    dim: usize,
    radius: f64,
    out: *mut *mut FermiFunction,
) -> FermiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        check_dim(dim)?;
        let spec = text(spec, "spec")?;
        let inner = resolve_function(spec, dim, radius)?;
        *out = Box::into_raw(Box::new(FermiFunction { inner }));
        Ok(())
    })
}

/// Evaluates `f` at `point` (length = the function's dimension). The point
/// is used as given; it is not projected onto the sphere.
///
/// # Safety
/// `f` must come from `fermi_function_parse`; `point` must hold the
/// function's dimension of doubles.
#[no_mangle]
pub unsafe extern "C" fn fermi_function_eval(f: *const FermiFunction, point: *const f64, out: *mut f64) -> FermiStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("f"))?;
        let x = input(point, f.inner.dim(), "point")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = f.inner.eval_coords(x)?;
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from `fermi_function_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fermi_function_free(f: *mut FermiFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Monte Carlo invariance defect of `f` over `count` sampled admissible
/// quadruples, using the default sampler for the function's dimension.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermi_mc_defect(
    f: *const FermiFunction,
    count: usize,
    seed: u64,
    out: *mut FermiDefectStats,
) -> FermiStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("f"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let sampler = QuadrupleSampler::default_for(f.inner.dim());
        let r = mc_defect(&f.inner, count, sampler, seed)?;
        *out = FermiDefectStats {
            sample_count: r.sample_count,
            mean_abs_defect: r.mean_abs_defect,
            max_abs_defect: r.max_abs_defect,
            rms_defect: r.rms_defect,
            function_rms: r.function_rms,
            normalized_mean_defect: r.normalized_mean_defect,
            normalized_max_defect: r.normalized_max_defect,
        };
        Ok(())
    })
}

/// Numerical dimension of the space of collision invariants spanned by the
/// default basis of degree `degree` in dimension `dim`, from `samples`
/// quadruples at relative tolerance `tol`. `predicted` (may be null)
/// receives the dimension the characterization predicts.
///
/// # Safety
/// `kernel_dim` must be writable; `predicted` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn fermi_kernel_dimension(
    dim: usize,
    degree: u32,
    samples: usize,
    seed: u64,
    tol: f64,
    kernel_dim: *mut usize,
    predicted: *mut usize,
) -> FermiStatus {
    guard(|| {
        if kernel_dim.is_null() {
            return Err(null("kernel_dim"));
        }
        check_dim(dim)?;
        let mut config = KernelConfig::new(dim, degree, samples, seed);
        config.tol = tol;
        let report = analyze_kernel(&config)?;
        *kernel_dim = report.kernel_dimension;
        if !predicted.is_null() {
            *predicted = report.predicted_dimension.unwrap_or(0);
        }
        Ok(())
    })
}

/// New ensemble of `particles` points on the sphere of radius `radius`.
/// `init` is `uniform`, `cap:AXIS,ANGLE` or `antipodal-paired-cap:AXIS,ANGLE`
/// (the textual form uses a one-based axis, as on the command line).
///
/// # Safety
/// `init` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermi_ensemble_new(
    dim: usize,
    radius: f64,
    particles: usize,
    init: *const c_char,
    seed: u64,
    out: *mut *mut FermiEnsemble,
) -> FermiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        check_dim(dim)?;
        let dist: InitDistribution = text(init, "init")?.parse()?;
        let inner = init_ensemble(dim, radius, particles, dist, seed)?;
        *out = Box::into_raw(Box::new(FermiEnsemble { inner }));
        Ok(())
    })
}

/// Applies `steps` collisions.
///
/// # Safety
/// `e` must be a live handle not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn fermi_ensemble_step(e: *mut FermiEnsemble, steps: u64) -> FermiStatus {
    guard(|| {
        let e = e.as_mut().ok_or_else(|| null("e"))?;
        for _ in 0..steps {
            e.inner.collision_step()?;
        }
        Ok(())
    })
}

/// Ensemble mean and standard deviation of `f`; `std_dev` may be null.
///
/// # Safety
/// Handles must be live; `mean` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermi_ensemble_moment(
    e: *const FermiEnsemble,
    f: *const FermiFunction,
    mean: *mut f64,
    std_dev: *mut f64,
) -> FermiStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("e"))?;
        let f = f.as_ref().ok_or_else(|| null("f"))?;
        if mean.is_null() {
            return Err(null("mean"));
        }
        if f.inner.dim() != e.inner.dim() {
            return Err(invalid(format!(
                "function has dimension {}, ensemble has {}",
                f.inner.dim(),
                e.inner.dim()
            )));
        }
        let (m, s) = e.inner.moment(&f.inner)?;
        *mean = m;
        if !std_dev.is_null() {
            *std_dev = s;
        }
        Ok(())
    })
}

/// Number of particles, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fermi_ensemble_len(e: *const FermiEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.inner.len())
}

/// Collisions applied so far, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fermi_ensemble_steps(e: *const FermiEnsemble) -> u64 {
    e.as_ref().map_or(0, |e| e.inner.steps())
}

/// Copies the particle coordinates, row-major, into `out`, which holds
/// `capacity` doubles and must fit `len * dim` of them.
///
/// # Safety
/// `e` must be a live handle; `out` must be valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fermi_ensemble_particles(
    e: *const FermiEnsemble,
    out: *mut f64,
    capacity: usize,
) -> FermiStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("e"))?;
        let needed = e.inner.len() * e.inner.dim();
        if capacity < needed {
            return Err(invalid(format!(
                "capacity {capacity} is below the {needed} values required"
            )));
        }
        let out = output(out, needed, "out")?;
        for (chunk, p) in out.chunks_exact_mut(e.inner.dim()).zip(e.inner.particles()) {
            chunk.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a handle from `fermi_ensemble_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fermi_ensemble_free(e: *mut FermiEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}
