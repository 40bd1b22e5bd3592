//! C ABI over the `batchsched` crate.
//!
//! Instances and schedules cross the boundary as opaque handles created by
//! the `bs_*` constructors and released with the matching `*_free`
//! function. Every fallible call returns a [`BsStatus`]; on failure a
//! description is available from [`bs_last_error_message`] on the same
//! thread. Strings handed out by the library must be released with
//! [`bs_string_free`]. Panics never unwind into the caller; they surface as
//! `BS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use batchsched::codec::{instance_from_json, instance_to_json, schedule_from_json, schedule_to_json, CodecError};
use batchsched::construct::wmct_wavga;
use batchsched::instgen::{generate, GenParams};
use batchsched::schedule::check_feasibility;
use batchsched::search::{run, Matheuristic, Method, Params, Variant};
use batchsched::{evaluate, Instance, Schedule};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// JSON input could not be parsed.
    ParseError = 3,
    /// The instance data violates a model constraint.
    InvalidInstance = 4,
    /// The schedule does not fit the instance.
    InfeasibleSchedule = 5,
    /// A numeric argument is out of range.
    InvalidArgument = 6,
    /// The library panicked; the message holds the panic payload.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsMethod {
    Ils = 0,
    Grasp = 1,
}

/// Search parameters. Obtain defaults from [`bs_params_default`].
///
/// Time limits `<= 0` and a node limit of `0` mean "no limit".
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsParams {
    pub rho: f64,
    pub phi: f64,
    pub omega: f64,
    pub delta: f64,
    pub rcl_alpha: f64,
    pub omega_max: u32,
    /// Seconds per sub-solve.
    pub sub_time_limit: f64,
    /// Branch-and-bound nodes per sub-solve.
    pub sub_node_limit: u64,
    /// Seconds for the whole run.
    pub time_limit: f64,
    /// Drop every clock limit so results depend only on the seed.
    pub deterministic: bool,
}

/// Instance generator settings. Obtain defaults from [`bs_gen_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsGenParams {
    pub num_ops: usize,
    pub num_machines: usize,
    pub release_factor: f64,
    pub eligibility_factor: f64,
    pub job_assoc_factor: f64,
    pub seed: u64,
}

/// Opaque instance handle.
pub struct BsInstance(Instance);

/// Opaque schedule handle.
pub struct BsSchedule(Schedule);

struct Failure(BsStatus, String);

impl Failure {
    fn new(status: BsStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        let status = match e {
            CodecError::Invalid(_) => BsStatus::InvalidInstance,
            _ => BsStatus::ParseError,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            BsStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(BsStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(BsStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(BsStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure::new(BsStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON output has no NUL bytes").into_raw()
}

fn feasible(inst: &Instance, sched: &Schedule) -> Result<(), Failure> {
    let v = check_feasibility(inst, sched);
    if v.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = v.iter().map(ToString::to_string).collect();
    Err(Failure::new(BsStatus::InfeasibleSchedule, lines.join("; ")))
}

impl BsParams {
    fn to_params(self) -> Result<Params, Failure> {
        let mut p = Params::default();
        let secs = |v: f64| if v > 0.0 { v.to_string() } else { "none".into() };
        let nodes = if self.sub_node_limit == 0 { "none".into() } else { self.sub_node_limit.to_string() };
        let pairs = [
            ("rho", self.rho.to_string()),
            ("phi", self.phi.to_string()),
            ("omega", self.omega.to_string()),
            ("delta", self.delta.to_string()),
            ("rcl_alpha", self.rcl_alpha.to_string()),
            ("omega_max", self.omega_max.to_string()),
            ("sub_time_limit", secs(self.sub_time_limit)),
            ("sub_node_limit", nodes),
            ("time_limit", secs(self.time_limit)),
        ];
        for (k, v) in pairs {
            p.set(k, &v).map_err(|e| Failure::new(BsStatus::InvalidArgument, e.to_string()))?;
        }
        if self.deterministic {
            p.make_deterministic();
        }
        Ok(p)
    }
}

/// Message of the last failed call on this thread, or null after a
/// successful one. The pointer stays valid until the next fallible call on
/// the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn bs_params_default() -> BsParams {
    let p = Params::default();
    BsParams {
        rho: p.rho,
        phi: p.phi,
        omega: p.omega,
        delta: p.delta,
        rcl_alpha: p.rcl_alpha,
        omega_max: p.omega_max,
        sub_time_limit: p.sub_time_limit.unwrap_or(0.0),
        sub_node_limit: p.sub_node_limit.unwrap_or(0),
        time_limit: p.time_limit.unwrap_or(0.0),
        deterministic: false,
    }
}

#[no_mangle]
pub extern "C" fn bs_gen_params_default(num_ops: usize, num_machines: usize, seed: u64) -> BsGenParams {
    let g = GenParams::new(num_ops, num_machines, seed);
    BsGenParams {
        num_ops: g.num_ops,
        num_machines: g.num_machines,
        release_factor: g.release_factor,
        eligibility_factor: g.eligibility_factor,
        job_assoc_factor: g.job_assoc_factor,
        seed: g.seed,
    }
}

/// Parses an instance from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_from_json(json: *const c_char, out: *mut *mut BsInstance) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let inst = instance_from_json(text(json, "json")?)?;
        *out = Box::into_raw(Box::new(BsInstance(inst)));
        Ok(())
    })
}

/// Generates a random instance.
///
/// # Safety
/// `params` must point to a valid struct; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_generate(params: *const BsGenParams, out: *mut *mut BsInstance) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let p = arg(params, "params")?;
        let g = GenParams {
            num_ops: p.num_ops,
            num_machines: p.num_machines,
            release_factor: p.release_factor,
            eligibility_factor: p.eligibility_factor,
            job_assoc_factor: p.job_assoc_factor,
            seed: p.seed,
        };
        g.check().map_err(|e| Failure::new(BsStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(BsInstance(generate(&g))));
        Ok(())
    })
}

/// Serializes an instance; release the result with [`bs_string_free`].
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_to_json(inst: *const BsInstance, out: *mut *mut c_char) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = into_c_string(instance_to_json(&arg(inst, "inst")?.0));
        Ok(())
    })
}

/// Number of operations, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_num_ops(inst: *const BsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.num_ops())
}

/// Number of jobs, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_num_jobs(inst: *const BsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.num_jobs())
}

/// Number of machines, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_num_machines(inst: *const BsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.num_machines())
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_instance_free(inst: *mut BsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Builds the greedy constructive schedule.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_schedule_construct(inst: *const BsInstance, out: *mut *mut BsSchedule) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = wmct_wavga(&arg(inst, "inst")?.0);
        *out = Box::into_raw(Box::new(BsSchedule(s)));
        Ok(())
    })
}

/// Parses a schedule and checks it against `inst`.
///
/// # Safety
/// `inst` must be a live handle, `json` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bs_schedule_from_json(
    inst: *const BsInstance,
    json: *const c_char,
    out: *mut *mut BsSchedule,
) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let inst = &arg(inst, "inst")?.0;
        let s = schedule_from_json(text(json, "json")?, inst.num_machines())?;
        feasible(inst, &s)?;
        *out = Box::into_raw(Box::new(BsSchedule(s)));
        Ok(())
    })
}

/// Serializes a schedule; release the result with [`bs_string_free`].
///
/// # Safety
/// `sched` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_schedule_to_json(sched: *const BsSchedule, out: *mut *mut c_char) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = into_c_string(schedule_to_json(&arg(sched, "sched")?.0));
        Ok(())
    })
}

/// Total weighted completion time of `sched`. When `job_completion` is
/// not null, the first `len` job completion times are written there too.
///
/// # Safety
/// Handles must be live; `out_twct` writable; `job_completion` null or
/// valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn bs_schedule_evaluate(
    inst: *const BsInstance,
    sched: *const BsSchedule,
    out_twct: *mut i64,
    job_completion: *mut i64,
    len: usize,
) -> BsStatus {
    guard(|| {
        let out_twct = out(out_twct, "out_twct")?;
        let inst = &arg(inst, "inst")?.0;
        let sched = &arg(sched, "sched")?.0;
        feasible(inst, sched)?;
        let ev = evaluate(inst, sched).map_err(|e| Failure::new(BsStatus::InfeasibleSchedule, e.to_string()))?;
        if !job_completion.is_null() {
            let n = len.min(ev.job_completion.len());
            ptr::copy_nonoverlapping(ev.job_completion.as_ptr(), job_completion, n);
        }
        *out_twct = ev.twct;
        Ok(())
    })
}

/// # Safety
/// `sched` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_schedule_free(sched: *mut BsSchedule) {
    if !sched.is_null() {
        drop(Box::from_raw(sched));
    }
}

/// Runs a matheuristic (`variant` 1, 2 or 3) and returns the best schedule
/// found. `params` may be null for the defaults; `out_twct` may be null.
///
/// # Safety
/// `inst` must be a live handle, `params` null or valid, `out_sched`
/// writable and `out_twct` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_solve(
    inst: *const BsInstance,
    method: BsMethod,
    variant: u32,
    params: *const BsParams,
    seed: u64,
    out_sched: *mut *mut BsSchedule,
    out_twct: *mut i64,
) -> BsStatus {
    guard(|| {
        let out_sched = out_ptr(out_sched)?;
        let inst = &arg(inst, "inst")?.0;
        let params = match params.as_ref() {
            Some(p) => p.to_params()?,
            None => Params::default(),
        };
        let variant = match variant {
            1 => Variant::One,
            2 => Variant::Two,
            3 => Variant::Three,
            v => return Err(Failure::new(BsStatus::InvalidArgument, format!("variant {v} is not 1, 2 or 3"))),
        };
        let method = match method {
            BsMethod::Ils => Method::Ils,
            BsMethod::Grasp => Method::Grasp,
        };
        let outcome = run(inst, Matheuristic { method, variant }, &params, seed);
        if let Some(t) = out_twct.as_mut() {
            *t = outcome.twct;
        }
        *out_sched = Box::into_raw(Box::new(BsSchedule(outcome.schedule)));
        Ok(())
    })
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T) -> Result<&'a mut *mut T, Failure> {
    let slot = out(p, "out")?;
    *slot = ptr::null_mut();
    Ok(slot)
}
