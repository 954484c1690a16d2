//! C ABI for `delegate-rla`.
//!
//! Elections live behind an opaque [`DrlaElection`] handle. Every fallible
//! function returns a [`DrlaStatus`]; on failure a message describing the
//! error is available from [`drla_last_error_message`] on the same thread.
//! Strings returned through `char **` out-parameters are owned by the caller
//! and must be released with [`drla_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use delegate_rla::model::{load_election, parse_election, ElectionProfile};
use delegate_rla::risk::{Asn, RiskParams};
use delegate_rla::spec::{estimate_audit_asn, generate, AuditLevel, AuditSpec};
use delegate_rla::tabulation::{tabulate, OutcomeReport};
use delegate_rla::viability::SpecStatus;
use delegate_rla::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrlaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed election, spec or parameters.
    InputError = 3,
    /// The contest has no defined outcome, for example no valid ballots.
    UnsupportedOutcome = 4,
    /// The audit cannot be completed short of a full manual count.
    FullCount = 5,
    /// An internal error; please report it.
    Internal = 6,
}

/// An election profile loaded from JSON.
pub struct DrlaElection {
    profile: ElectionProfile,
}

/// Risk parameters for spec generation and sample-size estimation.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DrlaRiskParams {
    pub alpha: f64,
    pub gamma: f64,
    pub error_rate: f64,
    pub trials: u32,
    pub seed: u64,
}

impl From<DrlaRiskParams> for RiskParams {
    fn from(p: DrlaRiskParams) -> Self {
        RiskParams { alpha: p.alpha, gamma: p.gamma, error_rate: p.error_rate, trials: p.trials, seed: p.seed }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(DrlaStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match err {
            Error::UnsupportedOutcome(_) => DrlaStatus::UnsupportedOutcome,
            Error::FullCount(_) => DrlaStatus::FullCount,
            _ => DrlaStatus::InputError,
        };
        Failure(status, err.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(err: serde_json::Error) -> Self {
        Failure(DrlaStatus::Internal, err.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<DrlaStatus, Failure>) -> DrlaStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            DrlaStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(DrlaStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(DrlaStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

fn null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(DrlaStatus::NullArgument, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(DrlaStatus::Internal, "output contains a NUL byte".into()))
}

unsafe fn store_election(profile: ElectionProfile, out: *mut *mut DrlaElection) {
    *out = Box::into_raw(Box::new(DrlaElection { profile }));
}

/// Default risk parameters: alpha 0.05, gamma 1.1, error rate 0.002, 20 trials, seed 0.
#[no_mangle]
pub extern "C" fn drla_risk_params_default() -> DrlaRiskParams {
    DrlaRiskParams { alpha: 0.05, gamma: 1.1, error_rate: 0.002, trials: 20, seed: 0 }
}

/// Parses an election from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drla_election_from_json(json: *const c_char, out: *mut *mut DrlaElection) -> DrlaStatus {
    guard(|| {
        null(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        store_election(parse_election(text)?, out);
        Ok(DrlaStatus::Ok)
    })
}

/// Loads an election JSON file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drla_election_from_path(path: *const c_char, out: *mut *mut DrlaElection) -> DrlaStatus {
    guard(|| {
        null(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        store_election(load_election(path)?, out);
        Ok(DrlaStatus::Ok)
    })
}

/// Releases an election handle. Null is ignored.
///
/// # Safety
/// `election` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn drla_election_free(election: *mut DrlaElection) {
    if !election.is_null() {
        drop(Box::from_raw(election));
    }
}

/// Number of candidates on the roster, or 0 for a null handle.
///
/// # Safety
/// `election` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn drla_election_candidate_count(election: *const DrlaElection) -> u32 {
    election.as_ref().map_or(0, |e| e.profile.roster().len() as u32)
}

/// Total ballots cast, blank ballots included, or 0 for a null handle.
///
/// # Safety
/// `election` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn drla_election_total_ballots(election: *const DrlaElection) -> u64 {
    election.as_ref().map_or(0, |e| e.profile.total_ballots())
}

/// Tabulates viability and the delegate allocation; writes the outcome report as JSON.
///
/// # Safety
/// `election` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drla_tabulate(election: *const DrlaElection, out_json: *mut *mut c_char) -> DrlaStatus {
    guard(|| {
        null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        null(election, "election")?;
        let profile = &(*election).profile;
        let outcome = tabulate(profile)?;
        let json = serde_json::to_string(&OutcomeReport::new(profile, &outcome))?;
        *out_json = into_c_string(json)?;
        Ok(DrlaStatus::Ok)
    })
}

/// Generates an audit specification at `level` (1, 2 or 3) and writes it as JSON.
///
/// When no affordable assertion set exists the spec is still written and
/// the call returns `FullCount`.
///
/// # Safety
/// `election` must be a live handle, `params` and `out_json` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn drla_generate_spec(
    election: *const DrlaElection,
    level: u8,
    params: *const DrlaRiskParams,
    out_json: *mut *mut c_char,
) -> DrlaStatus {
    guard(|| {
        null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        null(election, "election")?;
        null(params, "params")?;
        let level = AuditLevel::new(level)?;
        let params = RiskParams::from(*params);
        params.validate()?;
        let g = generate(&(*election).profile, level, params)?;
        *out_json = into_c_string(g.spec.to_json()?)?;
        if g.spec.status == SpecStatus::RequiresFullCount {
            set_last_error("no affordable assertion set; a full manual count is required");
            return Ok(DrlaStatus::FullCount);
        }
        Ok(DrlaStatus::Ok)
    })
}

/// Estimated number of ballot draws for a spec JSON under `params`.
///
/// Returns `FullCount` when the estimate reaches the ballot count.
///
/// # Safety
/// `spec_json` must be a valid C string, `params` and `out_draws` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn drla_estimate_asn(
    spec_json: *const c_char,
    params: *const DrlaRiskParams,
    out_draws: *mut u64,
) -> DrlaStatus {
    guard(|| {
        null(out_draws, "out_draws")?;
        null(params, "params")?;
        let spec = AuditSpec::from_json(str_arg(spec_json, "spec_json")?)?;
        let params = RiskParams::from(*params);
        params.validate()?;
        match estimate_audit_asn(&spec, &params) {
            Asn::Draws(n) => {
                *out_draws = n;
                Ok(DrlaStatus::Ok)
            }
            Asn::FullCount => {
                *out_draws = spec.total_ballots;
                Err(Failure(DrlaStatus::FullCount, "estimated sample size reaches the ballot count".into()))
            }
        }
    })
}

/// Message for the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn drla_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn drla_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn drla_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
