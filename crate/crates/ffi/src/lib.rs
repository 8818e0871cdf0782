//! C interface to the `chancode` library.
//!
//! Objects cross the boundary as opaque handles created by `cc_*` constructors
//! and released with the matching `cc_*_free`. Every fallible call returns a
//! [`CcStatus`]; on failure a description is available from
//! [`cc_last_error_message`] on the same thread. Panics never cross the
//! boundary: they are caught and reported as [`CcStatus::Panic`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chancode::channels::{depolarizing, flip_channel, pauli_transfer, FlipAxis, KrausChannel};
use chancode::circuit::{figure3, Figure3Config, Panel};
use chancode::discrim::{
    omp_check, optimal_discrimination, success_probability, update_measurement, Povm,
};
use chancode::ensembles::{apply_channel_to_ensemble, ensemble_from_json, Builtin, Ensemble};
use chancode::protocol::run_exact;
use chancode::twirl::{fit_depolarizing, tetrahedral_design, twirl_channel};
use chancode::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    NotTracePreserving = 5,
    ConvergenceFailure = 6,
    NotEqualPriors = 7,
    NotResolvable = 8,
    DegeneratePair = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Opaque ensemble handle.
pub struct CcEnsemble(Ensemble);

/// Opaque channel handle.
pub struct CcChannel(KrausChannel);

/// Opaque measurement handle.
pub struct CcPovm(Povm);

/// Summary of an optimal-measurement computation.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CcDiscrimSummary {
    pub p_guess: f64,
    pub certificate_residual: f64,
    pub trivial: bool,
}

/// Outcome of the sufficient OMP check; `kappa` is NaN when no common factor exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CcOmpResult {
    pub holds: bool,
    pub kappa: f64,
    pub max_residual: f64,
    pub degenerate_pairs: usize,
}

/// Exact protocol report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CcProtocolReport {
    pub p_id: f64,
    pub p_n: f64,
    pub p_n_fixed: f64,
    pub p_tn: f64,
    pub eta_fit: f64,
    pub measurement_updated: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("interior NULs removed"));
}

struct Failure(CcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => CcStatus::Parse,
            Error::NotTracePreserving(_) => CcStatus::NotTracePreserving,
            Error::ConvergenceFailure(_) => CcStatus::ConvergenceFailure,
            Error::NotEqualPriors => CcStatus::NotEqualPriors,
            Error::NotResolvable => CcStatus::NotResolvable,
            Error::DegeneratePair => CcStatus::DegeneratePair,
            _ => CcStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(CcStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            CcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CcStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    put(out, Box::into_raw(Box::new(value)), "output handle pointer")
}

/// Message describing the last failed call on this thread (empty after a success).
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- ensembles ----

/// Builtin ensemble by name: "SZ", "SBB84" or "TRINE_MOD".
#[no_mangle]
pub unsafe extern "C" fn cc_ensemble_builtin(
    name: *const c_char,
    out: *mut *mut CcEnsemble,
) -> CcStatus {
    guard(|| {
        let b: Builtin = str_arg(name, "name")?.parse()?;
        put_handle(out, CcEnsemble(b.build()))
    })
}

/// Ensemble from its JSON description.
#[no_mangle]
pub unsafe extern "C" fn cc_ensemble_from_json(
    json: *const c_char,
    out: *mut *mut CcEnsemble,
) -> CcStatus {
    guard(|| {
        let e = ensemble_from_json(str_arg(json, "json")?)?;
        put_handle(out, CcEnsemble(e))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cc_ensemble_len(e: *const CcEnsemble, out: *mut usize) -> CcStatus {
    guard(|| put(out, obj(e, "ensemble")?.0.len(), "out"))
}

/// New ensemble with every state sent through the channel.
#[no_mangle]
pub unsafe extern "C" fn cc_ensemble_apply_channel(
    e: *const CcEnsemble,
    n: *const CcChannel,
    out: *mut *mut CcEnsemble,
) -> CcStatus {
    guard(|| {
        let r = apply_channel_to_ensemble(&obj(e, "ensemble")?.0, &obj(n, "channel")?.0)?;
        put_handle(out, CcEnsemble(r))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cc_ensemble_free(e: *mut CcEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

// ---- channels ----

#[no_mangle]
pub unsafe extern "C" fn cc_channel_from_json(
    json: *const c_char,
    out: *mut *mut CcChannel,
) -> CcStatus {
    guard(|| {
        let n = chancode::channels::channel_from_json(str_arg(json, "json")?)?;
        put_handle(out, CcChannel(n))
    })
}

/// Flip channel; `axis` is 'X' or 'Y' (either case).
#[no_mangle]
pub unsafe extern "C" fn cc_channel_flip(
    axis: c_char,
    p: f64,
    out: *mut *mut CcChannel,
) -> CcStatus {
    guard(|| {
        let a = match axis as u8 {
            b'X' | b'x' => FlipAxis::X,
            b'Y' | b'y' => FlipAxis::Y,
            other => {
                return Err(Failure(
                    CcStatus::InvalidInput,
                    format!("unknown flip axis code {other}"),
                ))
            }
        };
        put_handle(out, CcChannel(flip_channel(a, p)?))
    })
}

/// Qubit depolarizing channel.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_depolarizing(eta: f64, out: *mut *mut CcChannel) -> CcStatus {
    guard(|| put_handle(out, CcChannel(depolarizing(eta, 2)?)))
}

/// Twirl over the 12-element tetrahedral design.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_twirl(
    n: *const CcChannel,
    out: *mut *mut CcChannel,
) -> CcStatus {
    guard(|| {
        let t = twirl_channel(&obj(n, "channel")?.0, &tetrahedral_design())?;
        put_handle(out, CcChannel(t))
    })
}

/// Depolarizing fit of a qubit channel; either output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_fit_depolarizing(
    n: *const CcChannel,
    eta: *mut f64,
    residual: *mut f64,
) -> CcStatus {
    guard(|| {
        let fit = fit_depolarizing(&obj(n, "channel")?.0)?;
        if !eta.is_null() {
            eta.write(fit.eta);
        }
        if !residual.is_null() {
            residual.write(fit.residual);
        }
        Ok(())
    })
}

/// Pauli transfer matrix, row-major into `out[16]`.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_pauli_transfer(n: *const CcChannel, out: *mut f64) -> CcStatus {
    guard(|| {
        let t = pauli_transfer(&obj(n, "channel")?.0)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let flat: Vec<f64> = t.t.iter().flatten().copied().collect();
        ptr::copy_nonoverlapping(flat.as_ptr(), out, 16);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cc_channel_free(n: *mut CcChannel) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

// ---- discrimination ----

/// Certified optimal measurement; `summary` may be null.
#[no_mangle]
pub unsafe extern "C" fn cc_discriminate(
    e: *const CcEnsemble,
    out: *mut *mut CcPovm,
    summary: *mut CcDiscrimSummary,
) -> CcStatus {
    guard(|| {
        let r = optimal_discrimination(&obj(e, "ensemble")?.0)?;
        if !summary.is_null() {
            summary.write(CcDiscrimSummary {
                p_guess: r.p_guess,
                certificate_residual: r.certificate_residual,
                trivial: r.trivial,
            });
        }
        put_handle(out, CcPovm(r.povm))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cc_povm_len(m: *const CcPovm, out: *mut usize) -> CcStatus {
    guard(|| put(out, obj(m, "povm")?.0.len(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn cc_povm_dim(m: *const CcPovm, out: *mut usize) -> CcStatus {
    guard(|| put(out, obj(m, "povm")?.0.dim(), "out"))
}

/// Copies element `index` row-major into `re` and `im`, each holding `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cc_povm_element(
    m: *const CcPovm,
    index: usize,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> CcStatus {
    guard(|| {
        let povm = &obj(m, "povm")?.0;
        let el = povm.elements().get(index).ok_or_else(|| {
            Failure(
                CcStatus::InvalidInput,
                format!("element {index} out of range"),
            )
        })?;
        let d = el.dim();
        if cap < d * d {
            return Err(Failure(
                CcStatus::BufferTooSmall,
                format!("need {} entries, got {cap}", d * d),
            ));
        }
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        for i in 0..d {
            for j in 0..d {
                re.add(i * d + j).write(el[(i, j)].re);
                im.add(i * d + j).write(el[(i, j)].im);
            }
        }
        Ok(())
    })
}

/// Measurement with every Bloch direction reversed.
#[no_mangle]
pub unsafe extern "C" fn cc_povm_update(m: *const CcPovm, out: *mut *mut CcPovm) -> CcStatus {
    guard(|| {
        let u = update_measurement(&obj(m, "povm")?.0)?;
        put_handle(out, CcPovm(u))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cc_success_probability(
    e: *const CcEnsemble,
    m: *const CcPovm,
    out: *mut f64,
) -> CcStatus {
    guard(|| {
        let p = success_probability(&obj(e, "ensemble")?.0, &obj(m, "povm")?.0)?;
        put(out, p, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cc_povm_free(m: *mut CcPovm) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ---- higher-level checks ----

#[no_mangle]
pub unsafe extern "C" fn cc_omp_check(
    e: *const CcEnsemble,
    n: *const CcChannel,
    out: *mut CcOmpResult,
) -> CcStatus {
    guard(|| {
        let r = omp_check(&obj(e, "ensemble")?.0, &obj(n, "channel")?.0)?;
        put(
            out,
            CcOmpResult {
                holds: r.holds,
                kappa: r.kappa.unwrap_or(f64::NAN),
                max_residual: r.max_residual,
                degenerate_pairs: r.degenerate_pairs.len(),
            },
            "out",
        )
    })
}

/// Exact channel-coding protocol with the tetrahedral design and the
/// certified optimal measurement of the noiseless ensemble.
#[no_mangle]
pub unsafe extern "C" fn cc_protocol_run_exact(
    e: *const CcEnsemble,
    n: *const CcChannel,
    out: *mut CcProtocolReport,
) -> CcStatus {
    guard(|| {
        let e = &obj(e, "ensemble")?.0;
        let n = &obj(n, "channel")?.0;
        if !e.has_equal_priors() {
            return Err(Error::NotEqualPriors.into());
        }
        let fixed = optimal_discrimination(e)?.povm;
        let r = run_exact(e, n, &tetrahedral_design(), &fixed)?;
        put(
            out,
            CcProtocolReport {
                p_id: r.p_id,
                p_n: r.p_n,
                p_n_fixed: r.p_n_fixed,
                p_tn: r.p_tn,
                eta_fit: r.eta_fit,
                measurement_updated: r.measurement_updated,
            },
            "out",
        )
    })
}

/// Exact success probabilities of the experiment at one flip probability;
/// `panel` is 'a' (Z states, X flips) or 'b' (BB84 states, Y flips).
#[no_mangle]
pub unsafe extern "C" fn cc_figure3_analytic(
    panel: c_char,
    p_f: f64,
    p_n: *mut f64,
    p_tn: *mut f64,
) -> CcStatus {
    guard(|| {
        let panel = match panel as u8 {
            b'a' | b'A' => Panel::A,
            b'b' | b'B' => Panel::B,
            other => {
                return Err(Failure(
                    CcStatus::InvalidInput,
                    format!("unknown panel code {other}"),
                ))
            }
        };
        let mut cfg = Figure3Config::new(panel);
        cfg.sweep = vec![p_f];
        cfg.shots = 1;
        let row = figure3(&cfg, &tetrahedral_design())?[0];
        put(p_n, row.p_n_analytic, "p_n")?;
        put(p_tn, row.p_tn_analytic, "p_tn")
    })
}
