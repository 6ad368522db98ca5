//! C ABI over `ancestry-core`.
//!
//! Every function returns an [`AncStatus`]; results go through out-pointers.
//! On failure a message for the calling thread is available from
//! [`anc_last_error_message`] until the next failing call on that thread.
//! Handles ([`AncSample`], [`AncIsRun`]) are created by `*_new` / `*_run`
//! functions and must be released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ancestry_core::exact_dists::{self, LineageLawParams};
use ancestry_core::genealogy::TimeModel;
use ancestry_core::importance::{run_importance, ImportanceOptions, ImportanceReport};
use ancestry_core::rejection::{run_algorithm4, ThetaPrior};
use ancestry_core::{stats, Error, ObservedSample};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    DataMismatch = 3,
    Numeric = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AncStatus {
    match e {
        Error::Domain(_) => AncStatus::InvalidArgument,
        Error::Parse { .. } | Error::DataMismatch(_) | Error::Io(_) => AncStatus::DataMismatch,
        _ => AncStatus::Numeric,
    }
}

fn guard<F: FnOnce() -> Result<(), (AncStatus, String)>>(f: F) -> AncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AncStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ancestry library".into());
            AncStatus::Panic
        }
    }
}

fn lift<T>(r: ancestry_core::Result<T>) -> Result<T, (AncStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null_check<T>(p: *const T, name: &str) -> Result<(), (AncStatus, String)> {
    if p.is_null() {
        Err((AncStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn write_out<T>(out: *mut T, v: T, name: &str) -> Result<(), (AncStatus, String)> {
    null_check(out, name)?;
    out.write(v);
    Ok(())
}

/// Message of the last failure on this thread, or null. Owned by the library;
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn anc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// An observed haplotype configuration with its number of segregating sites.
pub struct AncSample {
    inner: ObservedSample,
}

/// # Safety
/// `counts` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anc_sample_new(counts: *const u32, len: usize, s: u32, out: *mut *mut AncSample) -> AncStatus {
    guard(|| {
        null_check(counts, "counts")?;
        null_check(out, "out")?;
        let v = std::slice::from_raw_parts(counts, len).to_vec();
        let inner = lift(ObservedSample::new(v, s))?;
        out.write(Box::into_raw(Box::new(AncSample { inner })));
        Ok(())
    })
}

/// # Safety
/// `sample` must come from [`anc_sample_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn anc_sample_free(sample: *mut AncSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// # Safety
/// Valid handle and writable out-pointers.
#[no_mangle]
pub unsafe extern "C" fn anc_sample_size(sample: *const AncSample, n: *mut u32, k: *mut u32) -> AncStatus {
    guard(|| {
        null_check(sample, "sample")?;
        let c = &(*sample).inner.config;
        write_out(n, c.n(), "n")?;
        write_out(k, c.k() as u32, "k")
    })
}

/// ln of the Ewens sampling formula probability of the unordered configuration.
///
/// # Safety
/// Valid handle and writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_esf_log_probability(sample: *const AncSample, theta: f64, out: *mut f64) -> AncStatus {
    guard(|| {
        null_check(sample, "sample")?;
        let pairs = (*sample).inner.config.spectrum().pairs();
        write_out(out, lift(exact_dists::esf_log_probability(&pairs, theta))?, "out")
    })
}

/// P(S_n = s).
///
/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_seg_sites_pmf(n: u32, theta: f64, s: u32, out: *mut f64) -> AncStatus {
    guard(|| write_out(out, lift(exact_dists::seg_sites_pmf(n, theta, s))?, "out"))
}

/// P(K_n = k).
///
/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_num_alleles_pmf(n: u32, theta: f64, k: u32, out: *mut f64) -> AncStatus {
    guard(|| write_out(out, lift(exact_dists::num_alleles_pmf(n, theta, k))?, "out"))
}

/// P(A_n^θ(t) = k); θ = 0 gives the plain coalescent line count.
///
/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_ancestors_pmf(n: u32, theta: f64, t: f64, k: u32, out: *mut f64) -> AncStatus {
    guard(|| {
        let p = lift(LineageLawParams::new(n, theta, t))?;
        write_out(out, lift(exact_dists::ancestors_pmf(&p, k))?, "out")
    })
}

/// E[A_n(t) | S_n = r].
///
/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_cond_mean_ancestors(n: u32, theta: f64, t: f64, r: u32, out: *mut f64) -> AncStatus {
    guard(|| write_out(out, lift(exact_dists::cond_mean_ancestors(n, theta, t, r))?, "out"))
}

/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_watterson_theta(s: u64, n: u64, out: *mut f64) -> AncStatus {
    guard(|| write_out(out, lift(stats::watterson_theta(s, n))?, "out"))
}

/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_ewens_mle_theta(k: u64, n: u64, out: *mut f64) -> AncStatus {
    guard(|| write_out(out, lift(stats::ewens_mle_theta(k, n))?, "out"))
}

/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_tajimas_d(pi: f64, s: u64, n: u64, out: *mut f64) -> AncStatus {
    guard(|| write_out(out, lift(stats::tajimas_d(pi, s, n))?, "out"))
}

/// P(Z ≥ observed) for Z ~ Poisson(mean).
///
/// # Safety
/// Writable out-pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_poisson_tail(observed: u64, mean: f64, out: *mut f64) -> AncStatus {
    guard(|| write_out(out, lift(stats::poisson_tail_test(observed, mean))?, "out"))
}

/// Algorithm 4 posterior means of A_n(t) and S_n(t) given S_n = s, θ fixed,
/// constant population size.
///
/// # Safety
/// Writable out-pointers.
#[no_mangle]
pub unsafe extern "C" fn anc_reject_means(
    n: u32,
    s: u32,
    theta: f64,
    t: f64,
    accepted: u64,
    seed: u64,
    mean_ancestors: *mut f64,
    mean_standing: *mut f64,
) -> AncStatus {
    guard(|| {
        null_check(mean_ancestors, "mean_ancestors")?;
        null_check(mean_standing, "mean_standing")?;
        let r = lift(run_algorithm4(n, s, ThetaPrior::Fixed { value: theta }, TimeModel::Constant, &[t], accepted, seed))?;
        let g = &r.grid[0];
        write_out(mean_ancestors, g.ancestors.mean, "mean_ancestors")?;
        write_out(mean_standing, g.standing_sites.map_or(f64::NAN, |e| e.mean), "mean_standing")
    })
}

/// A finished importance-sampling run.
pub struct AncIsRun {
    report: ImportanceReport,
}

/// Runs the importance sampler. `beta` = 0 is the constant-size model.
/// With `with_ages` nonzero, event times and allele ages are estimated too.
///
/// # Safety
/// Valid sample handle; writable `out`.
#[no_mangle]
pub unsafe extern "C" fn anc_is_run(
    sample: *const AncSample,
    theta: f64,
    beta: f64,
    replicates: u64,
    seed: u64,
    with_ages: i32,
    out: *mut *mut AncIsRun,
) -> AncStatus {
    guard(|| {
        null_check(sample, "sample")?;
        null_check(out, "out")?;
        let model = if beta == 0.0 { TimeModel::Constant } else { lift(TimeModel::exp_growth(beta))? };
        let mut o = ImportanceOptions::new(theta, model, replicates, seed);
        o.event_times = with_ages != 0;
        o.ages = with_ages != 0;
        let report = lift(run_importance(&(*sample).inner, &o))?;
        out.write(Box::into_raw(Box::new(AncIsRun { report })));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`anc_is_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn anc_is_free(run: *mut AncIsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Unordered likelihood p(n;s)/Π α_j! with its standard error and ESS.
///
/// # Safety
/// Valid handle; writable out-pointers.
#[no_mangle]
pub unsafe extern "C" fn anc_is_likelihood(run: *const AncIsRun, mean: *mut f64, std_error: *mut f64, ess: *mut f64) -> AncStatus {
    guard(|| {
        null_check(run, "run")?;
        let e = (*run).report.likelihood.unordered;
        write_out(mean, e.mean, "mean")?;
        write_out(std_error, e.std_error, "std_error")?;
        write_out(ess, e.effective_sample_size, "ess")
    })
}

/// # Safety
/// Valid handle from a run with ages; writable out-pointers.
#[no_mangle]
pub unsafe extern "C" fn anc_is_tmrca(run: *const AncIsRun, mean: *mut f64, std_error: *mut f64) -> AncStatus {
    guard(|| {
        null_check(run, "run")?;
        let et = (*run).report.event_times.as_ref().ok_or((AncStatus::InvalidArgument, "run has no event times".to_string()))?;
        write_out(mean, et.tmrca.mean, "mean")?;
        write_out(std_error, et.tmrca.std_error, "std_error")
    })
}

/// Mean age of haplotype `index` (input order, from 0).
///
/// # Safety
/// Valid handle from a run with ages; writable out-pointers.
#[no_mangle]
pub unsafe extern "C" fn anc_is_allele_age(run: *const AncIsRun, index: usize, mean: *mut f64, std_error: *mut f64) -> AncStatus {
    guard(|| {
        null_check(run, "run")?;
        let ages = (*run).report.ages.as_ref().ok_or((AncStatus::InvalidArgument, "run has no ages".to_string()))?;
        let e = ages.get(index).ok_or((AncStatus::InvalidArgument, format!("haplotype index {index} out of range")))?;
        write_out(mean, e.mean, "mean")?;
        write_out(std_error, e.std_error, "std_error")
    })
}
