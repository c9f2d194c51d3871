//! C ABI for lingdiv.
//!
//! Objects are opaque handles created by `ld_*_load`/`ld_*_compute` and released
//! with the matching `ld_*_free`. Fallible calls return an [`LdStatus`]; the
//! message of the most recent failure on the calling thread is available from
//! [`ld_last_error_message`]. Strings returned as `char *` are owned by the
//! caller and released with [`ld_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lingdiv::corpus::{parse_corpus, read_corpus, Corpus, CorpusFilters};
use lingdiv::diversity::{compute_all, DiversityConfig, DiversityRun, Measure, PeerPolicy};
use lingdiv::langmodel::{SamplingParams, UnigramLm};
use lingdiv::report::diversity_csv;
use lingdiv::stats::{binom_test_two_sided, mann_whitney_u, spearman};
use lingdiv::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Parameter = 5,
    Eligibility = 6,
    NotFound = 7,
    Io = 8,
    OutOfRange = 9,
    Panic = 10,
}

impl From<&Error> for LdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => LdStatus::Parse,
            Error::Validation(_) => LdStatus::Validation,
            Error::Parameter(_) => LdStatus::Parameter,
            Error::Eligibility(_) | Error::InsufficientData { .. } => LdStatus::Eligibility,
            Error::NotFound(_) => LdStatus::NotFound,
            Error::Io { .. } => LdStatus::Io,
        }
    }
}

/// Diversity measure tags used by [`LdDiversityRecord`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdMeasure {
    Within = 0,
    Between = 1,
    Relative = 2,
}

impl From<Measure> for LdMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Within => LdMeasure::Within,
            Measure::Between => LdMeasure::Between,
            Measure::Relative => LdMeasure::Relative,
        }
    }
}

/// Sampling and peer settings for [`ld_diversity_compute`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdDiversityParams {
    pub train_budget: usize,
    pub eval_budget: usize,
    pub n_samples: usize,
    pub stage_width: usize,
    pub min_test_convs: usize,
    /// Nonzero lets peers come from any cohort.
    pub peers_any_cohort: u8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdDiversityRecord {
    pub stage_index: usize,
    pub measure: LdMeasure,
    /// Bits per token.
    pub value: f64,
    pub n_test_convs: usize,
    pub n_samples_used: usize,
}

/// Opaque corpus handle.
pub struct LdCorpus {
    inner: Corpus,
}

/// Opaque handle to a diversity run.
pub struct LdDiversityRun {
    inner: DiversityRun,
    ids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: LdStatus, msg: &str) -> LdStatus {
    set_last_error(msg);
    status
}

fn fail_with(e: &Error) -> LdStatus {
    fail(e.into(), &e.to_string())
}

/// Runs `f`, converting panics into [`LdStatus::Panic`].
fn guard(f: impl FnOnce() -> LdStatus) -> LdStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(LdStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, LdStatus> {
    if p.is_null() {
        return Err(fail(LdStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LdStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize) -> Result<&'a [T], LdStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(LdStatus::NullPointer, "null array argument"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn filters(min_conversations: usize, min_counselor_messages: usize) -> CorpusFilters {
    CorpusFilters { min_conversations, min_counselor_messages }
}

fn store_corpus(result: lingdiv::Result<Corpus>, out: *mut *mut LdCorpus) -> LdStatus {
    match result {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(LdCorpus { inner })) };
            LdStatus::Ok
        }
        Err(e) => fail_with(&e),
    }
}

/// Message of the last failure on this thread; empty if none. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn ld_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ld_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a JSONL corpus file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ld_corpus_load_path(
    path: *const c_char,
    min_conversations: usize,
    min_counselor_messages: usize,
    out: *mut *mut LdCorpus,
) -> LdStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdStatus::NullPointer, "null output pointer");
        }
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        store_corpus(parse_corpus(Path::new(path), filters(min_conversations, min_counselor_messages)), out)
    })
}

/// Parses a JSONL corpus held in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ld_corpus_load_jsonl(
    text: *const c_char,
    min_conversations: usize,
    min_counselor_messages: usize,
    out: *mut *mut LdCorpus,
) -> LdStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdStatus::NullPointer, "null output pointer");
        }
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        store_corpus(read_corpus(text.as_bytes(), filters(min_conversations, min_counselor_messages)), out)
    })
}

/// # Safety
/// `corpus` must come from a corpus loader and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ld_corpus_free(corpus: *mut LdCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of individuals, or 0 for null.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_corpus_individual_count(corpus: *const LdCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.len())
}

/// Number of conversations, or 0 for null.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_corpus_conversation_count(corpus: *const LdCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.n_conversations())
}

/// Default diversity settings.
#[no_mangle]
pub extern "C" fn ld_diversity_params_default() -> LdDiversityParams {
    let d = DiversityConfig::default();
    LdDiversityParams {
        train_budget: d.sampling.train_budget,
        eval_budget: d.sampling.eval_budget,
        n_samples: d.sampling.n_samples,
        stage_width: d.stage_width,
        min_test_convs: d.min_test_convs,
        peers_any_cohort: 0,
    }
}

/// Computes within, between, and relative diversity for every life-stage.
///
/// # Safety
/// `corpus` and `params` must be live pointers and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ld_diversity_compute(
    corpus: *const LdCorpus,
    params: *const LdDiversityParams,
    seed: u64,
    out: *mut *mut LdDiversityRun,
) -> LdStatus {
    guard(|| {
        let (Some(corpus), Some(params)) = (corpus.as_ref(), params.as_ref()) else {
            return fail(LdStatus::NullPointer, "null corpus or params");
        };
        if out.is_null() {
            return fail(LdStatus::NullPointer, "null output pointer");
        }
        let cfg = DiversityConfig {
            sampling: SamplingParams {
                train_budget: params.train_budget,
                eval_budget: params.eval_budget,
                n_samples: params.n_samples,
            },
            min_test_convs: params.min_test_convs,
            peer_policy: if params.peers_any_cohort != 0 { PeerPolicy::Any } else { PeerPolicy::SameCohort },
            stage_width: params.stage_width,
        };
        match compute_all(&corpus.inner, &cfg, seed) {
            Ok(inner) => {
                let ids = inner
                    .records
                    .iter()
                    .map(|r| CString::new(r.individual_id.as_str()).unwrap_or_default())
                    .collect();
                *out = Box::into_raw(Box::new(LdDiversityRun { inner, ids }));
                LdStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// # Safety
/// `run` must come from [`ld_diversity_compute`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ld_diversity_free(run: *mut LdDiversityRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of records, or 0 for null.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_diversity_record_count(run: *const LdDiversityRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.records.len())
}

/// Number of cells that could not be computed, or 0 for null.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_diversity_skipped_count(run: *const LdDiversityRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.skipped.len())
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ld_diversity_record(run: *const LdDiversityRun, index: usize, out: *mut LdDiversityRecord) -> LdStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), out.is_null()) else {
            return fail(LdStatus::NullPointer, "null run or output pointer");
        };
        let Some(r) = run.inner.records.get(index) else {
            return fail(LdStatus::OutOfRange, &format!("record {index} of {}", run.inner.records.len()));
        };
        *out = LdDiversityRecord {
            stage_index: r.stage_index,
            measure: r.measure.into(),
            value: r.value,
            n_test_convs: r.n_test_convs,
            n_samples_used: r.n_samples_used,
        };
        LdStatus::Ok
    })
}

/// Individual id of record `index`, owned by `run`; null if out of range.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_diversity_record_individual(run: *const LdDiversityRun, index: usize) -> *const c_char {
    run.as_ref()
        .and_then(|r| r.ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// The run as CSV text; release with [`ld_string_free`]. Null on failure.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ld_diversity_csv(run: *const LdDiversityRun) -> *mut c_char {
    let Some(run) = run.as_ref() else {
        set_last_error("null run");
        return ptr::null_mut();
    };
    match diversity_csv(&run.inner.records, false) {
        Ok(bytes) => CString::new(bytes).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            set_last_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ld_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Cross-entropy in bits per token of `eval` under a unigram model fitted on `train`.
///
/// # Safety
/// Arrays must hold the stated number of elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ld_cross_entropy(
    train: *const u32,
    n_train: usize,
    eval: *const u32,
    n_eval: usize,
    out: *mut f64,
) -> LdStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdStatus::NullPointer, "null output pointer");
        }
        let (train, eval) = match (slice_arg(train, n_train), slice_arg(eval, n_eval)) {
            (Ok(t), Ok(e)) => (t, e),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match UnigramLm::fit(train).and_then(|lm| lm.cross_entropy(eval)) {
            Ok(h) => {
                *out = h;
                LdStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Two-sided exact binomial p-value for `k` successes in `n` trials.
///
/// # Safety
/// `p_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ld_binom_test(k: u64, n: u64, p0: f64, p_value: *mut f64) -> LdStatus {
    guard(|| {
        if p_value.is_null() {
            return fail(LdStatus::NullPointer, "null output pointer");
        }
        match binom_test_two_sided(k, n, p0) {
            Ok(t) => {
                *p_value = t.p_value;
                LdStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Two-sided Mann-Whitney U test. `u` receives U for sample `a`.
///
/// # Safety
/// Arrays must hold the stated number of elements; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn ld_mann_whitney(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    u: *mut f64,
    p_value: *mut f64,
) -> LdStatus {
    guard(|| {
        if u.is_null() || p_value.is_null() {
            return fail(LdStatus::NullPointer, "null output pointer");
        }
        let (a, b) = match (slice_arg(a, n_a), slice_arg(b, n_b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match mann_whitney_u(a, b) {
            Ok(r) => {
                *u = r.u_a;
                *p_value = r.p_value;
                LdStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Spearman rank correlation. Returns `Eligibility` when either input is constant.
///
/// # Safety
/// Arrays must hold `n` elements; `rho` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ld_spearman(x: *const f64, y: *const f64, n: usize, rho: *mut f64) -> LdStatus {
    guard(|| {
        if rho.is_null() {
            return fail(LdStatus::NullPointer, "null output pointer");
        }
        let (x, y) = match (slice_arg(x, n), slice_arg(y, n)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match spearman(x, y) {
            Ok(Some(r)) => {
                *rho = r;
                LdStatus::Ok
            }
            Ok(None) => fail(LdStatus::Eligibility, "constant input has no rank correlation"),
            Err(e) => fail_with(&e),
        }
    })
}
