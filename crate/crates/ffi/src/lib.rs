//! C ABI over the placevalue engine.
//!
//! Every fallible call returns a [`PvStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`pv_last_error_message`]. Handles are opaque and must be released with
//! their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use placevalue::place::{decompose, evaluate_response, generate_question, CountResponse, PlaceCount, PlaceValue, Question};
use placevalue::rng::TutorRng;
use placevalue::stats::{self, TableFormat, TTestResult};
use placevalue::store::{self, Store, StoreError};

/// Number of place columns, ones through millions.
pub const PV_PLACES: usize = 7;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Malformed = 4,
    Io = 5,
    Corrupt = 6,
    Unbuildable = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvFormat {
    Text = 0,
    Csv = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PvTTest {
    pub t: f64,
    pub df: u32,
    pub p_one_tailed: f64,
    pub significant: bool,
}

impl From<TTestResult> for PvTTest {
    fn from(r: TTestResult) -> Self {
        Self { t: r.t, df: r.df, p_one_tailed: r.p_one_tailed, significant: r.significant_at_05 }
    }
}

/// Seeded question generator.
pub struct PvRng(TutorRng);

/// One generated question.
pub struct PvQuestion(Question);

/// Read-only store rebuilt from a data directory's event log.
pub struct PvStore(Store);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: PvStatus, message: impl Into<String>) -> PvStatus {
    set_error(message.into());
    status
}

/// Run `f`, turning panics into `PvStatus::Panic`.
fn guard(f: impl FnOnce() -> PvStatus) -> PvStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(PvStatus::Panic, "internal panic"),
    }
}

fn store_status(e: &StoreError) -> PvStatus {
    match e {
        StoreError::Io(_) => PvStatus::Io,
        StoreError::Corrupt { .. } => PvStatus::Corrupt,
        StoreError::Report(_) => PvStatus::Unbuildable,
        _ => PvStatus::InvalidArgument,
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Split `n` into its digits. `out_digits[p]` receives the digit at power
/// `p` (0 for skipped places); `out_parts` the number of nonzero places.
///
/// # Safety
/// `out_digits` must point to `PV_PLACES` writable bytes and `out_parts` to
/// a writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn pv_decompose(n: u32, out_digits: *mut u8, out_parts: *mut usize) -> PvStatus {
    guard(|| {
        if out_digits.is_null() || out_parts.is_null() {
            return fail(PvStatus::NullPointer, "null output pointer");
        }
        match decompose(n) {
            Ok(d) => {
                let mut digits = [0u8; PV_PLACES];
                for part in &d.parts {
                    digits[part.place.power() as usize] = part.digit;
                }
                // SAFETY: caller provides PV_PLACES bytes and one size_t.
                unsafe {
                    ptr::copy_nonoverlapping(digits.as_ptr(), out_digits, PV_PLACES);
                    *out_parts = d.parts.len();
                }
                PvStatus::Ok
            }
            Err(e) => fail(PvStatus::OutOfRange, e.to_string()),
        }
    })
}

#[no_mangle]
pub extern "C" fn pv_rng_new(seed: u64) -> *mut PvRng {
    Box::into_raw(Box::new(PvRng(TutorRng::new(seed))))
}

/// # Safety
/// `rng` must come from [`pv_rng_new`] and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pv_rng_free(rng: *mut PvRng) {
    if !rng.is_null() {
        // SAFETY: pointer came from Box::into_raw in pv_rng_new.
        drop(unsafe { Box::from_raw(rng) });
    }
}

/// Draw a question for the place at `power` (0 = ones .. 6 = millions).
///
/// # Safety
/// `rng` must be a live handle and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn pv_question_generate(rng: *mut PvRng, power: u32, out: *mut *mut PvQuestion) -> PvStatus {
    guard(|| {
        if rng.is_null() || out.is_null() {
            return fail(PvStatus::NullPointer, "null rng or output pointer");
        }
        let Some(place) = PlaceValue::from_power(power) else {
            return fail(PvStatus::OutOfRange, format!("place power {power} is outside 0..=6"));
        };
        // SAFETY: caller guarantees a live, exclusively used handle.
        let rng = unsafe { &mut (*rng).0 };
        let q = generate_question(place, rng);
        // SAFETY: `out` is writable per the contract.
        unsafe { *out = Box::into_raw(Box::new(PvQuestion(q))) };
        PvStatus::Ok
    })
}

/// # Safety
/// `q` must be a live question handle.
#[no_mangle]
pub unsafe extern "C" fn pv_question_number(q: *const PvQuestion) -> u32 {
    if q.is_null() {
        return 0;
    }
    // SAFETY: live handle per the contract.
    unsafe { (*q).0.number }
}

/// # Safety
/// `q` must come from [`pv_question_generate`] and not be used afterwards.
/// NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn pv_question_free(q: *mut PvQuestion) {
    if !q.is_null() {
        // SAFETY: pointer came from Box::into_raw in pv_question_generate.
        drop(unsafe { Box::from_raw(q) });
    }
}

/// Check a counting answer. `clicks[p]` is the click count at power `p`;
/// places whose digit is zero must be left at 0.
///
/// # Safety
/// `q` must be a live handle, `clicks` must point to `PV_PLACES` values and
/// `out_correct` to a writable bool.
#[no_mangle]
pub unsafe extern "C" fn pv_evaluate(q: *const PvQuestion, clicks: *const u32, out_correct: *mut bool) -> PvStatus {
    guard(|| {
        if q.is_null() || clicks.is_null() || out_correct.is_null() {
            return fail(PvStatus::NullPointer, "null argument");
        }
        // SAFETY: pointers are valid per the contract.
        let (question, clicks) = unsafe { (&(*q).0, std::slice::from_raw_parts(clicks, PV_PLACES)) };
        let mut counts = Vec::new();
        for &place in placevalue::place::all_places() {
            let c = clicks[place.power() as usize];
            if question.decomposition.digit_at(place).is_some() {
                counts.push(PlaceCount { place, clicks: c });
            } else if c != 0 {
                return fail(PvStatus::Malformed, format!("{place} holds a zero digit and takes no clicks"));
            }
        }
        match evaluate_response(question, &CountResponse { counts }) {
            Ok(v) => {
                // SAFETY: writable per the contract.
                unsafe { *out_correct = v.is_correct() };
                PvStatus::Ok
            }
            Err(e) => fail(PvStatus::Malformed, e.to_string()),
        }
    })
}

/// Upper-tail probability `P(T_df > t)`.
///
/// # Safety
/// `out` must be a writable double.
#[no_mangle]
pub unsafe extern "C" fn pv_t_upper_tail(t: f64, df: u32, out: *mut f64) -> PvStatus {
    guard(|| {
        if out.is_null() {
            return fail(PvStatus::NullPointer, "null output pointer");
        }
        match stats::t_upper_tail(t, df) {
            Ok(p) => {
                // SAFETY: writable per the contract.
                unsafe { *out = p };
                PvStatus::Ok
            }
            Err(e) => fail(PvStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// Slices must be valid for `n` values (may be dangling when `n` is 0).
unsafe fn slice<'a>(p: *const f64, n: usize) -> Option<&'a [f64]> {
    if n == 0 {
        return Some(&[]);
    }
    // SAFETY: forwarded from the caller's contract.
    (!p.is_null()).then(|| unsafe { std::slice::from_raw_parts(p, n) })
}

fn write_ttest(result: Result<TTestResult, stats::StatsError>, out: *mut PvTTest) -> PvStatus {
    match result {
        Ok(r) => {
            // SAFETY: the caller checked `out` for NULL and it is writable.
            unsafe { *out = r.into() };
            PvStatus::Ok
        }
        Err(e) => fail(PvStatus::InvalidArgument, e.to_string()),
    }
}

/// Paired t on `post - pre`.
///
/// # Safety
/// `pre` and `post` must each hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_paired_t(pre: *const f64, post: *const f64, n: usize, out: *mut PvTTest) -> PvStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let (Some(a), Some(b)) = (unsafe { slice(pre, n) }, unsafe { slice(post, n) }) else {
            return fail(PvStatus::NullPointer, "null sample pointer");
        };
        if out.is_null() {
            return fail(PvStatus::NullPointer, "null output pointer");
        }
        write_ttest(stats::paired_t(a, b), out)
    })
}

/// Pooled-variance t on `mean(a) - mean(b)`.
///
/// # Safety
/// `a` must hold `na` doubles, `b` `nb` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_independent_t(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut PvTTest,
) -> PvStatus {
    guard(|| {
        // SAFETY: forwarded contract.
        let (Some(a), Some(b)) = (unsafe { slice(a, na) }, unsafe { slice(b, nb) }) else {
            return fail(PvStatus::NullPointer, "null sample pointer");
        };
        if out.is_null() {
            return fail(PvStatus::NullPointer, "null output pointer");
        }
        write_ttest(stats::independent_t(a, b), out)
    })
}

/// Rebuild the store in `data_dir` from its event log.
///
/// # Safety
/// `data_dir` must be a NUL-terminated UTF-8 path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pv_store_open(data_dir: *const c_char, out: *mut *mut PvStore) -> PvStatus {
    guard(|| {
        if data_dir.is_null() || out.is_null() {
            return fail(PvStatus::NullPointer, "null argument");
        }
        // SAFETY: NUL-terminated per the contract.
        let Ok(dir) = unsafe { CStr::from_ptr(data_dir) }.to_str() else {
            return fail(PvStatus::InvalidArgument, "data_dir is not UTF-8");
        };
        match store::load_dir(Path::new(dir), 0) {
            Ok(s) => {
                // SAFETY: writable per the contract.
                unsafe { *out = Box::into_raw(Box::new(PvStore(s))) };
                PvStatus::Ok
            }
            Err(e) => fail(store_status(&e), e.to_string()),
        }
    })
}

/// Number of events the store was rebuilt from.
///
/// # Safety
/// `store` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_store_event_count(store: *const PvStore) -> u64 {
    if store.is_null() {
        return 0;
    }
    // SAFETY: live handle per the contract.
    unsafe { (*store).0.last_seq() }
}

/// Render table `table` (1..6) in `format`, a [`PvFormat`] value. The
/// returned string must be released with [`pv_string_free`].
///
/// # Safety
/// `store` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pv_store_export_table(
    store: *const PvStore,
    table: u8,
    format: u32,
    out: *mut *mut c_char,
) -> PvStatus {
    guard(|| {
        if store.is_null() || out.is_null() {
            return fail(PvStatus::NullPointer, "null argument");
        }
        let format = match format {
            f if f == PvFormat::Text as u32 => TableFormat::Text,
            f if f == PvFormat::Csv as u32 => TableFormat::Csv,
            other => return fail(PvStatus::InvalidArgument, format!("unknown table format {other}")),
        };
        // SAFETY: live handle per the contract.
        let store = unsafe { &(*store).0 };
        match store.export_table(table, format, &Default::default()) {
            Ok(body) => match CString::new(body) {
                Ok(c) => {
                    // SAFETY: writable per the contract.
                    unsafe { *out = c.into_raw() };
                    PvStatus::Ok
                }
                Err(_) => fail(PvStatus::Malformed, "table text contains a NUL byte"),
            },
            Err(e) => fail(PvStatus::Unbuildable, e.to_string()),
        }
    })
}

/// # Safety
/// `store` must come from [`pv_store_open`] and not be used afterwards.
/// NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn pv_store_free(store: *mut PvStore) {
    if !store.is_null() {
        // SAFETY: pointer came from Box::into_raw in pv_store_open.
        drop(unsafe { Box::from_raw(store) });
    }
}

/// # Safety
/// `s` must be a string returned by this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn pv_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: pointer came from CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}
