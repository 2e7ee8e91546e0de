//! C interface to the spatio-textual index.
//!
//! Every fallible call returns a [`FastStatus`]. On failure the message is
//! available from [`fast_last_error`] until the next failing call on the
//! same thread. Handles are opaque and must be released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fast_core::index::{FastConfig, FastIndex};
use fast_core::model::{ContinuousQuery, DnfQuery, MatchResult, Mbr, QueryId, SpatioTextualObject};
use fast_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FastStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Expired = 3,
    DuplicateQuery = 4,
    UnknownQuery = 5,
    OutOfSpace = 6,
    Internal = 7,
}

/// Opaque index handle.
pub struct FastIndexHandle {
    inner: FastIndex,
}

/// Opaque match result: query ids in ascending order.
pub struct FastResult {
    ids: Vec<u64>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FastCleanReport {
    pub removed: usize,
    pub demoted: usize,
    pub nodes_deleted: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FastStats {
    pub pyramid_nodes: usize,
    pub textual_nodes: usize,
    pub frequent_nodes: usize,
    pub list_entries: usize,
    pub shared_lists: usize,
    pub live_queries: usize,
    pub clock: u64,
    pub mean_replication: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: FastStatus, msg: impl Into<String>) -> FastStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> FastStatus {
    match err {
        Error::Expired { .. } => FastStatus::Expired,
        Error::DuplicateQuery(_) => FastStatus::DuplicateQuery,
        Error::UnknownQuery(_) => FastStatus::UnknownQuery,
        Error::OutOfSpace { .. } => FastStatus::OutOfSpace,
        _ => FastStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), FastStatus>) -> FastStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FastStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(FastStatus::Internal, "internal panic"),
    }
}

fn check(r: fast_core::Result<()>) -> Result<(), FastStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn handle<'a>(h: *mut FastIndexHandle) -> Result<&'a mut FastIndexHandle, FastStatus> {
    h.as_mut()
        .ok_or_else(|| fail(FastStatus::NullPointer, "null index handle"))
}

unsafe fn strings(words: *const *const c_char, n: usize) -> Result<Vec<String>, FastStatus> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if words.is_null() {
        return Err(fail(FastStatus::NullPointer, "null keyword array"));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let p = *words.add(i);
        if p.is_null() {
            return Err(fail(
                FastStatus::NullPointer,
                format!("keyword {i} is null"),
            ));
        }
        let s = CStr::from_ptr(p)
            .to_str()
            .map_err(|_| fail(FastStatus::InvalidArgument, "keyword is not UTF-8"))?;
        out.push(s.to_owned());
    }
    Ok(out)
}

unsafe fn emit(out: *mut *mut FastResult, r: MatchResult) {
    *out = Box::into_raw(Box::new(FastResult { ids: r.ids() }));
}

/// Creates an index. `*out` receives the handle on success.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fast_index_new(
    theta: usize,
    gran_max: u32,
    clean_interval: u64,
    out: *mut *mut FastIndexHandle,
) -> FastStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(FastStatus::NullPointer, "null output pointer"));
        }
        let cfg = FastConfig {
            theta,
            gran_max,
            clean_interval,
            descent_trigger: None,
        };
        let inner = FastIndex::new(cfg).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(FastIndexHandle { inner }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`fast_index_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fast_index_free(h: *mut FastIndexHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Registers a conjunctive query over `n_keywords` NUL-terminated keywords.
///
/// # Safety
/// `h` must be a live handle; `keywords` must point to `n_keywords` C strings.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fast_insert(
    h: *mut FastIndexHandle,
    qid: u64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    keywords: *const *const c_char,
    n_keywords: usize,
    t_exp: u64,
) -> FastStatus {
    guard(|| {
        let h = handle(h)?;
        let words = strings(keywords, n_keywords)?;
        let q = ContinuousQuery::new(qid, Mbr::new(x_min, y_min, x_max, y_max), words, t_exp)
            .map_err(|e| fail(status_of(&e), e.to_string()))?;
        check(h.inner.insert(q))
    })
}

/// Registers a disjunction of conjunctions. `keywords` holds every clause's
/// keywords back to back and `clause_lens[i]` is the length of clause `i`.
///
/// # Safety
/// `h` must be a live handle; `clause_lens` must hold `n_clauses` entries and
/// `keywords` their sum.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fast_insert_dnf(
    h: *mut FastIndexHandle,
    qid: u64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    keywords: *const *const c_char,
    clause_lens: *const usize,
    n_clauses: usize,
    t_exp: u64,
) -> FastStatus {
    guard(|| {
        let h = handle(h)?;
        if n_clauses > 0 && clause_lens.is_null() {
            return Err(fail(FastStatus::NullPointer, "null clause lengths"));
        }
        let lens: Vec<usize> = (0..n_clauses).map(|i| *clause_lens.add(i)).collect();
        let all = strings(keywords, lens.iter().sum())?;
        let mut clauses = Vec::with_capacity(n_clauses);
        let mut at = 0;
        for l in lens {
            clauses.push(all[at..at + l].to_vec());
            at += l;
        }
        let d = DnfQuery::new(qid, Mbr::new(x_min, y_min, x_max, y_max), clauses, t_exp)
            .map_err(|e| fail(status_of(&e), e.to_string()))?;
        check(h.inner.insert_dnf(d))
    })
}

/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fast_remove(h: *mut FastIndexHandle, qid: u64) -> FastStatus {
    guard(|| check(handle(h)?.inner.remove(QueryId(qid))))
}

/// Matches a point object. `*out` receives a result to release with
/// [`fast_result_free`].
///
/// # Safety
/// `h` must be a live handle, `keywords` must point to `n_keywords` C strings
/// and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fast_match_point(
    h: *mut FastIndexHandle,
    x: f64,
    y: f64,
    keywords: *const *const c_char,
    n_keywords: usize,
    out: *mut *mut FastResult,
) -> FastStatus {
    guard(|| {
        let h = handle(h)?;
        if out.is_null() {
            return Err(fail(FastStatus::NullPointer, "null output pointer"));
        }
        let o = SpatioTextualObject::point(0, x, y, strings(keywords, n_keywords)?)
            .map_err(|e| fail(status_of(&e), e.to_string()))?;
        emit(out, h.inner.match_object(&o));
        Ok(())
    })
}

/// Matches a rectangular object; see [`fast_match_point`].
///
/// # Safety
/// As for [`fast_match_point`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fast_match_rect(
    h: *mut FastIndexHandle,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    keywords: *const *const c_char,
    n_keywords: usize,
    out: *mut *mut FastResult,
) -> FastStatus {
    guard(|| {
        let h = handle(h)?;
        if out.is_null() {
            return Err(fail(FastStatus::NullPointer, "null output pointer"));
        }
        let o = SpatioTextualObject::rect(
            0,
            Mbr::new(x_min, y_min, x_max, y_max),
            strings(keywords, n_keywords)?,
        )
        .map_err(|e| fail(status_of(&e), e.to_string()))?;
        emit(out, h.inner.match_object(&o));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live result.
#[no_mangle]
pub unsafe extern "C" fn fast_result_len(r: *const FastResult) -> usize {
    r.as_ref().map_or(0, |r| r.ids.len())
}

/// Pointer to the result's ids, valid until the result is freed.
///
/// # Safety
/// `r` must be null or a live result.
#[no_mangle]
pub unsafe extern "C" fn fast_result_ids(r: *const FastResult) -> *const u64 {
    r.as_ref().map_or(ptr::null(), |r| r.ids.as_ptr())
}

/// # Safety
/// `r` must be null or a result not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fast_result_free(r: *mut FastResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

unsafe fn report(out: *mut FastCleanReport, r: fast_core::index::CleanReport) {
    if let Some(o) = out.as_mut() {
        *o = FastCleanReport {
            removed: r.removed,
            demoted: r.demoted,
            nodes_deleted: r.nodes_deleted,
        };
    }
}

/// Advances the logical clock, cleaning once per elapsed interval. `out`
/// may be null.
///
/// # Safety
/// `h` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fast_advance_clock(
    h: *mut FastIndexHandle,
    dt: u64,
    out: *mut FastCleanReport,
) -> FastStatus {
    guard(|| {
        let r = handle(h)?.inner.advance_clock(dt);
        report(out, r);
        Ok(())
    })
}

/// Runs one cleaning step regardless of the clock. `out` may be null.
///
/// # Safety
/// As for [`fast_advance_clock`].
#[no_mangle]
pub unsafe extern "C" fn fast_clean_step(
    h: *mut FastIndexHandle,
    out: *mut FastCleanReport,
) -> FastStatus {
    guard(|| {
        let r = handle(h)?.inner.clean_step();
        report(out, r);
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fast_stats(h: *mut FastIndexHandle, out: *mut FastStats) -> FastStatus {
    guard(|| {
        let h = handle(h)?;
        let o = out
            .as_mut()
            .ok_or_else(|| fail(FastStatus::NullPointer, "null output pointer"))?;
        let s = h.inner.stats();
        *o = FastStats {
            pyramid_nodes: s.pyramid_nodes,
            textual_nodes: s.textual_nodes,
            frequent_nodes: s.frequent_nodes,
            list_entries: s.list_entries,
            shared_lists: s.shared_lists,
            live_queries: s.live_queries,
            clock: h.inner.clock(),
            mean_replication: s.mean_replication,
        };
        Ok(())
    })
}

/// Message for the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fast_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
