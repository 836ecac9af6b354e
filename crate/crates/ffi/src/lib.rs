//! C ABI over the ontomatch library.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Strings returned through `out`
//! pointers are NUL-terminated, UTF-8, and must be released with
//! [`om_string_free`]. Every fallible call returns an [`OmStatus`]; on
//! failure [`om_last_error`] describes the problem on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ontomatch::edoal::{self, Alignment};
use ontomatch::eval;
use ontomatch::rdf::{self, OntologyGraph};
use ontomatch::reduction;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    /// Repair ran but the document is still invalid; outputs are still set.
    Unrepairable = 4,
    Io = 5,
    /// Incompatible inputs, such as merging alignments of different ontologies.
    Conflict = 6,
    Panic = 7,
}

/// Parsed RDF graph.
pub struct OmGraph(OntologyGraph);

/// Parsed alignment.
pub struct OmAlignment(Alignment);

/// Precision, recall and F1 for simple and complex cells.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OmScores {
    pub simple_precision: f64,
    pub simple_recall: f64,
    pub simple_f1: f64,
    pub complex_precision: f64,
    pub complex_recall: f64,
    pub complex_f1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(OmStatus, String);

impl Failure {
    fn new(status: OmStatus, msg: impl std::fmt::Display) -> Self {
        Failure(status, msg.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<OmStatus, Failure>) -> OmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            OmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(OmStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure::new(OmStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(OmStatus::NullArgument, format!("{name} is null")))
}

fn check_out<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(OmStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    *out = CString::new(s.replace('\0', "")).unwrap_or_default().into_raw();
}

unsafe fn put_box<T>(out: *mut *mut T, v: T) {
    *out = Box::into_raw(Box::new(v));
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn om_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread; do not free.
#[no_mangle]
pub extern "C" fn om_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn om_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses Turtle text.
///
/// # Safety
/// `turtle` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_graph_parse_turtle(turtle: *const c_char, out: *mut *mut OmGraph) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        let g = rdf::parse_turtle(text(turtle, "turtle")?).map_err(|e| Failure::new(OmStatus::ParseError, e))?;
        put_box(out, OmGraph(g));
        Ok(OmStatus::Ok)
    })
}

/// Loads a Turtle or RDF/XML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_graph_load(path: *const c_char, out: *mut *mut OmGraph) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        let path = text(path, "path")?;
        let g = rdf::load_ontology(Path::new(path)).map_err(|e| match e {
            rdf::RdfError::Io { .. } => Failure::new(OmStatus::Io, e),
            other => Failure::new(OmStatus::ParseError, other),
        })?;
        put_box(out, OmGraph(g));
        Ok(OmStatus::Ok)
    })
}

/// Number of triples, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_graph_triple_count(graph: *const OmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.len())
}

/// Serializes a graph as Turtle.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_graph_to_turtle(graph: *const OmGraph, out: *mut *mut c_char) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        put_string(out, rdf::serialize_turtle(&handle(graph, "graph")?.0));
        Ok(OmStatus::Ok)
    })
}

/// # Safety
/// `graph` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn om_graph_free(graph: *mut OmGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Parses an alignment document without repairing it.
///
/// # Safety
/// `xml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_parse(xml: *const c_char, out: *mut *mut OmAlignment) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        let a = edoal::parse_alignment(text(xml, "xml")?).map_err(|e| Failure::new(OmStatus::ParseError, e))?;
        put_box(out, OmAlignment(a));
        Ok(OmStatus::Ok)
    })
}

/// Repairs an alignment document. `out_xml` receives the repaired text and
/// `out_fixes` (if non-null) the number of fixes applied. Returns
/// `Unrepairable` when the result still fails validation.
///
/// # Safety
/// `input` must be a NUL-terminated string; `out_xml` must be writable;
/// `out_fixes` may be null.
#[no_mangle]
pub unsafe extern "C" fn om_repair(input: *const c_char, out_xml: *mut *mut c_char, out_fixes: *mut usize) -> OmStatus {
    guard(|| {
        check_out(out_xml, "out_xml")?;
        let (fixed, report) = edoal::repair(text(input, "input")?);
        if !out_fixes.is_null() {
            *out_fixes = report.fixes.len();
        }
        put_string(out_xml, fixed);
        if report.valid_after {
            Ok(OmStatus::Ok)
        } else {
            Err(Failure::new(OmStatus::Unrepairable, "document is still invalid after repair"))
        }
    })
}

/// Counts validation issues in an alignment document; when there are any,
/// [`om_last_error`] holds the first one.
///
/// # Safety
/// `xml` must be a NUL-terminated string; `out_issues` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_validate(xml: *const c_char, out_issues: *mut usize) -> OmStatus {
    guard(|| {
        check_out(out_issues, "out_issues")?;
        let issues = edoal::validate(text(xml, "xml")?);
        *out_issues = issues.len();
        if let Some(first) = issues.first() {
            set_error(first.message.clone());
        }
        Ok(OmStatus::Ok)
    })
}

/// Number of cells, or 0 for a null handle.
///
/// # Safety
/// `alignment` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_cell_count(alignment: *const OmAlignment) -> usize {
    alignment.as_ref().map_or(0, |a| a.0.cells.len())
}

/// # Safety
/// `alignment` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_to_xml(alignment: *const OmAlignment, out: *mut *mut c_char) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        put_string(out, edoal::serialize_alignment(&handle(alignment, "alignment")?.0));
        Ok(OmStatus::Ok)
    })
}

/// Merges `count` alignments into a new handle, removing duplicate cells.
///
/// # Safety
/// `items` must point to `count` live handles (it may be null when `count`
/// is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_merge(
    items: *const *const OmAlignment,
    count: usize,
    out: *mut *mut OmAlignment,
) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        if items.is_null() && count > 0 {
            return Err(Failure::new(OmStatus::NullArgument, "items is null"));
        }
        let slice = if count == 0 { &[][..] } else { std::slice::from_raw_parts(items, count) };
        let parts = slice
            .iter()
            .enumerate()
            .map(|(i, p)| handle(*p, &format!("items[{i}]")).map(|a| a.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let merged = edoal::merge(&parts).map_err(|e| Failure::new(OmStatus::Conflict, e))?;
        put_box(out, OmAlignment(merged));
        Ok(OmStatus::Ok)
    })
}

/// # Safety
/// `alignment` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_free(alignment: *mut OmAlignment) {
    if !alignment.is_null() {
        drop(Box::from_raw(alignment));
    }
}

/// Scores `system` against `reference` with relaxed precision and recall.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_score(
    system: *const OmAlignment,
    reference: *const OmAlignment,
    out: *mut OmScores,
) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        let r = eval::score(&handle(system, "system")?.0, &handle(reference, "reference")?.0);
        *out = OmScores {
            simple_precision: r.simple.precision,
            simple_recall: r.simple.recall,
            simple_f1: r.simple.f1,
            complex_precision: r.complex.precision,
            complex_recall: r.complex.recall,
            complex_f1: r.complex.f1,
        };
        Ok(OmStatus::Ok)
    })
}

/// Deterministic token estimate of `text`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_estimate_tokens(input: *const c_char, out: *mut usize) -> OmStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = reduction::estimate_tokens(text(input, "input")?);
        Ok(OmStatus::Ok)
    })
}
