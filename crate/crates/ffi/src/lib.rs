//! C ABI over the spatiolog engine.
//!
//! Handles are opaque and owned by the caller once returned; each has exactly
//! one matching `_free`. Every fallible call returns an [`SlStatus`] and, on
//! failure, leaves a message retrievable through [`sl_last_error`] on the
//! same thread. No panic crosses the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use spatiolog::bench::{self, DatasetSpec};
use spatiolog::engine_entity::{self, Value};
use spatiolog::engine_relation;
use spatiolog::qlang::{parse, validate, Paradigm};
use spatiolog::store::{load_entities_csv, load_entities_geojson, LoadOptions, RelationRef};
use spatiolog::{Catalog, Error};

/// Result codes. `SL_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    SlOk = 0,
    SlNullArgument = 1,
    SlInvalidUtf8 = 2,
    SlIo = 3,
    SlParse = 4,
    SlValidation = 5,
    SlData = 6,
    SlEval = 7,
    SlOutOfRange = 8,
    SlWrongKind = 9,
    SlPanic = 10,
}

/// Evaluation paradigm for [`sl_query_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlMode {
    SlEntity = 0,
    SlRelation = 1,
    /// Relation evaluation whose result rows are resolved to entities one by one.
    SlRelationIterator = 2,
}

/// Cell type of a result column.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlKind {
    SlId = 0,
    SlReal = 1,
}

/// A loaded set of layers and type specs.
pub struct SlCatalog {
    inner: Catalog,
}

/// The rows of one query answer. Independent of the catalog once produced.
pub struct SlResult {
    columns: Vec<CString>,
    rows: Vec<Vec<Value>>,
    index_probes: u64,
    distance_evals: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes were replaced"));
}

struct Fail(SlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) => SlStatus::SlParse,
            Error::Validation(_) => SlStatus::SlValidation,
            Error::Io(_) => SlStatus::SlIo,
            Error::Eval { .. } => SlStatus::SlEval,
            _ => SlStatus::SlData,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::SlOk,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SlStatus::SlPanic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SlStatus::SlNullArgument, format!("`{what}` is null"))
}

/// # Safety
/// `p` is null or a valid nul-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(SlStatus::SlInvalidUtf8, format!("`{what}` is not UTF-8")))
}

/// # Safety
/// `p` is null or a handle from [`sl_catalog_new`] not yet freed.
unsafe fn catalog<'a>(p: *const SlCatalog) -> Result<&'a Catalog, Fail> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| null("catalog"))
}

/// # Safety
/// `p` is null or a handle from [`sl_query_run`] not yet freed.
unsafe fn result<'a>(p: *const SlResult) -> Result<&'a SlResult, Fail> {
    p.as_ref().ok_or_else(|| null("result"))
}

/// Message of the last failure on this thread. Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New empty catalog with the default type specs. Null only on internal failure.
#[no_mangle]
pub extern "C" fn sl_catalog_new() -> *mut SlCatalog {
    catch_unwind(|| Box::into_raw(Box::new(SlCatalog { inner: Catalog::new() }))).unwrap_or(ptr::null_mut())
}

/// # Safety
/// `catalog` is null or a live handle from [`sl_catalog_new`].
#[no_mangle]
pub unsafe extern "C" fn sl_catalog_free(catalog: *mut SlCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

unsafe fn load(
    cat: *const SlCatalog,
    path: *const c_char,
    category: *const c_char,
    lonlat: bool,
    out_count: *mut usize,
    geojson: bool,
) -> SlStatus {
    guard(|| {
        let c = catalog(cat)?;
        let path = Path::new(text(path, "path")?);
        let category = text(category, "category")?;
        let options = LoadOptions { lonlat };
        let rel = if geojson {
            load_entities_geojson(c, path, category, options)
        } else {
            load_entities_csv(c, path, category, options)
        }
        .map_err(|e| Fail::from(Error::from(e)))?;
        c.spatial_index(rel.name()).map_err(|e| Fail::from(Error::from(e)))?;
        if let Some(out) = out_count.as_mut() {
            *out = rel.len();
        }
        Ok(())
    })
}

/// Loads a CSV layer (`id,code,wkt` or `id,code,x,y`) as `category`.
///
/// # Safety
/// Pointers are null or valid; `out_count` may be null.
#[no_mangle]
pub unsafe extern "C" fn sl_catalog_load_csv(
    catalog: *mut SlCatalog,
    path: *const c_char,
    category: *const c_char,
    lonlat: bool,
    out_count: *mut usize,
) -> SlStatus {
    load(catalog, path, category, lonlat, out_count, false)
}

/// Loads a GeoJSON FeatureCollection as `category`.
///
/// # Safety
/// Pointers are null or valid; `out_count` may be null.
#[no_mangle]
pub unsafe extern "C" fn sl_catalog_load_geojson(
    catalog: *mut SlCatalog,
    path: *const c_char,
    category: *const c_char,
    lonlat: bool,
    out_count: *mut usize,
) -> SlStatus {
    load(catalog, path, category, lonlat, out_count, true)
}

/// Adds `name = codes` type spec lines, overriding same-named specs.
///
/// # Safety
/// Pointers are null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_catalog_load_typespecs(catalog: *mut SlCatalog, spec_text: *const c_char) -> SlStatus {
    guard(|| {
        let c = self::catalog(catalog)?;
        c.load_type_specs(text(spec_text, "spec_text")?).map_err(|e| Fail::from(Error::from(e)))?;
        Ok(())
    })
}

/// Registers the default synthetic dataset for `seed` with an `accidents`
/// layer of `accidents` entities sampled from its pool.
///
/// # Safety
/// `catalog` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_catalog_generate(catalog: *mut SlCatalog, seed: u64, accidents: usize) -> SlStatus {
    guard(|| {
        let c = self::catalog(catalog)?;
        let spec = DatasetSpec { seed, ..DatasetSpec::default() };
        let bench_err = |e: bench::BenchError| Fail(SlStatus::SlData, e.to_string());
        let ds = bench::generate(&spec).map_err(bench_err)?;
        ds.register(c).map_err(|e| Fail::from(Error::from(e)))?;
        bench::install_sample(c, &ds.accidents, accidents, seed).map_err(bench_err)?;
        Ok(())
    })
}

/// Parses, validates and evaluates `query` in `mode`. On success `*out` owns a new result.
///
/// # Safety
/// Pointers are null or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_query_run(
    catalog: *mut SlCatalog,
    query: *const c_char,
    mode: SlMode,
    out: *mut *mut SlResult,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let c = self::catalog(catalog)?;
        let program = parse(text(query, "query")?).map_err(Error::from)?;
        let paradigm = if mode == SlMode::SlEntity { Paradigm::Entity } else { Paradigm::Relation };
        let checked = validate(&program, Some(c), paradigm).map_err(Error::from)?;
        let res = if mode == SlMode::SlEntity {
            let o = engine_entity::run(&checked, c)?;
            SlResult {
                columns: o.answer_vars.iter().map(|v| cstring(v)).collect(),
                rows: o.rows,
                index_probes: o.counters.index_probes,
                distance_evals: o.counters.distance_evals,
            }
        } else {
            let (o, _) = if mode == SlMode::SlRelationIterator {
                engine_relation::run_with_iteration(&checked, c)?
            } else {
                (engine_relation::run(&checked, c)?, 0)
            };
            let columns = match &o.result {
                RelationRef::Entity(_) => vec![cstring("id")],
                RelationRef::Relationship(r) => r.schema().iter().map(|s| cstring(s)).collect(),
            };
            let rows = engine_relation::result_rows(&o.result)
                .into_iter()
                .map(|r| r.into_iter().map(Value::Id).collect())
                .collect();
            c.drop_generated();
            SlResult {
                columns,
                rows,
                index_probes: o.counters.index_probes,
                distance_evals: o.counters.distance_evals,
            }
        };
        *out = Box::into_raw(Box::new(res));
        Ok(())
    })
}

fn cstring(s: &str) -> CString {
    CString::new(s.replace('\0', " ")).expect("nul bytes were replaced")
}

/// # Safety
/// `result` is null or a live handle from [`sl_query_run`].
#[no_mangle]
pub unsafe extern "C" fn sl_result_free(result: *mut SlResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Row count; zero for a null handle.
///
/// # Safety
/// `result` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_result_rows(result: *const SlResult) -> usize {
    result.as_ref().map_or(0, |r| r.rows.len())
}

/// Column count; zero for a null handle.
///
/// # Safety
/// `result` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_result_columns(result: *const SlResult) -> usize {
    result.as_ref().map_or(0, |r| r.columns.len())
}

/// Column name owned by the result, or null when out of range.
///
/// # Safety
/// `result` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_result_column_name(result: *const SlResult, column: usize) -> *const c_char {
    result.as_ref().and_then(|r| r.columns.get(column)).map_or(ptr::null(), |c| c.as_ptr())
}

unsafe fn cell(result: *const SlResult, row: usize, column: usize) -> Result<Value, Fail> {
    let r = self::result(result)?;
    r.rows.get(row).and_then(|cells| cells.get(column)).copied().ok_or_else(|| {
        Fail(SlStatus::SlOutOfRange, format!("cell ({row}, {column}) outside {}x{}", r.rows.len(), r.columns.len()))
    })
}

/// Cell type at (`row`, `column`).
///
/// # Safety
/// `result` is null or a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_result_kind(result: *const SlResult, row: usize, column: usize, out: *mut SlKind) -> SlStatus {
    guard(|| {
        let kind = match cell(result, row, column)? {
            Value::Id(_) => SlKind::SlId,
            Value::Real(_) => SlKind::SlReal,
        };
        *out.as_mut().ok_or_else(|| null("out"))? = kind;
        Ok(())
    })
}

/// Entity id at (`row`, `column`); `SL_WRONG_KIND` for a real-valued cell.
///
/// # Safety
/// `result` is null or a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_result_id(result: *const SlResult, row: usize, column: usize, out: *mut u64) -> SlStatus {
    guard(|| match cell(result, row, column)? {
        Value::Id(id) => {
            *out.as_mut().ok_or_else(|| null("out"))? = id;
            Ok(())
        }
        Value::Real(_) => Err(Fail(SlStatus::SlWrongKind, format!("cell ({row}, {column}) is a real"))),
    })
}

/// Real value at (`row`, `column`); `SL_WRONG_KIND` for an id cell.
///
/// # Safety
/// `result` is null or a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_result_real(result: *const SlResult, row: usize, column: usize, out: *mut f64) -> SlStatus {
    guard(|| match cell(result, row, column)? {
        Value::Real(x) => {
            *out.as_mut().ok_or_else(|| null("out"))? = x;
            Ok(())
        }
        Value::Id(_) => Err(Fail(SlStatus::SlWrongKind, format!("cell ({row}, {column}) is an id"))),
    })
}

/// Spatial index probes spent producing the result.
///
/// # Safety
/// `result` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_result_index_probes(result: *const SlResult) -> u64 {
    result.as_ref().map_or(0, |r| r.index_probes)
}

/// Exact distance evaluations spent producing the result.
///
/// # Safety
/// `result` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_result_distance_evals(result: *const SlResult) -> u64 {
    result.as_ref().map_or(0, |r| r.distance_evals)
}
