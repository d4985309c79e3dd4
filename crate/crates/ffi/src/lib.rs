//! C ABI over `isp-core`.
//!
//! Every fallible call returns an [`IspStatus`]; on failure the message is
//! available from [`isp_last_error`] on the same thread. Handles are opaque
//! and must be released with their matching `*_free` function. Strings
//! returned through `out` parameters are owned by the caller and released
//! with [`isp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isp_core::catalog::parse_pairs;
use isp_core::{
    build_incidence, load_catalog, load_embeddings, simulate, solve_isp, tfidf_embed, warm_start, Backend, Catalog,
    CatalogFormat, EmbeddingMatrix, Error, IncidenceMatrix, IspConfig, IspResult as CoreResult, SimulationConfig,
};

/// Result codes. `ISP_STATUS_OK` is zero; every other value is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    Infeasible = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Solver backend for every level.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IspBackend {
    Auto = 0,
    Exact = 1,
    Greedy = 2,
}

/// Options for [`isp_solve`]; start from [`isp_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IspSolveOptions {
    /// Final selection bound; 0 means no bound.
    pub t: usize,
    pub seed: u64,
    pub backend: IspBackend,
    /// Per-level time budget for the exact backend.
    pub time_budget_ms: u64,
    /// Fail instead of dropping uncoverable labels.
    pub strict: bool,
}

/// A loaded catalog with its label incidence matrix.
pub struct IspCatalog {
    catalog: Catalog,
    incidence: IncidenceMatrix,
}

/// Item embeddings aligned with a catalog.
pub struct IspEmbedding {
    inner: EmbeddingMatrix,
}

/// Output of [`isp_solve`].
pub struct IspResult {
    inner: CoreResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(IspStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => IspStatus::Io,
            Error::Parse { .. } | Error::Json(_) => IspStatus::Parse,
            Error::Infeasible(_) | Error::InfeasibleCatalog(_) => IspStatus::Infeasible,
            _ => IspStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> IspStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IspStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            IspStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(IspStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(IspStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn out_check<T>(out: *mut T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(null(what))
    } else {
        Ok(())
    }
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(IspStatus::InvalidInput, "string contains a nul byte".into()))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::from(Error::from(e)))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next `isp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn isp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn isp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn isp_solve_options_default() -> IspSolveOptions {
    let d = IspConfig::default();
    IspSolveOptions {
        t: 0,
        seed: d.seed,
        backend: IspBackend::Auto,
        time_budget_ms: d.time_budget_ms,
        strict: d.strict,
    }
}

/// Loads a CSV or JSON catalog (by extension) and builds its incidence
/// matrix. `categories` is a comma-separated list, null for all;
/// `pairs` is e.g. `"genre:language"`, null for none.
///
/// # Safety
/// String arguments must be null or nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isp_catalog_load(
    path: *const c_char,
    categories: *const c_char,
    pairs: *const c_char,
    out: *mut *mut IspCatalog,
) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let path = str_arg(path, "path")?;
        let catalog = load_catalog(path, CatalogFormat::from_path(path.as_ref()))?;
        let categories: Vec<String> = match opt_str_arg(categories, "categories")? {
            Some(c) => c.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect(),
            None => catalog.categories.clone(),
        };
        let pairs = match opt_str_arg(pairs, "pairs")? {
            Some(p) => parse_pairs(p)?,
            None => Vec::new(),
        };
        let incidence = build_incidence(&catalog, &categories, &pairs)?;
        *out = Box::into_raw(Box::new(IspCatalog { catalog, incidence }));
        Ok(())
    })
}

/// # Safety
/// `catalog` must be null or a live handle from [`isp_catalog_load`].
#[no_mangle]
pub unsafe extern "C" fn isp_catalog_free(catalog: *mut IspCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Number of items, or 0 for a null handle.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isp_catalog_item_count(catalog: *const IspCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.catalog.len())
}

/// Number of incidence rows (labels and observed pairs), or 0 for null.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isp_catalog_label_count(catalog: *const IspCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.incidence.n_rows())
}

/// TF-IDF embedding of the item texts, L2-normalized.
///
/// # Safety
/// `catalog` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isp_embedding_tfidf(
    catalog: *const IspCatalog,
    vocab_size: usize,
    out: *mut *mut IspEmbedding,
) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let c = handle(catalog, "catalog")?;
        let inner = tfidf_embed(&c.catalog, vocab_size, true)?;
        *out = Box::into_raw(Box::new(IspEmbedding { inner }));
        Ok(())
    })
}

/// Reads an embedding file and aligns it with the catalog's item order.
///
/// # Safety
/// `path` must be nul-terminated, `catalog` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isp_embedding_load(
    path: *const c_char,
    catalog: *const IspCatalog,
    out: *mut *mut IspEmbedding,
) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let path = str_arg(path, "path")?;
        let c = handle(catalog, "catalog")?;
        let inner = load_embeddings(path, &c.catalog)?;
        *out = Box::into_raw(Box::new(IspEmbedding { inner }));
        Ok(())
    })
}

/// # Safety
/// `embedding` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isp_embedding_free(embedding: *mut IspEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}

/// Solves the three-level selection. `options` may be null for defaults.
///
/// # Safety
/// Handles must be live; `options` null or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isp_solve(
    catalog: *const IspCatalog,
    embedding: *const IspEmbedding,
    options: *const IspSolveOptions,
    out: *mut *mut IspResult,
) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let c = handle(catalog, "catalog")?;
        let e = handle(embedding, "embedding")?;
        let o = options.as_ref().copied().unwrap_or_else(|| isp_solve_options_default());
        let backend = match o.backend {
            IspBackend::Auto => Backend::Auto,
            IspBackend::Exact => Backend::Exact,
            IspBackend::Greedy => Backend::Greedy,
        };
        let mut config = IspConfig {
            t: (o.t > 0).then_some(o.t),
            seed: o.seed,
            time_budget_ms: o.time_budget_ms,
            strict: o.strict,
            ..Default::default()
        };
        config.backends.unicost = backend;
        config.backends.diverse = backend;
        config.backends.max_cover = backend;
        let inner = solve_isp(&c.incidence, &e.inner, &config)?;
        *out = Box::into_raw(Box::new(IspResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isp_result_free(result: *mut IspResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Size of the unicost cover, or 0 for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isp_result_k(result: *const IspResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.k)
}

/// Number of items in the final selection, or 0 for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isp_result_len(result: *const IspResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.final_selection.len())
}

/// Fraction of incidence rows the final selection covers.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isp_result_coverage(result: *const IspResult) -> f64 {
    result.as_ref().map_or(0.0, |r| r.inner.coverage.final_selection.fraction())
}

/// Copies the id of the `index`-th final item into a new string.
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isp_result_item(result: *const IspResult, index: usize, out: *mut *mut c_char) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let r = handle(result, "result")?;
        let ids = &r.inner.final_selection.item_ids;
        let id = ids.get(index).ok_or_else(|| {
            Failure(IspStatus::OutOfRange, format!("index {index} out of range for {} item(s)", ids.len()))
        })?;
        *out = to_c_string(id.clone())?;
        Ok(())
    })
}

/// Whole result (all levels, costs, coverage) as JSON.
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isp_result_to_json(result: *const IspResult, out: *mut *mut c_char) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let r = handle(result, "result")?;
        *out = to_c_string(json(&r.inner)?)?;
        Ok(())
    })
}

/// Warm-starts every non-warm item from the `n_warm` ids in `warm` at
/// quantile `q`; writes the assignment map as JSON.
///
/// # Safety
/// `warm` must point to `n_warm` nul-terminated strings; handles live.
#[no_mangle]
pub unsafe extern "C" fn isp_warm_start(
    catalog: *const IspCatalog,
    embedding: *const IspEmbedding,
    warm: *const *const c_char,
    n_warm: usize,
    q: f64,
    out: *mut *mut c_char,
) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let c = handle(catalog, "catalog")?;
        let e = handle(embedding, "embedding")?;
        if warm.is_null() && n_warm > 0 {
            return Err(null("warm"));
        }
        let warm: Vec<String> = (0..n_warm)
            .map(|i| str_arg(*warm.add(i), "warm id").map(str::to_owned))
            .collect::<Result<_, _>>()?;
        for id in &warm {
            if c.catalog.index_of(id).is_none() {
                return Err(Error::UnknownItem(id.clone()).into());
            }
        }
        let cold: Vec<String> = c.catalog.item_ids().into_iter().filter(|id| !warm.contains(id)).collect();
        let map = warm_start(&warm, &cold, &e.inner, q)?;
        *out = to_c_string(json(&map)?)?;
        Ok(())
    })
}

/// Runs the exploration simulation from a JSON config (the `simulation`
/// object of a CLI config file) and writes the result as JSON.
///
/// # Safety
/// `config_json` must be nul-terminated; handles live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isp_simulate(
    catalog: *const IspCatalog,
    embedding: *const IspEmbedding,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> IspStatus {
    guard(|| {
        out_check(out, "out")?;
        let c = handle(catalog, "catalog")?;
        let e = handle(embedding, "embedding")?;
        let text = str_arg(config_json, "config_json")?;
        let config: SimulationConfig = serde_json::from_str(text).map_err(|e| Failure::from(Error::from(e)))?;
        let result = simulate(&c.incidence, &e.inner, &config)?;
        *out = to_c_string(json(&result)?)?;
        Ok(())
    })
}
