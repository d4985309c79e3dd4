use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use isp_ffi::*;
use serde_json::Value;

fn fixture(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = isp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

/// Takes ownership of a library string.
fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { isp_string_free(s) };
    out
}

struct Loaded {
    cat: *mut IspCatalog,
    emb: *mut IspEmbedding,
}

impl Drop for Loaded {
    fn drop(&mut self) {
        unsafe {
            isp_embedding_free(self.emb);
            isp_catalog_free(self.cat);
        }
    }
}

fn load(name: &str, pairs: Option<&str>) -> Loaded {
    let path = fixture(name);
    let pairs = pairs.map(|p| CString::new(p).unwrap());
    let mut cat = ptr::null_mut();
    let status = unsafe {
        isp_catalog_load(path.as_ptr(), ptr::null(), pairs.as_ref().map_or(ptr::null(), |p| p.as_ptr()), &mut cat)
    };
    assert_eq!(status, IspStatus::Ok);
    let mut emb = ptr::null_mut();
    assert_eq!(unsafe { isp_embedding_tfidf(cat, 64, &mut emb) }, IspStatus::Ok);
    Loaded { cat, emb }
}

#[test]
fn solve_round_trip() {
    let l = load("small.csv", None);
    assert_eq!(unsafe { isp_catalog_item_count(l.cat) }, 10);
    assert_eq!(unsafe { isp_catalog_label_count(l.cat) }, 16);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { isp_solve(l.cat, l.emb, ptr::null(), &mut res) }, IspStatus::Ok);
    let len = unsafe { isp_result_len(res) };
    assert_eq!(len, unsafe { isp_result_k(res) });
    assert_eq!(unsafe { isp_result_coverage(res) }, 1.0);

    let mut js = ptr::null_mut();
    assert_eq!(unsafe { isp_result_to_json(res, &mut js) }, IspStatus::Ok);
    let v: Value = serde_json::from_str(&take(js)).unwrap();
    let ids: Vec<String> = (0..len)
        .map(|i| {
            let mut s = ptr::null_mut();
            assert_eq!(unsafe { isp_result_item(res, i, &mut s) }, IspStatus::Ok);
            take(s)
        })
        .collect();
    assert_eq!(v["final"]["item_ids"], serde_json::json!(ids));
    unsafe { isp_result_free(res) };
}

#[test]
fn bounded_solve_respects_t() {
    let l = load("movies_1000.csv", Some("genre:language"));
    let mut opts = isp_solve_options_default();
    opts.t = 7;
    opts.backend = IspBackend::Greedy;
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { isp_solve(l.cat, l.emb, &opts, &mut res) }, IspStatus::Ok);
    assert!(unsafe { isp_result_len(res) } <= 7);
    unsafe { isp_result_free(res) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let missing = CString::new("/nonexistent/catalog.csv").unwrap();
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { isp_catalog_load(missing.as_ptr(), ptr::null(), ptr::null(), &mut cat) }, IspStatus::Io);
    assert!(last_error().contains("nonexistent"));
    assert!(cat.is_null());

    assert_eq!(
        unsafe { isp_catalog_load(ptr::null(), ptr::null(), ptr::null(), &mut cat) },
        IspStatus::NullPointer
    );
    let path = fixture("small.csv");
    let bad = CString::new("genre:studio").unwrap();
    assert_eq!(
        unsafe { isp_catalog_load(path.as_ptr(), ptr::null(), bad.as_ptr(), &mut cat) },
        IspStatus::InvalidInput
    );
    assert!(last_error().contains("studio"));

    let l = load("small.csv", None);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { isp_solve(l.cat, ptr::null(), ptr::null(), &mut res) }, IspStatus::NullPointer);
    assert_eq!(unsafe { isp_solve(l.cat, l.emb, ptr::null(), &mut res) }, IspStatus::Ok);
    assert!(isp_last_error().is_null());
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { isp_result_item(res, 1000, &mut s) }, IspStatus::OutOfRange);
    assert!(s.is_null());
    unsafe { isp_result_free(res) };

    // Null handles are tolerated by the free and count functions.
    unsafe {
        isp_result_free(ptr::null_mut());
        isp_string_free(ptr::null_mut());
        assert_eq!(isp_catalog_item_count(ptr::null()), 0);
    }
}

#[test]
fn warm_start_reports_assignments() {
    let l = load("small.csv", None);
    let ids = [CString::new("s01").unwrap(), CString::new("s05").unwrap()];
    let ptrs: Vec<*const c_char> = ids.iter().map(|s| s.as_ptr()).collect();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { isp_warm_start(l.cat, l.emb, ptrs.as_ptr(), 2, 0.5, &mut out) }, IspStatus::Ok);
    let v: Value = serde_json::from_str(&take(out)).unwrap();
    let n = v["assignments"].as_array().unwrap().len() + v["unmatched"].as_array().unwrap().len();
    assert_eq!(n, 8);

    assert_eq!(unsafe { isp_warm_start(l.cat, l.emb, ptrs.as_ptr(), 2, 0.0, &mut out) }, IspStatus::InvalidInput);
    let unknown = [CString::new("zzz").unwrap()];
    let ptrs: Vec<*const c_char> = unknown.iter().map(|s| s.as_ptr()).collect();
    assert_eq!(unsafe { isp_warm_start(l.cat, l.emb, ptrs.as_ptr(), 1, 0.5, &mut out) }, IspStatus::InvalidInput);
}

#[test]
fn simulate_from_json_config() {
    let path = fixture("clustered_400.csv");
    let emb_path = fixture("clustered_400.emb");
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { isp_catalog_load(path.as_ptr(), ptr::null(), ptr::null(), &mut cat) }, IspStatus::Ok);
    let mut emb = ptr::null_mut();
    assert_eq!(unsafe { isp_embedding_load(emb_path.as_ptr(), cat, &mut emb) }, IspStatus::Ok);
    let l = Loaded { cat, emb };
    let cfg = CString::new(r#"{"K": 100, "k": 10, "n": 2, "batch": 10, "q": 0.1, "seed": 3}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { isp_simulate(l.cat, l.emb, cfg.as_ptr(), &mut out) }, IspStatus::Ok);
    let v: Value = serde_json::from_str(&take(out)).unwrap();
    for r in v["records"].as_array().unwrap() {
        assert_eq!(r["warm_after"].as_u64().unwrap(), 20 + r["warmstarted"].as_u64().unwrap());
    }
    let bad = CString::new("{\"K\": ").unwrap();
    assert_eq!(unsafe { isp_simulate(l.cat, l.emb, bad.as_ptr(), &mut out) }, IspStatus::Parse);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(isp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/isp.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

/// Compiles the C smoke program against the static library and runs it.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // Test binaries live in <target>/<profile>/deps.
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libisp_ffi.a");
    assert!(lib.is_file(), "{} not built", lib.display());
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("isp_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("run C compiler");
    assert!(status.success());
    let out = Command::new(&exe).arg(fixture("small.csv").to_str().unwrap()).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.starts_with("items=10 k="), "{stdout}");
}
