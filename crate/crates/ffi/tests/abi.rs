use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use ontomatch_ffi::*;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> Option<String> {
    let p = om_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    om_string_free(p);
    s
}

unsafe fn load_alignment(rel: &str) -> *mut OmAlignment {
    let xml = c(&std::fs::read_to_string(fixture(rel)).unwrap());
    let mut a = ptr::null_mut();
    assert_eq!(om_alignment_parse(xml.as_ptr(), &mut a), OmStatus::Ok);
    a
}

#[test]
fn graph_load_and_serialize() {
    unsafe {
        let path = c(fixture("toy/source.ttl").to_str().unwrap());
        let mut g = ptr::null_mut();
        assert_eq!(om_graph_load(path.as_ptr(), &mut g), OmStatus::Ok);
        let n = om_graph_triple_count(g);
        assert!(n > 0);
        let mut out = ptr::null_mut();
        assert_eq!(om_graph_to_turtle(g, &mut out), OmStatus::Ok);
        let ttl = c(&take(out));
        let mut g2 = ptr::null_mut();
        assert_eq!(om_graph_parse_turtle(ttl.as_ptr(), &mut g2), OmStatus::Ok);
        assert_eq!(om_graph_triple_count(g2), n);
        om_graph_free(g);
        om_graph_free(g2);
        assert_eq!(om_graph_triple_count(ptr::null()), 0);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut g = ptr::null_mut();
        let missing = c("/nonexistent/onto.ttl");
        assert_eq!(om_graph_load(missing.as_ptr(), &mut g), OmStatus::Io);
        assert!(last_error().unwrap().contains("nonexistent"));
        assert!(g.is_null());

        assert_eq!(om_graph_parse_turtle(ptr::null(), &mut g), OmStatus::NullArgument);
        let bad = c("<a> <b>");
        assert_eq!(om_graph_parse_turtle(bad.as_ptr(), &mut g), OmStatus::ParseError);
        assert_eq!(om_graph_parse_turtle(bad.as_ptr(), ptr::null_mut()), OmStatus::NullArgument);

        let invalid_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(om_graph_parse_turtle(invalid_utf8.as_ptr().cast(), &mut g), OmStatus::InvalidUtf8);

        let ok = c("");
        assert_eq!(om_graph_parse_turtle(ok.as_ptr(), &mut g), OmStatus::Ok);
        assert_eq!(last_error(), None);
        om_graph_free(g);
    }
}

#[test]
fn repair_validate_and_merge() {
    unsafe {
        let a = load_alignment("references/toy.edoal");
        let cells = om_alignment_cell_count(a);
        assert!(cells > 0);
        let mut xml = ptr::null_mut();
        assert_eq!(om_alignment_to_xml(a, &mut xml), OmStatus::Ok);
        let text = take(xml);

        let mut issues = 7;
        let ctext = c(&text);
        assert_eq!(om_validate(ctext.as_ptr(), &mut issues), OmStatus::Ok);
        assert_eq!(issues, 0);

        let broken = c(&format!("{text}\n</s>"));
        assert_eq!(om_validate(broken.as_ptr(), &mut issues), OmStatus::Ok);
        assert!(issues > 0);
        assert!(last_error().is_some());
        let (mut fixed, mut fixes) = (ptr::null_mut(), 0usize);
        assert_eq!(om_repair(broken.as_ptr(), &mut fixed, &mut fixes), OmStatus::Ok);
        assert!(fixes > 0);
        assert_eq!(take(fixed).trim_end(), text.trim_end());

        let parts = [a as *const OmAlignment, a as *const OmAlignment];
        let mut merged = ptr::null_mut();
        assert_eq!(om_alignment_merge(parts.as_ptr(), 2, &mut merged), OmStatus::Ok);
        assert_eq!(om_alignment_cell_count(merged), cells);
        let mut empty = ptr::null_mut();
        assert_eq!(om_alignment_merge(ptr::null(), 0, &mut empty), OmStatus::Ok);
        assert_eq!(om_alignment_cell_count(empty), 0);
        assert_eq!(om_alignment_merge(ptr::null(), 1, &mut empty), OmStatus::NullArgument);

        let other = load_alignment("references/geo.edoal");
        let clash = [a as *const OmAlignment, other as *const OmAlignment];
        let mut out = ptr::null_mut();
        assert_eq!(om_alignment_merge(clash.as_ptr(), 2, &mut out), OmStatus::Conflict);

        let mut s = OmScores::default();
        assert_eq!(om_score(merged, a, &mut s), OmStatus::Ok);
        assert_eq!((s.simple_f1, s.complex_f1), (1.0, 1.0));
        assert_eq!(om_score(empty, a, &mut s), OmStatus::Ok);
        assert_eq!(s.simple_recall, 0.0);
        assert_eq!(om_score(ptr::null(), a, &mut s), OmStatus::NullArgument);

        for h in [a, merged, empty, other] {
            om_alignment_free(h);
        }
    }
}

#[test]
fn token_estimate_matches_library() {
    let text = "ex:Paper rdfs:label \"Accepted paper\"@en .";
    let mut n = 0;
    let ct = c(text);
    assert_eq!(unsafe { om_estimate_tokens(ct.as_ptr(), &mut n) }, OmStatus::Ok);
    assert_eq!(n, ontomatch::reduction::estimate_tokens(text));
    assert!(!unsafe { CStr::from_ptr(om_version()) }.to_bytes().is_empty());
}

#[test]
fn header_is_current_and_compiles_with_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/ontomatch.h")).unwrap();
    for sym in
        ["om_graph_parse_turtle", "om_repair", "om_alignment_merge", "om_score", "om_last_error", "OM_STATUS_PANIC"]
    {
        assert!(header.contains(sym), "{sym} missing from header");
    }

    let target = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target.join("libontomatch_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let tmp = std::env::temp_dir().join(format!("ontomatch_smoke_{}", std::process::id()));
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let build = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&tmp)
        .output()
        .expect("C compiler");
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&tmp).arg(fixture("references/toy.edoal")).output().unwrap();
    let _ = std::fs::remove_file(&tmp);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
