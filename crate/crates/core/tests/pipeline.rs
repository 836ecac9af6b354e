mod common;

use std::sync::atomic::Ordering;

use ontomatch::config::RunConfig;
use ontomatch::edoal::{classify_cell, parse_alignment, serialize_alignment, validate, CellClass};
use ontomatch::pipeline::run_match;
use ontomatch::rdf::load_ontology;
use ontomatch::synthesis::{build_corpus, CorpusManifest, CorpusOptions};

fn toy_config() -> RunConfig {
    RunConfig::load(&common::fixtures_dir().join("toy").join("config.toml")).unwrap()
}

fn toy_match(max_concurrent: usize) -> String {
    let dir = common::fixtures_dir().join("toy");
    let (s, t) = (load_ontology(&dir.join("source.ttl")).unwrap(), load_ontology(&dir.join("target.ttl")).unwrap());
    let gw = common::gateway_with(common::SyntheticBackend, max_concurrent);
    serialize_alignment(&run_match(&s, &t, &toy_config(), &gw).unwrap().alignment)
}

#[test]
fn match_result_independent_of_parallelism() {
    let serial = toy_match(1);
    assert_eq!(serial, toy_match(4));
    let a = parse_alignment(&serial).unwrap();
    assert!(a.cells.iter().any(|c| classify_cell(c) == CellClass::Complex));
}

#[test]
fn gateway_caps_parallel_calls() {
    let dir = common::fixtures_dir().join("toy");
    let (s, t) = (load_ontology(&dir.join("source.ttl")).unwrap(), load_ontology(&dir.join("target.ttl")).unwrap());
    for cap in [1, 3] {
        let probe = common::ConcurrencyProbe::default();
        let gw = common::gateway_with(probe.clone(), cap);
        let result = run_match(&s, &t, &toy_config(), &gw).unwrap();
        let peak = probe.peak.load(Ordering::SeqCst);
        assert!(peak <= cap, "peak {peak} over cap {cap}");
        assert_eq!(probe.calls.load(Ordering::SeqCst), result.plan.tasks.len());
        if cap > 1 {
            assert!(peak > 1, "tasks never overlapped");
        }
    }
}

#[test]
fn corpus_generation_caps_parallel_calls() {
    let out = tempfile::tempdir().unwrap();
    let probe = common::ConcurrencyProbe::default();
    let gw = common::gateway_with(probe.clone(), 2);
    build_corpus(&CorpusOptions { n_pos: 4, n_neg: 2, seed0: 11, max_depth: 3 }, &gw, out.path()).unwrap();
    assert!(probe.peak.load(Ordering::SeqCst) <= 2);
    assert!(probe.calls.load(Ordering::SeqCst) >= 6);
}

fn corpus(seed0: u64, workers: usize) -> (tempfile::TempDir, String, CorpusManifest) {
    let out = tempfile::tempdir().unwrap();
    let gw = common::gateway_with(common::SyntheticBackend, workers);
    let m = build_corpus(&CorpusOptions { n_pos: 7, n_neg: 3, seed0, max_depth: 3 }, &gw, out.path()).unwrap();
    let text = std::fs::read_to_string(out.path().join("corpus.jsonl")).unwrap();
    (out, text, m)
}

#[test]
fn corpus_is_reproducible() {
    let (a_dir, a, _) = corpus(100, 1);
    let (b_dir, b, _) = corpus(100, 4);
    assert_eq!(a, b);
    let manifest = |d: &tempfile::TempDir| std::fs::read_to_string(d.path().join("manifest.json")).unwrap();
    assert_eq!(manifest(&a_dir), manifest(&b_dir));
    let (_, c, _) = corpus(500, 2);
    assert_ne!(a, c);
}

#[test]
fn corpus_records_match_manifest() {
    let (dir, text, m) = corpus(7, 3);
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), m.emitted);
    assert_eq!(m.emitted_positives + m.emitted_empties, m.emitted);
    assert_eq!(m.emitted + m.rejected, m.total);
    assert_eq!((m.positives, m.empties), (7, 3));
    let rejects = dir.path().join("rejects");
    let rejected = if rejects.exists() { std::fs::read_dir(&rejects).unwrap().count() } else { 0 };
    assert_eq!(rejected, m.rejected);

    let mut empties = 0;
    for rec in &lines {
        let roles: Vec<&str> =
            rec["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
        assert_eq!(roles, ["system", "user", "assistant"]);
        let answer = rec["messages"][2]["content"].as_str().unwrap();
        assert!(validate(answer).is_empty());
        if parse_alignment(answer).unwrap().cells.is_empty() {
            empties += 1;
        }
    }
    assert_eq!(empties, m.emitted_empties);
}
