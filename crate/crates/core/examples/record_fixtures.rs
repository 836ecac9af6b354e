//! Regenerates `fixtures/toy/mock.json` by running the toy match against the
//! synthetic model and recording every prompt hash with its response.
//!
//! cargo run -p ontomatch --example record_fixtures

#[path = "../tests/common/mod.rs"]
mod common;

use std::sync::Arc;

use ontomatch::config::RunConfig;
use ontomatch::gateway::Gateway;
use ontomatch::pipeline::run_match;
use ontomatch::rdf::load_ontology;

fn main() {
    let dir = common::fixtures_dir().join("toy");
    let cfg = RunConfig::load(&dir.join("config.toml")).expect("config");
    let source = load_ontology(&dir.join("source.ttl")).expect("source");
    let target = load_ontology(&dir.join("target.ttl")).expect("target");
    let recorder = common::Recording::new(common::SyntheticBackend);
    let log = recorder.log.clone();
    let gateway = Gateway::new(Arc::new(recorder), cfg.gateway.clone()).expect("gateway");
    let result = run_match(&source, &target, &cfg, &gateway).expect("match");
    let mut log = log.lock().expect("log").clone();
    // some responses carry a trailing end-of-sequence marker, as real models often emit
    for (hash, response) in log.iter_mut() {
        if hash.ends_with(['0', '2', '4', '6', '8', 'a', 'c', 'e']) {
            response.push_str("\n<|im_end|>");
        }
    }
    let path = dir.join("mock.json");
    std::fs::write(&path, serde_json::to_string_pretty(&log).expect("json") + "\n").expect("write");
    println!("{} fixtures, {} final cells -> {}", log.len(), result.report.final_cells, path.display());
}
