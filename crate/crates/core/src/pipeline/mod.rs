//! Decompose, query and merge: plan module-pair tasks, query the model,
//! repair each partial alignment and merge them.

mod prompt;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prompt::{match_prompt, prompt_tokens, system_prompt};

use crate::config::RunConfig;
use crate::edoal::{merge_with_stats, parse_alignment, repair, serialize_alignment, Alignment, RepairReport};
use crate::gateway::{ChatMessage, Gateway, GatewayError};
use crate::rdf::{entity_index, label_of, vocab, Iri, OntologyGraph, RdfTerm, Subject};
use crate::reduction::{
    build_entity_digraph, cosine_candidates, extract_module, pagerank, top_k_anchors, EmbeddingVector, OntologyModule,
    Origin, ReductionError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("empty {0} ontology")]
    EmptyOntology(&'static str),
    #[error("no eligible anchor entities in the source ontology")]
    NoAnchors,
    #[error("target ontology has no classes or properties")]
    NoCandidates,
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchTask {
    pub index: usize,
    pub source_module: OntologyModule,
    pub target_module: OntologyModule,
    pub prompt: Vec<ChatMessage>,
    pub token_estimate: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRunReport {
    pub tasks: usize,
    pub repaired: usize,
    pub invalid: usize,
    pub dropped_tasks: usize,
    pub final_cells: usize,
    pub duplicates_removed: usize,
    pub discarded_cells: usize,
}

/// Text used to embed an entity: its label plus first comment.
pub fn entity_text(graph: &OntologyGraph, iri: &Iri) -> String {
    let label = label_of(graph, iri);
    let comment = graph.objects(iri, vocab::RDFS_COMMENT).find_map(|o| o.as_literal().map(|l| l.lexical.clone()));
    match comment {
        Some(c) => format!("{label} {c}"),
        None => label,
    }
}

/// IRI of the `owl:Ontology` node, if declared.
pub fn ontology_iri(graph: &OntologyGraph) -> Option<Iri> {
    graph.triples().iter().find_map(|t| match (&t.subject, &t.object) {
        (Subject::Iri(s), RdfTerm::Iri(o))
            if t.predicate.as_str() == vocab::RDF_TYPE && o.as_str() == vocab::OWL_ONTOLOGY =>
        {
            Some(s.clone())
        }
        _ => None,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plan {
    pub tasks: Vec<MatchTask>,
    pub dropped: usize,
}

/// Top `anchors_k` classes and properties by PageRank.
pub fn select_anchors(graph: &OntologyGraph, cfg: &RunConfig) -> Result<Vec<Iri>, PipelineError> {
    if graph.is_empty() {
        return Err(PipelineError::EmptyOntology("source"));
    }
    let scores = pagerank(&build_entity_digraph(graph), cfg.damping, 1e-10, 1000)?;
    let anchors = top_k_anchors(&scores, cfg.anchors_k, &entity_index(graph));
    if anchors.is_empty() {
        return Err(PipelineError::NoAnchors);
    }
    Ok(anchors)
}

/// One module per anchor of a single ontology.
pub fn source_modules(graph: &OntologyGraph, cfg: &RunConfig) -> Result<Vec<OntologyModule>, PipelineError> {
    select_anchors(graph, cfg)?
        .iter()
        .map(|a| Ok(extract_module(graph, std::slice::from_ref(a), cfg.hops, cfg.superclass_depth)?))
        .collect()
}

/// One task per source anchor, paired with a target module built around the
/// anchor's nearest target entities. Oversized tasks first shrink `hops`,
/// then split their candidate set, and are dropped when still too large.
pub fn plan_tasks(
    source: &OntologyGraph,
    target: &OntologyGraph,
    cfg: &RunConfig,
    gateway: &Gateway,
) -> Result<Plan, PipelineError> {
    if source.is_empty() {
        return Err(PipelineError::EmptyOntology("source"));
    }
    if target.is_empty() {
        return Err(PipelineError::EmptyOntology("target"));
    }
    let anchors = select_anchors(source, cfg)?;
    let pool_iris: Vec<Iri> =
        entity_index(target).into_values().filter(|e| e.kind.is_class_or_property()).map(|e| e.iri).collect();
    if pool_iris.is_empty() {
        return Err(PipelineError::NoCandidates);
    }
    let pool_vecs = gateway.embed(&pool_iris.iter().map(|i| entity_text(target, i)).collect::<Vec<_>>())?;
    let pool: BTreeMap<Iri, EmbeddingVector> = pool_iris.into_iter().zip(pool_vecs).collect();
    let anchor_vecs = gateway.embed(&anchors.iter().map(|i| entity_text(source, i)).collect::<Vec<_>>())?;

    let mut plan = Plan::default();
    for (anchor, query) in anchors.iter().zip(&anchor_vecs) {
        let candidates: Vec<Iri> =
            cosine_candidates(query, &pool, cfg.candidates_k)?.into_iter().map(|(i, _)| i).collect();
        fit_task(source, target, anchor, &candidates, cfg, &mut plan)?;
    }
    for (i, t) in plan.tasks.iter_mut().enumerate() {
        t.index = i;
    }
    Ok(plan)
}

fn build_task(
    source: &OntologyGraph,
    target: &OntologyGraph,
    anchor: &Iri,
    candidates: &[Iri],
    hops: usize,
    cfg: &RunConfig,
) -> Result<MatchTask, PipelineError> {
    let source_module = extract_module(source, std::slice::from_ref(anchor), hops, cfg.superclass_depth)?;
    let mut target_module = extract_module(target, candidates, hops, cfg.superclass_depth)?;
    target_module.origin = Origin::Target;
    let prompt = match_prompt(&source_module.to_turtle(), &target_module.to_turtle(), cfg.prompt_style);
    let token_estimate = prompt_tokens(&prompt);
    Ok(MatchTask { index: 0, source_module, target_module, prompt, token_estimate })
}

fn fit_task(
    source: &OntologyGraph,
    target: &OntologyGraph,
    anchor: &Iri,
    candidates: &[Iri],
    cfg: &RunConfig,
    plan: &mut Plan,
) -> Result<(), PipelineError> {
    for hops in (0..=cfg.hops).rev() {
        let task = build_task(source, target, anchor, candidates, hops, cfg)?;
        if task.token_estimate <= cfg.token_budget {
            if hops < cfg.hops {
                log::info!("task for {anchor} fits the budget with hops={hops}");
            }
            plan.tasks.push(task);
            return Ok(());
        }
    }
    if candidates.len() > 1 {
        let (a, b) = candidates.split_at(candidates.len() / 2);
        fit_task(source, target, anchor, a, cfg, plan)?;
        return fit_task(source, target, anchor, b, cfg, plan);
    }
    log::warn!("dropping task for anchor {anchor}: over the {}-token budget", cfg.token_budget);
    plan.dropped += 1;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskOutcome {
    pub index: usize,
    pub response: String,
    pub repaired_text: String,
    pub repair: RepairReport,
    pub alignment: Option<Alignment>,
    pub discarded_cells: usize,
}

impl TaskOutcome {
    pub fn is_valid(&self) -> bool {
        self.alignment.is_some()
    }
}

/// Repairs and parses one model response. Cells violating expression
/// invariants are discarded; ontology identities are set by the caller.
pub fn process_response(index: usize, response: String, onto1: Option<&Iri>, onto2: Option<&Iri>) -> TaskOutcome {
    let (repaired_text, report) = repair(&response);
    let mut discarded = 0;
    // structural issues are handled per cell below, so parse regardless of valid_after
    let alignment = parse_alignment(&repaired_text).ok().map(|mut a| {
        a.onto1 = onto1.cloned();
        a.onto2 = onto2.cloned();
        let before = a.cells.len();
        a.cells.retain(|c| c.entity1.structural_issues().is_empty() && c.entity2.structural_issues().is_empty());
        discarded = before - a.cells.len();
        a
    });
    TaskOutcome { index, response, repaired_text, repair: report, alignment, discarded_cells: discarded }
}

/// Sends every task through the gateway, concurrently up to its cap.
/// Gateway failures abort the run; bad responses only mark their task invalid.
pub fn run_tasks(
    tasks: &[MatchTask],
    gateway: &Gateway,
    onto1: Option<&Iri>,
    onto2: Option<&Iri>,
) -> Result<Vec<TaskOutcome>, PipelineError> {
    let results: Mutex<Vec<Option<Result<String, GatewayError>>>> = Mutex::new(vec![None; tasks.len()]);
    let next = AtomicUsize::new(0);
    let workers = gateway.config().max_concurrent.min(tasks.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= tasks.len() {
                    break;
                }
                let r = gateway.chat_messages(tasks[i].prompt.clone());
                let failed = r.is_err();
                results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                if failed {
                    next.store(tasks.len(), Ordering::SeqCst);
                }
            });
        }
    });
    let mut outcomes = Vec::with_capacity(tasks.len());
    for (i, r) in results.into_inner().unwrap_or_else(|e| e.into_inner()).into_iter().enumerate() {
        match r {
            Some(Ok(text)) => outcomes.push(process_response(tasks[i].index, text, onto1, onto2)),
            Some(Err(e)) => return Err(e.into()),
            // skipped after an earlier failure
            None => {}
        }
    }
    if outcomes.len() < tasks.len() {
        return Err(PipelineError::Gateway(GatewayError::Transport("run aborted".into())));
    }
    Ok(outcomes)
}

/// Merges the valid partials into the final alignment.
pub fn finalize(outcomes: &[TaskOutcome], onto1: Option<&Iri>, onto2: Option<&Iri>) -> (Alignment, MatchRunReport) {
    let partials: Vec<Alignment> = outcomes.iter().filter_map(|o| o.alignment.clone()).collect();
    let (mut merged, stats) =
        merge_with_stats(&partials).unwrap_or_else(|_| (Alignment::default(), Default::default()));
    merged.onto1 = onto1.cloned();
    merged.onto2 = onto2.cloned();
    if merged.onto1.is_some() && merged.onto1 == merged.onto2 {
        merged.onto2 = None;
    }
    let report = MatchRunReport {
        tasks: outcomes.len(),
        repaired: outcomes.iter().filter(|o| o.is_valid() && !o.repair.fixes.is_empty()).count(),
        invalid: outcomes.iter().filter(|o| !o.is_valid()).count(),
        dropped_tasks: 0,
        final_cells: merged.cells.len(),
        duplicates_removed: stats.duplicates_removed,
        discarded_cells: outcomes.iter().map(|o| o.discarded_cells).sum(),
    };
    (merged, report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub plan: Plan,
    pub outcomes: Vec<TaskOutcome>,
    pub alignment: Alignment,
    pub report: MatchRunReport,
}

pub fn run_match(
    source: &OntologyGraph,
    target: &OntologyGraph,
    cfg: &RunConfig,
    gateway: &Gateway,
) -> Result<MatchResult, PipelineError> {
    let plan = plan_tasks(source, target, cfg, gateway)?;
    let onto1 = ontology_iri(source);
    let onto2 = ontology_iri(target);
    let outcomes = run_tasks(&plan.tasks, gateway, onto1.as_ref(), onto2.as_ref())?;
    let (alignment, mut report) = finalize(&outcomes, onto1.as_ref(), onto2.as_ref());
    report.dropped_tasks = plan.dropped;
    Ok(MatchResult { plan, outcomes, alignment, report })
}

fn write(path: &Path, contents: &str) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
}

fn mkdir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
}

/// A fresh `runs/<timestamp>` directory under `out`; never reuses one.
pub fn new_run_dir(out: &Path) -> Result<PathBuf, PipelineError> {
    let runs = out.join("runs");
    mkdir(&runs)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let mut dir = runs.join(&stamp);
    let mut n = 1;
    while dir.exists() {
        dir = runs.join(format!("{stamp}-{n}"));
        n += 1;
    }
    mkdir(&dir)?;
    Ok(dir)
}

/// Writes `final.edoal` and `report.json` to `out`, and the per-task
/// transcripts plus copies of both files to a new run directory. Returns it.
pub fn write_artifacts(out: &Path, result: &MatchResult) -> Result<PathBuf, PipelineError> {
    mkdir(out)?;
    let run = new_run_dir(out)?;
    let final_xml = serialize_alignment(&result.alignment);
    let report = serde_json::to_string_pretty(&result.report).unwrap_or_default() + "\n";
    for outcome in &result.outcomes {
        let dir = run.join(format!("task_{:03}", outcome.index));
        mkdir(&dir)?;
        let task = &result.plan.tasks[outcome.index];
        let prompt: String =
            task.prompt.iter().map(|m| format!("### {}\n{}\n\n", m.role.as_str(), m.content)).collect();
        write(&dir.join("prompt.txt"), &prompt)?;
        write(&dir.join("response.txt"), &outcome.response)?;
        if let Some(a) = &outcome.alignment {
            write(&dir.join("partial.edoal"), &serialize_alignment(a))?;
        }
    }
    for dir in [out, run.as_path()] {
        write(&dir.join("final.edoal"), &final_xml)?;
        write(&dir.join("report.json"), &report)?;
    }
    Ok(run)
}
