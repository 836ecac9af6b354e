//! Synthetic fine-tuning corpus: masked templates are filled by the model,
//! ontology pairs are generated around them, and everything is repaired,
//! validated and written as chat JSONL.

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PromptStyle;
use crate::edoal::{parse_alignment, repair, serialize_alignment, validate, Alignment, ExprKind, Fix, ParseOptions};
use crate::gateway::{ChatMessage, Gateway, GatewayError};
use crate::grammar::{default_cell_count, Deriver};
use crate::pipeline::{match_prompt, ontology_iri};
use crate::rdf::{parse_turtle, repair_turtle, serialize_turtle, vocab, Iri, OntologyGraph, Subject, Triple};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Positive,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthRecord {
    pub seed: u64,
    pub kind: RecordKind,
    pub messages: Vec<ChatMessage>,
    /// Alignment XML, or the raw model text when the record is invalid.
    pub target: String,
    pub valid: bool,
    pub fixes: Vec<Fix>,
    pub warnings: Vec<String>,
}

impl SynthRecord {
    /// The chat example: prompt messages plus the target as assistant turn.
    pub fn to_jsonl(&self) -> String {
        let mut messages = self.messages.clone();
        messages.push(ChatMessage::assistant(self.target.clone()));
        serde_json::json!({ "messages": messages }).to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub total: usize,
    pub positives: usize,
    pub empties: usize,
    pub emitted: usize,
    pub emitted_positives: usize,
    pub emitted_empties: usize,
    pub rejected: usize,
    pub valid_rate: f64,
    pub seed_range: (u64, u64),
}

pub const FILL_SYSTEM: &str = "You complete EDOAL alignment templates. Each MASK_n placeholder stands for an entity \
of an ontology. Replace every placeholder with a full IRI naming a plausible entity so that each correspondence is \
meaningful: onto1 entities on the entity1 side, onto2 entities on the entity2 side, using a different namespace for \
each ontology. Keep the structure of the document unchanged and answer with the completed document only.";

pub const ONTOLOGY_SYSTEM: &str =
    "You write OWL ontologies in Turtle. Declare every prefix you use, type every entity \
(owl:Class, owl:ObjectProperty, owl:DatatypeProperty or owl:NamedIndividual), and give each entity an rdfs:label. \
Answer with the Turtle document only.";

/// Positive:empty split of the reference corpus.
pub const DEFAULT_RATIO: (usize, usize) = (4650, 2000);

/// Splits `total` records in the default ratio, rounding positives to nearest.
pub fn split_total(total: usize) -> (usize, usize) {
    let (p, n) = DEFAULT_RATIO;
    let pos = (total * p + (p + n) / 2) / (p + n);
    (pos, total - pos)
}

const TOPICS: &[&str] = &[
    "conference organization",
    "marine biology",
    "railway infrastructure",
    "music publishing",
    "hospital administration",
    "astronomy observations",
    "agricultural supply chains",
    "medieval architecture",
    "software licensing",
    "wine production",
    "urban public transport",
    "volcanology",
];

/// Fills a template through the model. `None` when the output stays
/// unparseable or placeholders survive; the raw text and fixes are returned either way.
pub fn fill_template(
    template_xml: &str,
    gateway: &Gateway,
) -> Result<(Option<Alignment>, String, Vec<Fix>), GatewayError> {
    let response = gateway.chat_messages(vec![ChatMessage::system(FILL_SYSTEM), ChatMessage::user(template_xml)])?;
    let (repaired, report) = repair(&response);
    let masked = crate::edoal::parse_alignment_with(&repaired, ParseOptions { allow_masks: true })
        .map(|a| a.cells.iter().any(|c| has_mask(&c.entity1) || has_mask(&c.entity2)))
        .unwrap_or(false);
    let parsed = if masked { None } else { parse_alignment(&repaired).ok() };
    let parsed = parsed.filter(|a| validate(&serialize_alignment(a)).is_empty());
    Ok((parsed, repaired, report.fixes))
}

fn has_mask(e: &crate::edoal::EdoalExpression) -> bool {
    e.atoms().iter().any(|i| crate::edoal::is_mask(i.as_str()))
}

fn entity_list(a: &Alignment, first: bool) -> Vec<(ExprKind, Iri)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in &a.cells {
        let side = if first { &c.entity1 } else { &c.entity2 };
        for (k, i) in side.atomic_entities() {
            if seen.insert(i.clone()) {
                out.push((k, i.clone()));
            }
        }
    }
    out
}

fn declaration_type(kind: ExprKind) -> &'static str {
    match kind {
        ExprKind::Class => vocab::OWL_CLASS,
        ExprKind::Property => vocab::OWL_DATATYPE_PROPERTY,
        ExprKind::Relation => vocab::OWL_OBJECT_PROPERTY,
        ExprKind::Instance => vocab::OWL_NAMED_INDIVIDUAL,
    }
}

fn parse_generated(text: &str) -> Option<(OntologyGraph, bool)> {
    if let Ok(g) = parse_turtle(text) {
        return Some((g, false));
    }
    parse_turtle(&repair_turtle(text)).ok().map(|g| (g, true))
}

/// Adds a bare declaration for each entity the graph does not mention.
pub fn inject_missing(graph: OntologyGraph, entities: &[(ExprKind, Iri)]) -> (OntologyGraph, Vec<Iri>) {
    let rdf_type = Iri::new(vocab::RDF_TYPE).expect("valid");
    let missing: Vec<(ExprKind, Iri)> = entities.iter().filter(|(_, i)| !graph.mentions(i)).cloned().collect();
    let extra: Vec<Triple> = missing
        .iter()
        .map(|(k, i)| {
            Triple::new(Subject::Iri(i.clone()), rdf_type.clone(), Iri::new(declaration_type(*k)).expect("valid"))
        })
        .collect();
    let mut prefixes = graph.prefixes().clone();
    prefixes.entry("owl".into()).or_insert_with(|| Iri::new(vocab::OWL_NS).expect("valid"));
    (graph.extend(extra).with_prefixes(prefixes), missing.into_iter().map(|(_, i)| i).collect())
}

fn ontology_prompt(description: &str) -> Vec<ChatMessage> {
    vec![ChatMessage::system(ONTOLOGY_SYSTEM), ChatMessage::user(description.to_string())]
}

fn entity_lines(entities: &[(ExprKind, Iri)]) -> String {
    entities.iter().map(|(k, i)| format!("- {} <{}>\n", k.element_name(), i)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedPair {
    pub source: OntologyGraph,
    pub target: OntologyGraph,
    pub injected: Vec<Iri>,
    pub repaired_turtle: bool,
}

/// Generates the two ontologies of an alignment, the second after the first.
/// Entities the model left out are injected as declarations. `None` when a
/// response stays unparseable after one Turtle repair.
pub fn generate_ontology_pair(a: &Alignment, gateway: &Gateway) -> Result<Option<GeneratedPair>, GatewayError> {
    let e1 = entity_list(a, true);
    let e2 = entity_list(a, false);
    let first = gateway.chat_messages(ontology_prompt(&format!(
        "Write a small ontology that contains these entities, together with related classes and properties:\n{}",
        entity_lines(&e1)
    )))?;
    let Some((g1, r1)) = parse_generated(&first) else { return Ok(None) };
    let second = gateway.chat_messages(ontology_prompt(&format!(
        "Write a second ontology on the same domain as the one below, using a different vocabulary. It must contain \
these entities, plus classes and properties that do not occur in the first ontology:\n{}\nFirst ontology:\n```turtle\n{}\n```",
        entity_lines(&e2),
        serialize_turtle(&g1).trim_end()
    )))?;
    let Some((g2, r2)) = parse_generated(&second) else { return Ok(None) };
    let (source, mut injected) = inject_missing(g1, &e1);
    let (target, more) = inject_missing(g2, &e2);
    injected.extend(more);
    Ok(Some(GeneratedPair { source, target, injected, repaired_turtle: r1 || r2 }))
}

fn local_names(g: &OntologyGraph) -> BTreeSet<String> {
    g.subjects()
        .filter_map(|s| s.as_iri())
        .filter(|i| !vocab::is_standard_namespace(i.as_str()))
        .map(|i| i.local_name().to_ascii_lowercase())
        .filter(|n| !n.is_empty())
        .collect()
}

fn topics_for(seed: u64) -> (&'static str, &'static str) {
    let n = TOPICS.len() as u64;
    let a = seed % n;
    let b = (a + 1 + (seed / n) % (n - 1)) % n;
    (TOPICS[a as usize], TOPICS[b as usize])
}

fn pair_alignment(source: &OntologyGraph, target: &OntologyGraph) -> Alignment {
    let onto1 = ontology_iri(source);
    let onto2 = ontology_iri(target).filter(|o| Some(o) != onto1.as_ref());
    Alignment::new(onto1, onto2)
}

/// Two ontologies on unrelated topics and an alignment without cells.
pub fn generate_empty_pair(seed: u64, gateway: &Gateway) -> Result<SynthRecord, GatewayError> {
    let (t1, t2) = topics_for(seed);
    let first = gateway.chat_messages(ontology_prompt(&format!(
        "Write a small ontology about {t1} with about ten classes and a few properties. Use the namespace http://example.org/{}#.",
        t1.replace(' ', "-")
    )))?;
    let second = gateway.chat_messages(ontology_prompt(&format!(
        "Write a small ontology about {t2} with about ten classes and a few properties. Use the namespace http://example.org/{}#. \
It must share no entity with an ontology about {t1}.",
        t2.replace(' ', "-")
    )))?;
    let mut warnings = Vec::new();
    let (Some((g1, _)), Some((g2, _))) = (parse_generated(&first), parse_generated(&second)) else {
        return Ok(SynthRecord {
            seed,
            kind: RecordKind::Empty,
            messages: vec![],
            target: format!("{first}\n\n{second}"),
            valid: false,
            fixes: vec![],
            warnings: vec!["unparseable Turtle".into()],
        });
    };
    let overlap: Vec<String> = local_names(&g1).intersection(&local_names(&g2)).cloned().collect();
    if !overlap.is_empty() {
        log::warn!("empty pair {seed}: shared local names {}", overlap.join(", "));
        warnings.push(format!("shared local names: {}", overlap.join(", ")));
    }
    let target = serialize_alignment(&pair_alignment(&g1, &g2));
    Ok(SynthRecord {
        seed,
        kind: RecordKind::Empty,
        messages: match_prompt(&serialize_turtle(&g1), &serialize_turtle(&g2), PromptStyle::Base),
        valid: validate(&target).is_empty(),
        target,
        fixes: vec![],
        warnings,
    })
}

/// Template, fill, ontology pair: one positive record.
pub fn generate_positive(
    seed: u64,
    max_depth: usize,
    deriver: &Deriver,
    gateway: &Gateway,
) -> Result<SynthRecord, GatewayError> {
    let template = deriver.derive(seed, max_depth, default_cell_count(seed));
    let invalid = |target: String, fixes: Vec<Fix>, why: &str| SynthRecord {
        seed,
        kind: RecordKind::Positive,
        messages: vec![],
        target,
        valid: false,
        fixes,
        warnings: vec![why.to_string()],
    };
    let (filled, raw, fixes) = fill_template(&template.to_xml(), gateway)?;
    let Some(filled) = filled.filter(|a| !a.cells.is_empty()) else {
        return Ok(invalid(raw, fixes, "template fill unusable"));
    };
    let Some(pair) = generate_ontology_pair(&filled, gateway)? else {
        return Ok(invalid(serialize_alignment(&filled), fixes, "unparseable Turtle"));
    };
    let mut alignment = filled;
    let ids = pair_alignment(&pair.source, &pair.target);
    alignment.onto1 = ids.onto1;
    alignment.onto2 = ids.onto2;
    let target = serialize_alignment(&alignment);
    let mut warnings = Vec::new();
    if !pair.injected.is_empty() {
        warnings.push(format!("injected {} missing declarations", pair.injected.len()));
    }
    Ok(SynthRecord {
        seed,
        kind: RecordKind::Positive,
        messages: match_prompt(&serialize_turtle(&pair.source), &serialize_turtle(&pair.target), PromptStyle::Base),
        valid: validate(&target).is_empty(),
        target,
        fixes,
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct CorpusOptions {
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed0: u64,
    pub max_depth: usize,
}

/// Generates `n_pos` positive and `n_neg` empty records with consecutive
/// seeds from `seed0`, in parallel up to the gateway cap, and writes
/// `corpus.jsonl`, `manifest.json` and `rejects/NNN.xml` under `out`.
pub fn build_corpus(opts: &CorpusOptions, gateway: &Gateway, out: &Path) -> Result<CorpusManifest, SynthesisError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| SynthesisError::Io { path: path.clone(), source }
    };
    std::fs::create_dir_all(out).map_err(io(out))?;
    let total = opts.n_pos + opts.n_neg;
    let deriver = Deriver::default();
    let results: Mutex<Vec<Option<Result<SynthRecord, GatewayError>>>> = Mutex::new(vec![None; total]);
    let next = AtomicUsize::new(0);
    let workers = gateway.config().max_concurrent.min(total).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= total {
                    break;
                }
                let seed = opts.seed0 + i as u64;
                let r = if i < opts.n_pos {
                    generate_positive(seed, opts.max_depth, &deriver, gateway)
                } else {
                    generate_empty_pair(seed, gateway)
                };
                let failed = r.is_err();
                results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                if failed {
                    next.store(total, Ordering::SeqCst);
                }
            });
        }
    });
    let mut records = Vec::with_capacity(total);
    for r in results.into_inner().unwrap_or_else(|e| e.into_inner()) {
        match r {
            Some(Ok(rec)) => records.push(rec),
            Some(Err(e)) => return Err(e.into()),
            None => return Err(GatewayError::Transport("generation aborted".into()).into()),
        }
    }

    let corpus_path = out.join("corpus.jsonl");
    let mut corpus = std::io::BufWriter::new(std::fs::File::create(&corpus_path).map_err(io(&corpus_path))?);
    let rejects = out.join("rejects");
    let mut manifest = CorpusManifest {
        total,
        positives: opts.n_pos,
        empties: opts.n_neg,
        emitted: 0,
        emitted_positives: 0,
        emitted_empties: 0,
        rejected: 0,
        valid_rate: 0.0,
        seed_range: (opts.seed0, opts.seed0 + total.saturating_sub(1) as u64),
    };
    for (i, rec) in records.iter().enumerate() {
        if rec.valid {
            writeln!(corpus, "{}", rec.to_jsonl()).map_err(io(&corpus_path))?;
            manifest.emitted += 1;
            match rec.kind {
                RecordKind::Positive => manifest.emitted_positives += 1,
                RecordKind::Empty => manifest.emitted_empties += 1,
            }
        } else {
            std::fs::create_dir_all(&rejects).map_err(io(&rejects))?;
            let p = rejects.join(format!("{i:03}.xml"));
            std::fs::write(&p, &rec.target).map_err(io(&p))?;
            manifest.rejected += 1;
        }
    }
    corpus.flush().map_err(io(&corpus_path))?;
    manifest.valid_rate = if total == 0 { 1.0 } else { manifest.emitted as f64 / total as f64 };
    let mpath = out.join("manifest.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n").map_err(io(&mpath))?;
    Ok(manifest)
}
