//! Shared helpers for integration tests: a deterministic synthetic model,
//! a recording wrapper for building mock fixtures, a concurrency probe and
//! the fault injector for alignment documents.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use ontomatch::edoal::{serialize_alignment, Alignment, Correspondence, EdoalExpression, FixKind, Relation};
use ontomatch::gateway::{prompt_hash, Backend, ChatRequest, Gateway, GatewayConfig, GatewayError, MockBackend};
use ontomatch::pipeline::ontology_iri;
use ontomatch::rdf::{entity_index, parse_turtle, EntityKind, Iri};
use ontomatch::reduction::EmbeddingVector;
use ontomatch::synthesis::{FILL_SYSTEM, ONTOLOGY_SYSTEM};
use rand::Rng;
use regex::Regex;

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn gateway_with(backend: impl Backend + 'static, max_concurrent: usize) -> Gateway {
    let cfg = GatewayConfig { max_concurrent, backoff_base_ms: 1, backoff_cap_ms: 2, ..GatewayConfig::default() };
    Gateway::new(Arc::new(backend), cfg).expect("gateway")
}

const WORDS: &[&str] = &[
    "Paper",
    "Author",
    "Review",
    "Event",
    "Topic",
    "Venue",
    "Person",
    "Chair",
    "Session",
    "Track",
    "Document",
    "Abstract",
    "Reviewer",
    "Committee",
    "Decision",
    "Submission",
];

fn camel(s: &str) -> String {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
        })
        .collect()
}

/// Deterministic stand-in for a chat model that understands the three
/// prompt families this crate sends.
#[derive(Clone, Debug, Default)]
pub struct SyntheticBackend;

impl SyntheticBackend {
    fn fill(template: &str) -> String {
        let re = Regex::new(r"<entity1>|<entity2>|MASK_(\d+)").unwrap();
        let mut side = 1;
        re.replace_all(template, |c: &regex::Captures| match &c[0] {
            "<entity1>" => {
                side = 1;
                c[0].to_string()
            }
            "<entity2>" => {
                side = 2;
                c[0].to_string()
            }
            _ => {
                let n: usize = c[1].parse().unwrap();
                let ns = if side == 1 { "http://src.example.org/conf#" } else { "http://tgt.example.org/conference#" };
                format!("{ns}{}{n}", WORDS[n % WORDS.len()])
            }
        })
        .into_owned()
    }

    fn ontology(prompt: &str) -> String {
        let mut out = String::from(
            "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\n",
        );
        let head = prompt.split("First ontology:").next().unwrap_or(prompt);
        let listed = Regex::new(r"- (Class|Property|Relation|Instance) <([^>]+)>").unwrap();
        let topic = Regex::new(r"about ([a-z ]+?) with .*namespace (\S+#)").unwrap();
        let mut decls = Vec::new();
        if let Some(t) = topic.captures(head) {
            let ns = &t[2];
            let stem = camel(&t[1]);
            for s in ["Entity", "Record", "Site", "Agent", "Process", "Measurement", "Category", "Resource"] {
                decls.push(("owl:Class", format!("{ns}{stem}{s}")));
            }
            decls.push(("owl:ObjectProperty", format!("{ns}{}RelatesTo", stem.to_lowercase())));
            decls.push(("owl:DatatypeProperty", format!("{ns}{}Code", stem.to_lowercase())));
        } else {
            for c in listed.captures_iter(head) {
                let ty = match &c[1] {
                    "Class" => "owl:Class",
                    "Property" => "owl:DatatypeProperty",
                    "Relation" => "owl:ObjectProperty",
                    _ => "owl:NamedIndividual",
                };
                decls.push((ty, c[2].to_string()));
            }
        }
        if let Some((_, first)) = decls.first() {
            let ns = first.rsplit_once('#').map(|(n, _)| n).unwrap_or(first);
            out.push_str(&format!("<{ns}> a owl:Ontology .\n"));
        }
        for (ty, iri) in decls {
            let local = iri.rsplit(['#', '/']).next().unwrap_or(&iri).to_string();
            out.push_str(&format!("<{iri}> a {ty} ;\n    rdfs:label \"{local}\" .\n"));
        }
        out
    }

    fn turtle_blocks(text: &str) -> Vec<String> {
        Regex::new(r"(?s)```turtle\n(.*?)\n```").unwrap().captures_iter(text).map(|c| c[1].to_string()).collect()
    }

    fn atom(kind: EntityKind, iri: &Iri) -> Option<EdoalExpression> {
        match kind {
            EntityKind::Class => Some(EdoalExpression::ClassId(iri.clone())),
            EntityKind::ObjectProperty => Some(EdoalExpression::RelationId(iri.clone())),
            EntityKind::DataProperty => Some(EdoalExpression::PropertyId(iri.clone())),
            _ => None,
        }
    }

    /// Local-name matching plus one complex pattern: `AcceptedPaper` maps to
    /// the intersection of `Paper` and a class starting with `Accept`.
    fn matcher(prompt: &str) -> String {
        let blocks = Self::turtle_blocks(prompt);
        let (Some(src), Some(tgt)) = (blocks.first(), blocks.get(1)) else { return String::new() };
        let (Ok(src), Ok(tgt)) = (parse_turtle(src), parse_turtle(tgt)) else { return String::new() };
        let s_idx = entity_index(&src);
        let t_idx = entity_index(&tgt);
        let by_name: BTreeMap<String, (EntityKind, &Iri)> =
            t_idx.values().map(|e| (e.iri.local_name().to_lowercase(), (e.kind, &e.iri))).collect();
        let mut a = Alignment::new(ontology_iri(&src), ontology_iri(&tgt));
        for e in s_idx.values() {
            let name = e.iri.local_name();
            if let Some((k, t)) = by_name.get(&name.to_lowercase()) {
                if *k == e.kind {
                    if let (Some(x), Some(y)) = (Self::atom(e.kind, &e.iri), Self::atom(*k, t)) {
                        a.cells.push(Correspondence::new(x, y, Relation::Equivalence));
                    }
                }
            }
            if e.kind == EntityKind::Class {
                let split = name.char_indices().skip(1).find(|(_, c)| c.is_uppercase()).map(|(i, _)| i);
                if let Some(i) = split {
                    let (head, tail) = name.split_at(i);
                    let stem: String = head.chars().take(6).collect();
                    let whole = by_name.get(&tail.to_lowercase()).filter(|(k, _)| *k == EntityKind::Class);
                    let part = t_idx.values().find(|t| {
                        t.kind == EntityKind::Class
                            && t.iri.local_name().starts_with(&stem)
                            && t.iri.local_name() != name
                    });
                    if let (Some((_, w)), Some(p)) = (whole, part) {
                        let rhs = EdoalExpression::And(vec![
                            EdoalExpression::ClassId((*w).clone()),
                            EdoalExpression::ClassId(p.iri.clone()),
                        ]);
                        a.cells.push(Correspondence::new(
                            EdoalExpression::ClassId(e.iri.clone()),
                            rhs,
                            Relation::Equivalence,
                        ));
                    }
                }
            }
        }
        serialize_alignment(&a)
    }

    pub fn respond(req: &ChatRequest) -> String {
        let system = req.messages.first().map(|m| m.content.as_str()).unwrap_or("");
        let user = req.messages.get(1).map(|m| m.content.as_str()).unwrap_or("");
        if system == FILL_SYSTEM {
            Self::fill(user)
        } else if system == ONTOLOGY_SYSTEM {
            Self::ontology(user)
        } else {
            Self::matcher(user)
        }
    }
}

impl Backend for SyntheticBackend {
    fn chat(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        Ok(Self::respond(req))
    }

    fn embed(&self, texts: &[String], _model: &str, dim: usize) -> Result<Vec<EmbeddingVector>, GatewayError> {
        Ok(texts.iter().map(|t| MockBackend::embedding(t, dim)).collect())
    }
}

/// Wraps a backend and records every prompt hash with its response.
pub struct Recording<B> {
    pub inner: B,
    pub log: Arc<Mutex<BTreeMap<String, String>>>,
}

impl<B: Backend> Recording<B> {
    pub fn new(inner: B) -> Self {
        Recording { inner, log: Arc::default() }
    }
}

impl<B: Backend> Backend for Recording<B> {
    fn chat(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        let r = self.inner.chat(req)?;
        self.log.lock().unwrap().insert(prompt_hash(&req.messages), r.clone());
        Ok(r)
    }

    fn embed(&self, texts: &[String], model: &str, dim: usize) -> Result<Vec<EmbeddingVector>, GatewayError> {
        self.inner.embed(texts, model, dim)
    }
}

/// Tracks the peak number of overlapping chat calls.
#[derive(Clone, Default)]
pub struct ConcurrencyProbe {
    pub current: Arc<AtomicUsize>,
    pub peak: Arc<AtomicUsize>,
    pub calls: Arc<AtomicUsize>,
}

impl Backend for ConcurrencyProbe {
    fn chat(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(15));
        self.current.fetch_sub(1, Ordering::SeqCst);
        Ok(SyntheticBackend::respond(req))
    }

    fn embed(&self, texts: &[String], _model: &str, dim: usize) -> Result<Vec<EmbeddingVector>, GatewayError> {
        Ok(texts.iter().map(|t| MockBackend::embedding(t, dim)).collect())
    }
}

pub const FAULTS: [FixKind; 5] = [
    FixKind::MissingPrefix,
    FixKind::MissingOntologyTag,
    FixKind::UnprefixedEntity,
    FixKind::InvalidLiteral,
    FixKind::EosToken,
];

const EOS: &[&str] = &["</s>", "<|endoftext|>", "<|im_end|>", "<eos>", "<|eot_id|>"];

/// Corrupts a valid alignment document with one error of the given class.
pub fn inject_fault(xml: &str, kind: FixKind, rng: &mut impl Rng) -> String {
    match kind {
        FixKind::MissingPrefix => {
            let decls: Vec<_> =
                Regex::new(r#"\s+xmlns:(edoal|rdf|xsd|align)="[^"]*""#).unwrap().find_iter(xml).collect();
            let used: Vec<_> = decls
                .iter()
                .filter(|m| {
                    let p = m.as_str().trim().trim_start_matches("xmlns:").split('=').next().unwrap().to_string();
                    xml.contains(&format!("<{p}:")) || xml.contains(&format!(" {p}:"))
                })
                .collect();
            let m = used[rng.random_range(0..used.len())];
            format!("{}{}", &xml[..m.start()], &xml[m.end()..])
        }
        FixKind::MissingOntologyTag => {
            let which = if rng.random_bool(0.5) { "onto1" } else { "onto2" };
            let re = Regex::new(&format!(r"(?s)\s*<{which}>.*?</{which}>")).unwrap();
            re.replace(xml, "").into_owned()
        }
        FixKind::UnprefixedEntity => {
            let re = Regex::new(r##"(<edoal:\w+ )rdf:about="(http[^"]*[#/])([^"#/]+)""##).unwrap();
            let entity_spans: Vec<_> = re.captures_iter(xml).filter(|c| !c[2].contains("w3.org")).collect();
            if entity_spans.is_empty() {
                return format!("{xml}</s>");
            }
            let c = &entity_spans[rng.random_range(0..entity_spans.len())];
            let whole = c.get(0).unwrap();
            let (el, local) = (&c[1], &c[3]);
            let replacement = if rng.random_bool(0.5) {
                format!("{el}rdf:about=\"{local}\"")
            } else {
                format!("{el}rdf:about=\"ex:{local}\"")
            };
            format!("{}{}{}", &xml[..whole.start()], replacement, &xml[whole.end()..])
        }
        FixKind::InvalidLiteral => {
            let choice = rng.random_range(0..3);
            let re = Regex::new(r"(<measure[^>]*>)[^<]*(</measure>)").unwrap();
            match choice {
                0 if re.is_match(xml) => re.replace(xml, "${1}1.7${2}").into_owned(),
                1 if re.is_match(xml) => re.replace(xml, "${1}high${2}").into_owned(),
                _ => xml.replacen("<type>**</type>", "<type>** & ??</type>", 1),
            }
        }
        FixKind::EosToken => {
            let tok = EOS[rng.random_range(0..EOS.len())];
            if rng.random_bool(0.5) {
                format!("{}{tok}", xml.trim_end())
            } else {
                format!("{}\n{tok}\n{tok}", xml.trim_end())
            }
        }
    }
}

pub const SRC_NS: &str = "http://src.example.org/conf#";
pub const TGT_NS: &str = "http://tgt.example.org/conference#";

/// A grammar template with every slot bound to an IRI of the side it sits on.
pub fn grounded_alignment(seed: u64, max_depth: usize) -> Alignment {
    use ontomatch::grammar::{default_cell_count, derive_template, slot_positions, Side};
    let t = derive_template(seed, max_depth, default_cell_count(seed));
    let sides: BTreeMap<usize, Side> = slot_positions(&t).into_iter().map(|p| (p.slot, p.side)).collect();
    let mut a = t.substitute(|slot| {
        let ns = if sides.get(&slot) == Some(&Side::Entity2) { TGT_NS } else { SRC_NS };
        Iri::new(format!("{ns}{}{slot}", WORDS[slot % WORDS.len()])).unwrap()
    });
    a.onto1 = Some(Iri::new(SRC_NS.trim_end_matches('#')).unwrap());
    a.onto2 = Some(Iri::new(TGT_NS.trim_end_matches('#')).unwrap());
    a
}
