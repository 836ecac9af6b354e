//! Anchor selection, candidate retrieval and module extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rdf::{vocab, EntityIndex, Iri, OntologyGraph, RdfTerm, Subject, Triple};

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero-norm vector{}", .0.as_ref().map(|i| format!(" for {i}")).unwrap_or_default())]
    ZeroNorm(Option<Iri>),
    #[error("anchor {0} does not occur in the graph")]
    AnchorAbsent(Iri),
    #[error("no anchors given")]
    NoAnchors,
}

/// Directed graph over IRI nodes, sorted by IRI.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EntityDigraph {
    nodes: Vec<Iri>,
    /// Deduplicated successor lists, by node index.
    successors: Vec<Vec<usize>>,
}

impl EntityDigraph {
    pub fn from_edges(nodes: impl IntoIterator<Item = Iri>, edges: impl IntoIterator<Item = (Iri, Iri)>) -> Self {
        let edges: Vec<(Iri, Iri)> = edges.into_iter().collect();
        let mut all: BTreeSet<Iri> = nodes.into_iter().collect();
        for (a, b) in &edges {
            all.insert(a.clone());
            all.insert(b.clone());
        }
        let nodes: Vec<Iri> = all.into_iter().collect();
        let index: HashMap<&Iri, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nodes.len()];
        for (a, b) in &edges {
            succ[index[a]].insert(index[b]);
        }
        let successors = succ.into_iter().map(|s| s.into_iter().collect()).collect();
        EntityDigraph { nodes, successors }
    }

    pub fn nodes(&self) -> &[Iri] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.successors[node]
    }

    pub fn has_edge(&self, a: &Iri, b: &Iri) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(i), Some(j)) => self.successors[i].contains(&j),
            _ => false,
        }
    }

    pub fn position(&self, iri: &Iri) -> Option<usize> {
        self.nodes.binary_search(iri).ok()
    }
}

/// Nodes are all IRIs in subject or object position; each triple with an IRI
/// object adds a subject→object edge. Predicates are not nodes.
pub fn build_entity_digraph(graph: &OntologyGraph) -> EntityDigraph {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for t in graph.triples() {
        if let Subject::Iri(s) = &t.subject {
            nodes.push(s.clone());
            if let RdfTerm::Iri(o) = &t.object {
                edges.push((s.clone(), o.clone()));
            }
        }
        if let RdfTerm::Iri(o) = &t.object {
            nodes.push(o.clone());
        }
    }
    EntityDigraph::from_edges(nodes, edges)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityScore {
    pub iri: Iri,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams { damping: 0.85, eps: 1e-10, max_iter: 1000 }
    }
}

/// Power iteration with uniform teleport; dangling mass is spread uniformly.
/// Stops when the L1 change drops below `eps` or after `max_iter` rounds.
pub fn pagerank(
    g: &EntityDigraph,
    damping: f64,
    eps: f64,
    max_iter: usize,
) -> Result<Vec<EntityScore>, ReductionError> {
    let n = g.node_count();
    if n == 0 {
        return Err(ReductionError::EmptyGraph);
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&i| g.successors(i).is_empty()).map(|i| rank[i]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for (i, r) in rank.iter().enumerate() {
            let out = g.successors(i);
            if !out.is_empty() {
                let share = damping * r / out.len() as f64;
                for &j in out {
                    next[j] += share;
                }
            }
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < eps {
            break;
        }
    }
    let total: f64 = rank.iter().sum();
    Ok(g.nodes.iter().zip(rank).map(|(iri, s)| EntityScore { iri: iri.clone(), score: s / total }).collect())
}

/// The `k` best-scoring classes and properties; ties go to the smaller IRI.
pub fn top_k_anchors(scores: &[EntityScore], k: usize, index: &EntityIndex) -> Vec<Iri> {
    let mut eligible: Vec<&EntityScore> =
        scores.iter().filter(|s| index.get(&s.iri).is_some_and(|e| e.kind.is_class_or_property())).collect();
    eligible.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.iri.cmp(&b.iri)));
    eligible.into_iter().take(k).map(|s| s.iri.clone()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        EmbeddingVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, ReductionError> {
    if a.dim() != b.dim() {
        return Err(ReductionError::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(ReductionError::ZeroNorm(None));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Exhaustive cosine ranking: descending similarity, ties by IRI.
pub fn cosine_candidates(
    query: &EmbeddingVector,
    pool: &BTreeMap<Iri, EmbeddingVector>,
    k: usize,
) -> Result<Vec<(Iri, f64)>, ReductionError> {
    if query.norm() == 0.0 {
        return Err(ReductionError::ZeroNorm(None));
    }
    let mut ranked = Vec::with_capacity(pool.len());
    for (iri, v) in pool {
        let sim = cosine(query, v).map_err(|e| match e {
            ReductionError::ZeroNorm(_) => ReductionError::ZeroNorm(Some(iri.clone())),
            other => other,
        })?;
        ranked.push((iri.clone(), sim));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Source,
    Target,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Source => "source",
            Origin::Target => "target",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OntologyModule {
    pub graph: OntologyGraph,
    pub anchors: Vec<Iri>,
    pub origin: Origin,
    /// Entities selected for the module; their outgoing triples are included.
    pub entities: BTreeSet<Iri>,
}

impl OntologyModule {
    pub fn to_turtle(&self) -> String {
        crate::rdf::serialize_turtle(&self.graph)
    }

    /// `<source|target>_<anchor-localname>_<index>.ttl`
    pub fn file_name(&self, index: usize) -> String {
        let anchor = self.anchors.first().map(|a| a.local_name()).unwrap_or("module");
        let safe: String = anchor.chars().map(|c| if c.is_alphanumeric() || c == '-' { c } else { '_' }).collect();
        format!("{}_{}_{index}.ttl", self.origin.as_str(), if safe.is_empty() { "module" } else { &safe })
    }
}

fn has_type(graph: &OntologyGraph, iri: &Iri) -> bool {
    graph.objects(iri, vocab::RDF_TYPE).next().is_some()
}

/// Typeless terms from the standard vocabularies are never module members.
fn is_filtered(graph: &OntologyGraph, iri: &Iri) -> bool {
    vocab::is_standard_namespace(iri.as_str()) && !has_type(graph, iri)
}

/// Extracts the neighbourhood of the anchors.
///
/// Members are the anchors, every entity within `hops` undirected steps
/// (through subject, object and predicate positions, never walking up
/// `rdfs:subClassOf`), and up to `superclass_depth` levels of each anchor's
/// superclasses. Typeless standard-vocabulary terms are not members. A triple
/// is kept when its subject is a member, its object is not a blank node, and
/// its object is a literal, a member, or a vocabulary term. Labels and
/// comments of members are literals and so always come along.
pub fn extract_module(
    graph: &OntologyGraph,
    anchors: &[Iri],
    hops: usize,
    superclass_depth: usize,
) -> Result<OntologyModule, ReductionError> {
    if anchors.is_empty() {
        return Err(ReductionError::NoAnchors);
    }
    if let Some(a) = anchors.iter().find(|a| !graph.mentions(a)) {
        return Err(ReductionError::AnchorAbsent((*a).clone()));
    }
    let mut members: BTreeSet<Iri> = anchors.iter().cloned().collect();
    let mut frontier: Vec<Iri> = anchors.to_vec();
    for _ in 0..hops {
        let mut next = Vec::new();
        for e in &frontier {
            for n in neighbours(graph, e) {
                if !is_filtered(graph, &n) && members.insert(n.clone()) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    for a in anchors {
        let mut level = vec![a.clone()];
        for _ in 0..superclass_depth {
            let mut up = Vec::new();
            for c in &level {
                for o in graph.objects(c, vocab::RDFS_SUBCLASS_OF) {
                    if let RdfTerm::Iri(sup) = o {
                        if !is_filtered(graph, sup) && members.insert(sup.clone()) {
                            up.push(sup.clone());
                        }
                    }
                }
            }
            level = up;
        }
    }

    let mut triples: Vec<Triple> = Vec::new();
    for m in &members {
        for t in graph.with_subject(&Subject::Iri(m.clone())) {
            let keep = match &t.object {
                RdfTerm::Blank(_) => false,
                RdfTerm::Literal(_) => true,
                RdfTerm::Iri(o) => {
                    members.contains(o)
                        || (t.predicate.as_str() != vocab::RDFS_SUBCLASS_OF && vocab::is_standard_namespace(o.as_str()))
                }
            };
            if keep {
                triples.push(t.clone());
            }
        }
    }
    for a in anchors {
        if !triples.iter().any(|t| mentions(t, a)) {
            triples.extend(graph.triples().iter().filter(|t| mentions(t, a) && !t.object.is_blank()).cloned());
        }
    }
    let module_graph = OntologyGraph::new(triples, BTreeMap::new(), None);
    let used = used_prefixes(graph.prefixes(), &module_graph);
    Ok(OntologyModule {
        graph: module_graph.with_prefixes(used),
        anchors: anchors.to_vec(),
        origin: Origin::Source,
        entities: members,
    })
}

fn mentions(t: &Triple, iri: &Iri) -> bool {
    t.subject.as_iri() == Some(iri) || &t.predicate == iri || t.object.as_iri() == Some(iri)
}

fn neighbours(graph: &OntologyGraph, e: &Iri) -> Vec<Iri> {
    let mut out = Vec::new();
    for t in graph.with_subject(&Subject::Iri(e.clone())) {
        out.push(t.predicate.clone());
        if let RdfTerm::Iri(o) = &t.object {
            if t.predicate.as_str() != vocab::RDFS_SUBCLASS_OF && t.predicate.as_str() != vocab::RDF_TYPE {
                out.push(o.clone());
            }
        }
    }
    for t in graph.with_object(&RdfTerm::Iri(e.clone())) {
        if let Subject::Iri(s) = &t.subject {
            if t.predicate.as_str() != vocab::RDF_TYPE {
                out.push(s.clone());
            }
        }
    }
    out
}

fn used_prefixes(prefixes: &BTreeMap<String, Iri>, g: &OntologyGraph) -> BTreeMap<String, Iri> {
    let mut iris: BTreeSet<&str> = BTreeSet::new();
    for t in g.triples() {
        if let Some(s) = t.subject.as_iri() {
            iris.insert(s.as_str());
        }
        iris.insert(t.predicate.as_str());
        match &t.object {
            RdfTerm::Iri(o) => {
                iris.insert(o.as_str());
            }
            RdfTerm::Literal(l) => {
                if let Some(d) = &l.datatype {
                    iris.insert(d.as_str());
                }
            }
            RdfTerm::Blank(_) => {}
        }
    }
    prefixes
        .iter()
        .filter(|(_, ns)| iris.iter().any(|i| i.starts_with(ns.as_str())))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

/// Deterministic token estimate: each maximal run of letters, digits and
/// underscores is one token, and every other non-whitespace character is one.
pub fn estimate_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            if !in_word {
                count += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !c.is_whitespace() {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{entity_index, parse_turtle};

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://e/{s}")).unwrap()
    }

    fn chain(names: &[&str]) -> EntityDigraph {
        let edges = names.windows(2).map(|w| (iri(w[0]), iri(w[1])));
        EntityDigraph::from_edges(names.iter().map(|n| iri(n)), edges)
    }

    #[test]
    fn digraph_shape() {
        let g = parse_turtle("@prefix e: <http://e/> . e:A e:p e:B . e:A e:q e:B . e:A e:label \"x\" .").unwrap();
        let d = build_entity_digraph(&g);
        assert_eq!(d.node_count(), 2);
        assert_eq!(d.edge_count(), 1);
        assert!(d.has_edge(&iri("A"), &iri("B")));
    }

    #[test]
    fn pagerank_small_cases() {
        let single = EntityDigraph::from_edges([iri("A")], []);
        assert!((pagerank(&single, 0.85, 1e-12, 100).unwrap()[0].score - 1.0).abs() < 1e-12);

        let cycle = EntityDigraph::from_edges([], [(iri("A"), iri("B")), (iri("B"), iri("A"))]);
        for s in pagerank(&cycle, 0.6, 1e-12, 1000).unwrap() {
            assert!((s.score - 0.5).abs() < 1e-9);
        }
        assert_eq!(pagerank(&EntityDigraph::default(), 0.85, 1e-9, 10), Err(ReductionError::EmptyGraph));
    }

    #[test]
    fn chain_top_anchor_is_sink() {
        let d = chain(&["A", "B", "C"]);
        let scores = pagerank(&d, 0.85, 1e-10, 1000).unwrap();
        let g = parse_turtle(
            "@prefix e: <http://e/> . @prefix owl: <http://www.w3.org/2002/07/owl#> . e:A a owl:Class . e:B a owl:Class . e:C a owl:Class .",
        )
        .unwrap();
        let idx = entity_index(&g);
        assert_eq!(top_k_anchors(&scores, 1, &idx), vec![iri("C")]);
        assert_eq!(top_k_anchors(&scores, 10, &idx).len(), 3);
    }

    #[test]
    fn ties_by_iri() {
        let cycle = EntityDigraph::from_edges([], [(iri("B"), iri("A")), (iri("A"), iri("B"))]);
        let scores = pagerank(&cycle, 0.85, 1e-12, 1000).unwrap();
        let g = parse_turtle(
            "@prefix e: <http://e/> . @prefix owl: <http://www.w3.org/2002/07/owl#> . e:A a owl:Class . e:B a owl:ObjectProperty .",
        )
        .unwrap();
        assert_eq!(top_k_anchors(&scores, 2, &entity_index(&g)), vec![iri("A"), iri("B")]);
    }

    #[test]
    fn cosine_basics() {
        let v = |x: &[f64]| EmbeddingVector::new(x.to_vec());
        let pool: BTreeMap<Iri, EmbeddingVector> =
            [(iri("x"), v(&[1.0, 0.0])), (iri("y"), v(&[0.0, 1.0])), (iri("z"), v(&[1.0, 1.0]))].into_iter().collect();
        let r = cosine_candidates(&v(&[1.0, 0.0]), &pool, 5).unwrap();
        assert_eq!(r[0].0, iri("x"));
        assert!((r[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(r[2], (iri("y"), 0.0));
        assert!(matches!(cosine_candidates(&v(&[1.0]), &pool, 1), Err(ReductionError::DimensionMismatch { .. })));
        assert!(matches!(cosine_candidates(&v(&[0.0, 0.0]), &pool, 1), Err(ReductionError::ZeroNorm(_))));
    }

    const ONTO: &str = r#"@prefix e: <http://e/> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
e:C0 a owl:Class ; rdfs:label "zero" ; rdfs:subClassOf e:C1 ; e:p [ e:q "x" ] ; rdfs:seeAlso owl:Nothing, e:Loose .
e:C1 a owl:Class ; rdfs:subClassOf e:C2 .
e:C2 a owl:Class ; rdfs:subClassOf e:C3 .
e:C3 a owl:Class ; rdfs:subClassOf e:C4 .
e:C4 a owl:Class ; rdfs:subClassOf e:C5 .
e:C5 a owl:Class ; rdfs:subClassOf e:C6 .
e:C6 a owl:Class ; rdfs:subClassOf e:C7 .
e:C7 a owl:Class .
e:Loose rdfs:comment "untyped domain term" .
"#;

    #[test]
    fn module_rules() {
        let g = parse_turtle(ONTO).unwrap();
        let m = extract_module(&g, &[iri("C0")], 1, 5).unwrap();
        let ancestors: Vec<_> = (1..=7).filter(|i| m.entities.contains(&iri(&format!("C{i}")))).collect();
        assert_eq!(ancestors, vec![1, 2, 3, 4, 5]);
        assert!(!m.graph.triples().iter().any(|t| t.object.is_blank()));
        let nothing = Iri::new("http://www.w3.org/2002/07/owl#Nothing").unwrap();
        assert!(!m.entities.contains(&nothing));
        assert!(m.entities.contains(&iri("Loose")));
        assert!(m.graph.mentions(&iri("C0")));
        assert!(!m.graph.triples().iter().any(|t| t.object.as_iri() == Some(&iri("C6"))));
        let back = parse_turtle(&m.to_turtle()).unwrap();
        assert_eq!(back.triples(), m.graph.triples());
    }

    #[test]
    fn absent_anchor() {
        let g = parse_turtle(ONTO).unwrap();
        assert_eq!(extract_module(&g, &[iri("Nope")], 1, 5), Err(ReductionError::AnchorAbsent(iri("Nope"))));
    }

    #[test]
    fn tokens() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("Paper accepted."), 3);
        assert_eq!(estimate_tokens("ex:Paper a owl:Class ."), 8);
    }
}
