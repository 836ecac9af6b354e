use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::OntologyGraph;
use super::term::{Iri, RdfTerm, Subject};
use super::vocab;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Class,
    ObjectProperty,
    DataProperty,
    Individual,
    Unknown,
}

impl EntityKind {
    pub fn is_class_or_property(self) -> bool {
        matches!(self, EntityKind::Class | EntityKind::ObjectProperty | EntityKind::DataProperty)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntityInfo {
    pub iri: Iri,
    pub kind: EntityKind,
    pub labels: Vec<String>,
    pub comments: Vec<String>,
}

pub type EntityIndex = BTreeMap<Iri, EntityInfo>;

fn kind_for_type(type_iri: &str) -> Option<EntityKind> {
    match type_iri {
        vocab::OWL_CLASS | vocab::RDFS_CLASS => Some(EntityKind::Class),
        vocab::OWL_OBJECT_PROPERTY | vocab::RDF_PROPERTY => Some(EntityKind::ObjectProperty),
        vocab::OWL_DATATYPE_PROPERTY => Some(EntityKind::DataProperty),
        vocab::OWL_NAMED_INDIVIDUAL => Some(EntityKind::Individual),
        t if vocab::is_standard_namespace(t) => None,
        // typed by a domain class
        _ => Some(EntityKind::Individual),
    }
}

/// Indexes every IRI subject. Kind comes only from `rdf:type`; when several
/// types apply, Class beats the property kinds, which beat Individual.
pub fn entity_index(graph: &OntologyGraph) -> EntityIndex {
    let mut index = EntityIndex::new();
    for subject in graph.subjects() {
        let Subject::Iri(iri) = subject else { continue };
        let mut info = EntityInfo { iri: iri.clone(), kind: EntityKind::Unknown, labels: vec![], comments: vec![] };
        for t in graph.with_subject(subject) {
            match (t.predicate.as_str(), &t.object) {
                (vocab::RDF_TYPE, RdfTerm::Iri(ty)) => {
                    if let Some(kind) = kind_for_type(ty.as_str()) {
                        info.kind = info.kind.min(kind);
                    }
                }
                (vocab::RDFS_LABEL, RdfTerm::Literal(lit)) => {
                    if !info.labels.contains(&lit.lexical) {
                        info.labels.push(lit.lexical.clone());
                    }
                }
                (vocab::RDFS_COMMENT, RdfTerm::Literal(lit))
                    if !info.comments.contains(&lit.lexical) => {
                        info.comments.push(lit.lexical.clone());
                    }
                _ => {}
            }
        }
        index.insert(iri.clone(), info);
    }
    index
}

/// First `rdfs:label` (in sorted order), else the IRI local name.
pub fn label_of(graph: &OntologyGraph, iri: &Iri) -> String {
    graph
        .objects(iri, vocab::RDFS_LABEL)
        .find_map(|o| o.as_literal().map(|l| l.lexical.clone()))
        .unwrap_or_else(|| iri.local_name().to_string())
}
