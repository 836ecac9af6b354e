//! In-memory RDF store: terms, an immutable sorted triple set with a prefix
//! map, Turtle and RDF/XML ingestion, and deterministic Turtle output.

mod graph;
mod index;
mod rdfxml;
mod term;
mod turtle;

use std::path::Path;

pub use graph::OntologyGraph;
pub use index::{entity_index, label_of, EntityIndex, EntityInfo, EntityKind};
pub use rdfxml::parse_rdfxml;
pub use term::{BlankNode, Iri, Literal, RdfTerm, Subject, Triple};
pub use turtle::{parse_turtle, repair_turtle, serialize_turtle};

#[derive(Debug, thiserror::Error)]
pub enum RdfError {
    #[error("turtle syntax error at line {line}, column {column}: {message}")]
    Syntax { line: u64, column: u64, message: String },
    #[error("undeclared prefix `{prefix}:` at line {line}, column {column}")]
    UndeclaredPrefix { prefix: String, line: u64, column: u64 },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("RDF/XML structure error: {0}")]
    RdfXml(String),
    #[error("invalid IRI `{0}`")]
    InvalidIri(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub mod vocab {
    pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";
    pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";

    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
    pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
    pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
    pub const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";
    pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
    pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
    pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
    pub const OWL_ONTOLOGY: &str = "http://www.w3.org/2002/07/owl#Ontology";
    pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
    pub const OWL_NAMED_INDIVIDUAL: &str = "http://www.w3.org/2002/07/owl#NamedIndividual";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

    /// Namespaces whose untyped entities are left out of extracted modules.
    pub const STANDARD_NAMESPACE_PREFIXES: &[&str] = &["http://www.w3.org", "http://ns.inria.org/edoal/"];

    pub fn is_standard_namespace(iri: &str) -> bool {
        STANDARD_NAMESPACE_PREFIXES.iter().any(|p| iri.starts_with(p))
    }
}

/// Parses either serialization, sniffing RDF/XML by a leading `<`.
pub fn parse_ontology(text: &str) -> Result<OntologyGraph, RdfError> {
    let trimmed = text.trim_start_matches('\u{feff}').trim_start();
    if trimmed.starts_with('<') && !trimmed.starts_with("<http") {
        parse_rdfxml(text)
    } else {
        parse_turtle(text)
    }
}

pub fn load_ontology(path: &Path) -> Result<OntologyGraph, RdfError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| RdfError::Io { path: path.display().to_string(), source })?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "ttl" | "turtle" => parse_turtle(&text),
        "rdf" | "xml" => parse_rdfxml(&text),
        _ => parse_ontology(&text),
    }
}
