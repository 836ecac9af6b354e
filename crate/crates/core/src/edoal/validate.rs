use std::collections::{BTreeSet, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::xml_read::parse_alignment;
use super::{ns, strip_eos_markers, AlignmentError};

/// The syntactic failure classes that repair knows how to fix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FixKind {
    MissingPrefix,
    MissingOntologyTag,
    UnprefixedEntity,
    InvalidLiteral,
    EosToken,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub kind: Option<FixKind>,
    pub message: String,
}

impl ValidationIssue {
    fn new(kind: Option<FixKind>, message: impl Into<String>) -> Self {
        ValidationIssue { kind, message: message.into() }
    }
}

pub(crate) const KNOWN_PREFIXES: &[(&str, &str)] = &[
    ("align", ns::ALIGN),
    ("edoal", ns::EDOAL),
    ("rdf", ns::RDF),
    ("rdfs", crate::rdf::vocab::RDFS_NS),
    ("owl", crate::rdf::vocab::OWL_NS),
    ("xsd", ns::XSD),
];

const XML_BUILTIN_ENTITIES: &[&str] = &["amp", "lt", "gt", "quot", "apos"];

static ELEMENT_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"</?([A-Za-z_][\w.-]*):[A-Za-z_]").unwrap());
static ATTRIBUTE_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"\s([A-Za-z_][\w.-]*):[A-Za-z_][\w.-]*\s*=\s*["']"#).unwrap());
static DECLARED_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"xmlns:([A-Za-z_][\w.-]*)\s*=").unwrap());
static DEFAULT_NS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"xmlns\s*=").unwrap());
static UNPREFIXED_ALIGN_ELEMENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<(Alignment|Cell|map|entity1|entity2|onto1|onto2)[\s>/]").unwrap());
static ENTITY_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"&([A-Za-z_][\w.-]*);").unwrap());
static DECLARED_ENTITY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<!ENTITY\s+([A-Za-z_][\w.-]*)").unwrap());

pub(crate) fn used_prefixes(text: &str) -> BTreeSet<String> {
    ELEMENT_PREFIX
        .captures_iter(text)
        .chain(ATTRIBUTE_PREFIX.captures_iter(text))
        .map(|c| c[1].to_string())
        .filter(|p| p != "xmlns" && p != "xml")
        .collect()
}

pub(crate) fn declared_prefixes(text: &str) -> HashSet<String> {
    DECLARED_PREFIX.captures_iter(text).map(|c| c[1].to_string()).collect()
}

pub(crate) fn needs_default_namespace(text: &str) -> bool {
    UNPREFIXED_ALIGN_ELEMENT.is_match(text) && !DEFAULT_NS.is_match(text)
}

/// Schemes whose IRIs legitimately have no authority part.
const OPAQUE_SCHEMES: &[&str] = &["urn", "mailto", "tag", "doi", "isbn", "data", "info", "geo", "tel"];

/// `prefix:local` written where a full IRI belongs.
pub(crate) fn is_compact_iri(value: &str) -> bool {
    match value.split_once(':') {
        Some((scheme, rest)) => {
            let well_formed = scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+-._".contains(c));
            well_formed && !rest.starts_with("//") && !OPAQUE_SCHEMES.contains(&scheme.to_ascii_lowercase().as_str())
        }
        None => false,
    }
}

/// Entity references that are neither XML builtins nor declared in a DTD.
pub(crate) fn undeclared_entities(text: &str) -> BTreeSet<String> {
    let declared: HashSet<String> = DECLARED_ENTITY.captures_iter(text).map(|c| c[1].to_string()).collect();
    ENTITY_REF
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .filter(|e| !XML_BUILTIN_ENTITIES.contains(&e.as_str()) && !declared.contains(e))
        .collect()
}

pub(crate) fn has_stray_text(text: &str) -> bool {
    let t = text.trim().trim_start_matches('\u{feff}');
    !t.is_empty() && (!t.starts_with('<') || !t.ends_with('>'))
}

/// Lists every problem found. Empty iff the document parses as an alignment
/// and all expression invariants hold.
pub fn validate(xml: &str) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let cleaned = strip_eos_markers(xml);
    if cleaned != xml {
        issues.push(ValidationIssue::new(Some(FixKind::EosToken), "end-of-sequence marker in output"));
    }
    if has_stray_text(&cleaned) {
        issues.push(ValidationIssue::new(Some(FixKind::EosToken), "stray text around the XML document"));
    }
    let declared = declared_prefixes(&cleaned);
    for prefix in used_prefixes(&cleaned) {
        if !declared.contains(&prefix) {
            issues.push(ValidationIssue::new(
                Some(FixKind::MissingPrefix),
                format!("prefix `{prefix}:` is not declared"),
            ));
        }
    }
    if needs_default_namespace(&cleaned) {
        issues.push(ValidationIssue::new(Some(FixKind::MissingPrefix), "default alignment namespace is not declared"));
    }
    for entity in undeclared_entities(&cleaned) {
        let kind = if KNOWN_PREFIXES.iter().any(|(p, _)| *p == entity) {
            FixKind::MissingPrefix
        } else {
            FixKind::InvalidLiteral
        };
        issues.push(ValidationIssue::new(Some(kind), format!("entity `&{entity};` is not declared")));
    }

    let body = cleaned.trim();
    let body = match (body.find('<'), body.rfind('>')) {
        (Some(s), Some(e)) if s < e => &body[s..=e],
        _ => body,
    };
    match parse_alignment(body) {
        Ok(alignment) => {
            for (i, cell) in alignment.cells.iter().enumerate() {
                for (side, e) in [("entity1", &cell.entity1), ("entity2", &cell.entity2)] {
                    for atom in e.atoms().into_iter().filter(|a| is_compact_iri(a.as_str())) {
                        issues.push(ValidationIssue::new(
                            Some(FixKind::UnprefixedEntity),
                            format!("cell {i} {side}: compact IRI `{atom}` is not expanded"),
                        ));
                    }
                    for problem in e.structural_issues() {
                        issues.push(ValidationIssue::new(None, format!("cell {i} {side}: {problem}")));
                    }
                }
            }
            if alignment.onto1.is_some() && alignment.onto1 == alignment.onto2 {
                issues.push(ValidationIssue::new(None, "onto1 and onto2 are the same ontology"));
            }
        }
        Err(e) => {
            let kind = e.fix_kind();
            // XML-level failures after a text-level finding are its consequence
            let consequence = matches!(e, AlignmentError::Xml { .. }) && issues.iter().any(|i| i.kind.is_some());
            let duplicate = kind.is_some() && issues.iter().any(|i| i.kind == kind);
            if !consequence && !duplicate {
                issues.push(ValidationIssue::new(kind, e.to_string()));
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edoal::{serialize_alignment, Alignment};

    #[test]
    fn valid_document_has_no_issues() {
        let xml = serialize_alignment(&Alignment::default());
        assert_eq!(validate(&xml), vec![]);
    }

    #[test]
    fn missing_edoal_prefix() {
        let xml = serialize_alignment(&Alignment::default());
        let broken = xml
            .replace(&format!("\n         xmlns:edoal=\"{}\"", ns::EDOAL), "")
            .replace("<type>**</type>", "<type>**</type><edoal:Class rdf:about=\"http://e/A\"/>");
        let kinds: Vec<_> = validate(&broken).into_iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![Some(FixKind::MissingPrefix)]);
    }

    #[test]
    fn compact_iris() {
        assert!(is_compact_iri("ex:Paper"));
        assert!(is_compact_iri("conf:hasAuthor"));
        assert!(!is_compact_iri("http://e.org/A"));
        assert!(!is_compact_iri("urn:isbn:123"));
        assert!(!is_compact_iri("Paper"));
        let xml = serialize_alignment(&Alignment::default()).replace(
            "</Alignment>",
            "<map><Cell><entity1><edoal:Class rdf:about=\"ex:A\"/></entity1><entity2><edoal:Class rdf:about=\"http://b/B\"/></entity2><relation>=</relation><measure>1.0</measure></Cell></map></Alignment>",
        );
        let kinds: Vec<_> = validate(&xml).into_iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![Some(FixKind::UnprefixedEntity)]);
    }

    #[test]
    fn trailing_eos_token() {
        let xml = serialize_alignment(&Alignment::default()) + "<|endoftext|>";
        let kinds: Vec<_> = validate(&xml).into_iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![Some(FixKind::EosToken)]);
    }
}
