//! EDOAL expressions, Alignment-format documents, repair and merge.

mod alignment;
mod expr;
mod merge;
mod normalize;
mod repair;
mod validate;
mod xml_read;
mod xml_write;

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

pub use alignment::{classify_cell, Alignment, CellClass, CellKey, Correspondence, Relation};
pub use expr::{EdoalExpression, ExprKind, RestrictionValue};
pub use merge::{merge, merge_with_stats, MergeStats};
pub use normalize::normalize;
pub use repair::{repair, Fix, RepairReport};
pub use validate::{validate, FixKind, ValidationIssue};
pub use xml_read::{parse_alignment, parse_alignment_with, ParseOptions};
pub use xml_write::serialize_alignment;

pub mod ns {
    pub const ALIGN: &str = "http://knowledgeweb.semanticweb.org/heterogeneity/alignment#";
    pub const ALIGN_NO_HASH: &str = "http://knowledgeweb.semanticweb.org/heterogeneity/alignment";
    pub const EDOAL: &str = "http://ns.inria.org/edoal/1.0/#";
    pub const EDOAL_NO_HASH: &str = "http://ns.inria.org/edoal/1.0/";
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

    pub fn is_edoal(uri: &str) -> bool {
        uri == EDOAL || uri == EDOAL_NO_HASH
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignmentError {
    #[error("XML error: {message}")]
    Xml { message: String, fix: Option<FixKind> },
    #[error("document has no Alignment element")]
    MissingRoot,
    #[error("unknown element <{0}>")]
    UnknownElement(String),
    #[error("cell {cell} has no {side}")]
    MissingEntity { cell: usize, side: &'static str },
    #[error("malformed relation symbol `{0}`")]
    MalformedRelation(String),
    #[error("invalid IRI `{0}`")]
    InvalidIri(String),
    #[error("invalid measure `{0}`")]
    InvalidMeasure(String),
    #[error("invalid literal `{0}`")]
    InvalidLiteral(String),
    #[error("missing <{0}>")]
    MissingOntology(&'static str),
    #[error("{0}")]
    Structure(String),
    #[error("conflicting ontology identities: {0}")]
    Conflict(String),
}

impl AlignmentError {
    pub(crate) fn from_xml(e: roxmltree::Error) -> Self {
        use roxmltree::Error as X;
        let fix = match &e {
            X::UnknownNamespace(..) => Some(FixKind::MissingPrefix),
            X::UnknownEntityReference(name, _) => {
                if validate::KNOWN_PREFIXES.iter().any(|(p, _)| p == name) {
                    Some(FixKind::MissingPrefix)
                } else {
                    Some(FixKind::InvalidLiteral)
                }
            }
            X::MalformedEntityReference(_)
            | X::InvalidAttributeValue(_)
            | X::InvalidString(..)
            | X::InvalidCharacterData(_)
            | X::InvalidChar(..)
            | X::InvalidChar2(..) => Some(FixKind::InvalidLiteral),
            X::UnexpectedCloseTag(..) | X::UnclosedRootNode | X::UnexpectedEndOfStream | X::NoRootNode => {
                Some(FixKind::MissingOntologyTag)
            }
            _ => None,
        };
        AlignmentError::Xml { message: e.to_string(), fix }
    }

    /// The repair class that addresses this error, when one does.
    pub fn fix_kind(&self) -> Option<FixKind> {
        match self {
            AlignmentError::Xml { fix, .. } => *fix,
            AlignmentError::MissingRoot | AlignmentError::MissingOntology(_) => Some(FixKind::MissingOntologyTag),
            AlignmentError::InvalidIri(_) => Some(FixKind::UnprefixedEntity),
            AlignmentError::InvalidMeasure(_) | AlignmentError::InvalidLiteral(_) => Some(FixKind::InvalidLiteral),
            _ => None,
        }
    }
}

static MASK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^MASK_\d+$").unwrap());

pub fn is_mask(s: &str) -> bool {
    MASK.is_match(s)
}

static EOS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"<\|[A-Za-z_]+\|>|</s>|<s>|<eos>|</eos>|<end_of_turn>|<start_of_turn>(model|user)?|\[/?INST\]").unwrap()
});

/// Removes end-of-sequence and chat-template control tokens.
pub fn strip_eos_markers(text: &str) -> String {
    EOS.replace_all(text, "").into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eos_markers() {
        assert_eq!(strip_eos_markers("<a/><|endoftext|>"), "<a/>");
        assert_eq!(strip_eos_markers("<a/></s>\n<|im_end|>"), "<a/>\n");
        assert_eq!(strip_eos_markers("<rdf:RDF/>"), "<rdf:RDF/>");
    }

    #[test]
    fn masks() {
        assert!(is_mask("MASK_12"));
        assert!(!is_mask("MASK_"));
        assert!(!is_mask("http://x/MASK_1"));
    }
}
