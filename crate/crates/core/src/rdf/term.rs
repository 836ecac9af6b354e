use std::fmt;

use serde::{Deserialize, Serialize};

use super::RdfError;

/// An absolute IRI.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        if is_valid_iri(&value) {
            Ok(Iri(value))
        } else {
            Err(RdfError::InvalidIri(value))
        }
    }

    /// Builds an IRI without validation. Used for template placeholders such
    /// as `MASK_3`, which are deliberately not absolute.
    pub(crate) fn new_unchecked(value: impl Into<String>) -> Self {
        Iri(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Text after the last `#` or `/`; the whole IRI when neither occurs.
    pub fn local_name(&self) -> &str {
        local_name(&self.0)
    }

    /// Everything up to and including the last `#` or `/`.
    pub fn namespace(&self) -> &str {
        let cut = self.0.len() - self.local_name().len();
        &self.0[..cut]
    }
}

pub(crate) fn local_name(iri: &str) -> &str {
    match iri.rfind(['#', '/']) {
        Some(pos) => &iri[pos + 1..],
        None => iri,
    }
}

pub(crate) fn is_valid_iri(value: &str) -> bool {
    let Some(colon) = value.find(':') else {
        return false;
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return false;
    }
    !value.chars().any(|c| {
        c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`')
    })
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl TryFrom<String> for Iri {
    type Error = RdfError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> Self {
        iri.0
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Document-local blank node, canonically labelled `b0`, `b1`, ...
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BlankNode(pub u32);

impl fmt::Display for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:b{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Option<Iri>,
    pub language: Option<String>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), datatype: None, language: None }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal { lexical: lexical.into(), datatype: Some(datatype), language: None }
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), datatype: None, language: Some(language.into()) }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Subject {
    Iri(Iri),
    Blank(BlankNode),
}

impl Subject {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Subject::Iri(iri) => Some(iri),
            Subject::Blank(_) => None,
        }
    }
}

impl From<Iri> for Subject {
    fn from(iri: Iri) -> Self {
        Subject::Iri(iri)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RdfTerm {
    Iri(Iri),
    Blank(BlankNode),
    Literal(Literal),
}

impl RdfTerm {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            RdfTerm::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            RdfTerm::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, RdfTerm::Blank(_))
    }
}

impl From<Iri> for RdfTerm {
    fn from(iri: Iri) -> Self {
        RdfTerm::Iri(iri)
    }
}

impl From<Literal> for RdfTerm {
    fn from(lit: Literal) -> Self {
        RdfTerm::Literal(lit)
    }
}

impl From<Subject> for RdfTerm {
    fn from(s: Subject) -> Self {
        match s {
            Subject::Iri(iri) => RdfTerm::Iri(iri),
            Subject::Blank(b) => RdfTerm::Blank(b),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Triple {
    pub subject: Subject,
    pub predicate: Iri,
    pub object: RdfTerm,
}

impl Triple {
    pub fn new(subject: impl Into<Subject>, predicate: Iri, object: impl Into<RdfTerm>) -> Self {
        Triple { subject: subject.into(), predicate, object: object.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_validation() {
        assert!(Iri::new("http://e/A").is_ok());
        assert!(Iri::new("urn:x").is_ok());
        assert!(Iri::new("").is_err());
        assert!(Iri::new("AcceptedPaper").is_err());
        assert!(Iri::new("http://e/A B").is_err());
        assert!(Iri::new("1http://e").is_err());
    }

    #[test]
    fn local_names() {
        assert_eq!(Iri::new("http://e/Paper#AcceptedPaper").unwrap().local_name(), "AcceptedPaper");
        assert_eq!(Iri::new("http://e/ns/FullName").unwrap().local_name(), "FullName");
        assert_eq!(Iri::new("http://e/ns/FullName").unwrap().namespace(), "http://e/ns/");
    }
}
