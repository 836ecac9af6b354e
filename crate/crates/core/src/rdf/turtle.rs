use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use oxttl::TurtleParser;

use super::graph::OntologyGraph;
use super::term::{BlankNode, Iri, Literal, RdfTerm, Subject, Triple};
use super::{vocab, RdfError};

/// Maps parser-assigned blank node ids onto the canonical `b0, b1, ...`
/// sequence in order of first appearance.
#[derive(Default)]
pub(crate) struct BlankRelabeler {
    seen: HashMap<String, u32>,
}

impl BlankRelabeler {
    pub(crate) fn label(&mut self, id: &str) -> BlankNode {
        let next = self.seen.len() as u32;
        BlankNode(*self.seen.entry(id.to_string()).or_insert(next))
    }

    pub(crate) fn subject(&mut self, s: oxrdf::NamedOrBlankNode) -> Subject {
        match s {
            oxrdf::NamedOrBlankNode::NamedNode(n) => Subject::Iri(Iri::new_unchecked(n.into_string())),
            oxrdf::NamedOrBlankNode::BlankNode(b) => Subject::Blank(self.label(b.as_str())),
        }
    }

    pub(crate) fn term(&mut self, t: oxrdf::Term) -> RdfTerm {
        match t {
            oxrdf::Term::NamedNode(n) => RdfTerm::Iri(Iri::new_unchecked(n.into_string())),
            oxrdf::Term::BlankNode(b) => RdfTerm::Blank(self.label(b.as_str())),
            oxrdf::Term::Literal(l) => {
                let (lexical, datatype, language) = l.destruct();
                let datatype = datatype
                    .filter(|d| d.as_str() != vocab::XSD_STRING && d.as_str() != vocab::RDF_LANG_STRING)
                    .map(|d| Iri::new_unchecked(d.into_string()));
                RdfTerm::Literal(Literal { lexical, datatype, language })
            }
        }
    }

    pub(crate) fn triple(&mut self, t: oxrdf::Triple) -> Triple {
        let subject = self.subject(t.subject);
        let predicate = Iri::new_unchecked(t.predicate.into_string());
        let object = self.term(t.object);
        Triple { subject, predicate, object }
    }
}

pub fn parse_turtle(text: &str) -> Result<OntologyGraph, RdfError> {
    let mut parser = TurtleParser::new().for_slice(text);
    let mut relabel = BlankRelabeler::default();
    let mut triples = Vec::new();
    for item in parser.by_ref() {
        match item {
            Ok(t) => triples.push(relabel.triple(t)),
            Err(e) => {
                let start = e.location().start;
                let (line, column) = (start.line + 1, start.column + 1);
                let message = e.message().to_string();
                if let Some(prefix) =
                    message.strip_prefix("The prefix ").and_then(|rest| rest.strip_suffix(": has not been declared"))
                {
                    return Err(RdfError::UndeclaredPrefix { prefix: prefix.to_string(), line, column });
                }
                return Err(RdfError::Syntax { line, column, message });
            }
        }
    }
    let prefixes: BTreeMap<String, Iri> =
        parser.prefixes().filter_map(|(k, v)| Iri::new(v).ok().map(|iri| (k.to_string(), iri))).collect();
    let base = parser.base_iri().and_then(|b| Iri::new(b).ok());
    Ok(OntologyGraph::new(triples, prefixes, base))
}

/// Writes the graph as Turtle. Triples are emitted in sorted order grouped by
/// subject, prefixes sorted by short name; equal graphs give equal bytes.
pub fn serialize_turtle(graph: &OntologyGraph) -> String {
    let graph = graph.canonicalize_blanks();
    let mut out = String::new();
    if let Some(base) = graph.base() {
        let _ = writeln!(out, "@base <{}> .", base);
    }
    for (name, ns) in graph.prefixes() {
        let _ = writeln!(out, "@prefix {}: <{}> .", name, ns);
    }
    let writer = TermWriter::new(graph.prefixes());
    let triples = graph.triples();
    let mut i = 0;
    while i < triples.len() {
        if !out.is_empty() {
            out.push('\n');
        }
        let subject = &triples[i].subject;
        out.push_str(&writer.subject(subject));
        let mut first_pred = true;
        while i < triples.len() && &triples[i].subject == subject {
            let predicate = &triples[i].predicate;
            if first_pred {
                out.push(' ');
                first_pred = false;
            } else {
                out.push_str(" ;\n    ");
            }
            out.push_str(&writer.predicate(predicate));
            let mut first_obj = true;
            while i < triples.len() && &triples[i].subject == subject && &triples[i].predicate == predicate {
                out.push_str(if first_obj { " " } else { ", " });
                first_obj = false;
                out.push_str(&writer.object(&triples[i].object));
                i += 1;
            }
        }
        out.push_str(" .\n");
    }
    out
}

struct TermWriter<'a> {
    prefixes: Vec<(&'a str, &'a str)>,
}

impl<'a> TermWriter<'a> {
    fn new(prefixes: &'a BTreeMap<String, Iri>) -> Self {
        let mut prefixes: Vec<(&str, &str)> = prefixes.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        // longest namespace wins, then short name for stability
        prefixes.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
        TermWriter { prefixes }
    }

    fn iri(&self, iri: &Iri) -> String {
        let s = iri.as_str();
        for (name, ns) in &self.prefixes {
            if let Some(local) = s.strip_prefix(ns) {
                if is_safe_local(local) {
                    return format!("{}:{}", name, local);
                }
            }
        }
        format!("<{}>", s)
    }

    fn subject(&self, s: &Subject) -> String {
        match s {
            Subject::Iri(iri) => self.iri(iri),
            Subject::Blank(b) => b.to_string(),
        }
    }

    fn predicate(&self, p: &Iri) -> String {
        if p.as_str() == vocab::RDF_TYPE {
            "a".to_string()
        } else {
            self.iri(p)
        }
    }

    fn object(&self, o: &RdfTerm) -> String {
        match o {
            RdfTerm::Iri(iri) => self.iri(iri),
            RdfTerm::Blank(b) => b.to_string(),
            RdfTerm::Literal(lit) => {
                let mut s = quote_literal(&lit.lexical);
                if let Some(lang) = &lit.language {
                    s.push('@');
                    s.push_str(lang);
                } else if let Some(dt) = &lit.datatype {
                    s.push_str("^^");
                    s.push_str(&self.iri(dt));
                }
                s
            }
        }
    }
}

fn is_safe_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }
        _ => false,
    }
}

fn quote_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

const TURTLE_STANDARD_PREFIXES: &[(&str, &str)] =
    &[("rdf", vocab::RDF_NS), ("rdfs", vocab::RDFS_NS), ("owl", vocab::OWL_NS), ("xsd", vocab::XSD_NS)];

/// Cleans up LLM-produced Turtle: strips fences and end-of-sequence markers,
/// then declares any standard prefix that is used but missing.
pub fn repair_turtle(text: &str) -> String {
    let mut body = crate::edoal::strip_eos_markers(text);
    if let Some(inner) = extract_fenced(&body) {
        body = inner;
    }
    let mut header = String::new();
    for (name, ns) in TURTLE_STANDARD_PREFIXES {
        let used = body.contains(&format!("{}:", name));
        let declared = body.contains(&format!("@prefix {}:", name)) || body.contains(&format!("PREFIX {}:", name));
        if used && !declared {
            let _ = writeln!(header, "@prefix {}: <{}> .", name, ns);
        }
    }
    header.push_str(body.trim());
    header.push('\n');
    header
}

fn extract_fenced(text: &str) -> Option<String> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    Some(body[..end].to_string())
}
