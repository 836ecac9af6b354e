use std::collections::BTreeMap;

use oxrdfxml::RdfXmlParser;

use super::graph::OntologyGraph;
use super::term::Iri;
use super::turtle::BlankRelabeler;
use super::RdfError;

pub fn parse_rdfxml(text: &str) -> Result<OntologyGraph, RdfError> {
    // Well-formedness first, so malformed XML and bad RDF structure report differently.
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    let doc = roxmltree::Document::parse_with_options(text, opts).map_err(|e| RdfError::Xml(e.to_string()))?;
    let prefixes: BTreeMap<String, Iri> = doc
        .root_element()
        .namespaces()
        .filter_map(|n| Some((n.name()?.to_string(), Iri::new(n.uri()).ok()?)))
        .collect();

    let parser = RdfXmlParser::new().for_slice(text);
    let mut relabel = BlankRelabeler::default();
    let mut triples = Vec::new();
    for item in parser {
        let t = item.map_err(|e| RdfError::RdfXml(e.to_string()))?;
        triples.push(relabel.triple(t));
    }
    let base =
        doc.root_element().attribute(("http://www.w3.org/XML/1998/namespace", "base")).and_then(|b| Iri::new(b).ok());
    Ok(OntologyGraph::new(triples, prefixes, base))
}
