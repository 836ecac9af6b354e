use std::collections::BTreeMap;

use roxmltree::{Document, Node, ParsingOptions};

use super::alignment::{Alignment, Correspondence, Relation};
use super::expr::{EdoalExpression, ExprKind, RestrictionValue};
use super::{ns, AlignmentError};
use crate::rdf::Iri;

use EdoalExpression as E;

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept `MASK_i` placeholders where entity IRIs are expected.
    pub allow_masks: bool,
}

pub fn parse_alignment(xml: &str) -> Result<Alignment, AlignmentError> {
    parse_alignment_with(xml, ParseOptions::default())
}

pub fn parse_alignment_with(xml: &str, opts: ParseOptions) -> Result<Alignment, AlignmentError> {
    let doc = Document::parse_with_options(xml, ParsingOptions { allow_dtd: true, ..Default::default() })
        .map_err(AlignmentError::from_xml)?;
    let root = doc.root_element();
    let align_el = if is_align(root, "Alignment") {
        root
    } else if is_rdf(root, "RDF") {
        root.children().find(|n| is_align(*n, "Alignment")).ok_or(AlignmentError::MissingRoot)?
    } else {
        return Err(AlignmentError::MissingRoot);
    };

    let reader = Reader { opts };
    let mut alignment = Alignment { prefixes: extra_prefixes(root), ..Alignment::default() };
    let mut saw_onto1 = false;
    let mut saw_onto2 = false;
    for child in align_el.children().filter(Node::is_element) {
        if !is_align_ns(child) {
            continue;
        }
        match child.tag_name().name() {
            "level" => alignment.level = child.text().unwrap_or("").trim().to_string(),
            "onto1" => {
                alignment.onto1 = reader.ontology(child)?;
                saw_onto1 = true;
            }
            "onto2" => {
                alignment.onto2 = reader.ontology(child)?;
                saw_onto2 = true;
            }
            "map" => {
                for cell in child.children().filter(|n| is_align(*n, "Cell")) {
                    alignment.cells.push(reader.cell(cell, alignment.cells.len())?);
                }
            }
            // xml, type, method, time and other metadata carry nothing we model
            _ => {}
        }
    }
    if !saw_onto1 {
        return Err(AlignmentError::MissingOntology("onto1"));
    }
    if !saw_onto2 {
        return Err(AlignmentError::MissingOntology("onto2"));
    }
    Ok(alignment)
}

fn extra_prefixes(root: Node) -> BTreeMap<String, String> {
    root.namespaces()
        .filter_map(|n| n.name().map(|name| (name.to_string(), n.uri().to_string())))
        .filter(|(name, _)| !super::xml_write::STANDARD_PREFIXES.iter().any(|(p, _)| p == name))
        .collect()
}

fn is_align_ns(n: Node) -> bool {
    matches!(n.tag_name().namespace(), Some(u) if u == ns::ALIGN || u == ns::ALIGN_NO_HASH)
}

fn is_align(n: Node, local: &str) -> bool {
    n.is_element() && n.tag_name().name() == local && is_align_ns(n)
}

fn is_rdf(n: Node, local: &str) -> bool {
    n.is_element() && n.tag_name().name() == local && n.tag_name().namespace() == Some(ns::RDF)
}

fn is_edoal_ns(n: Node) -> bool {
    matches!(n.tag_name().namespace(), Some(u) if ns::is_edoal(u))
}

fn rdf_attr<'a>(n: Node<'a, '_>, local: &str) -> Option<&'a str> {
    n.attribute((ns::RDF, local))
}

fn edoal_attr<'a>(n: Node<'a, '_>, local: &str) -> Option<&'a str> {
    n.attributes().find(|a| a.name() == local && a.namespace().is_some_and(ns::is_edoal)).map(|a| a.value())
}

fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(Node::is_element)
}

struct Reader {
    opts: ParseOptions,
}

impl Reader {
    fn iri(&self, value: &str) -> Result<Iri, AlignmentError> {
        let value = value.trim();
        if self.opts.allow_masks && super::is_mask(value) {
            return Ok(Iri::new_unchecked(value));
        }
        Iri::new(value).map_err(|_| AlignmentError::InvalidIri(value.to_string()))
    }

    fn ontology(&self, el: Node) -> Result<Option<Iri>, AlignmentError> {
        let about = elements(el)
            .find(|n| n.tag_name().name() == "Ontology")
            .and_then(|o| rdf_attr(o, "about"))
            .or_else(|| rdf_attr(el, "resource"))
            .or_else(|| el.text().map(str::trim).filter(|t| !t.is_empty()));
        match about.map(str::trim) {
            None | Some("") => Ok(None),
            Some(v) => self.iri(v).map(Some),
        }
    }

    fn cell(&self, cell: Node, index: usize) -> Result<Correspondence, AlignmentError> {
        let mut entity1 = None;
        let mut entity2 = None;
        let mut relation = None;
        let mut measure = 1.0;
        for child in elements(cell).filter(|n| is_align_ns(*n)) {
            match child.tag_name().name() {
                "entity1" => entity1 = Some(self.entity_slot(child)?),
                "entity2" => entity2 = Some(self.entity_slot(child)?),
                "relation" => {
                    let text = child.text().unwrap_or("");
                    relation = Some(
                        Relation::from_symbol(text)
                            .ok_or_else(|| AlignmentError::MalformedRelation(text.trim().to_string()))?,
                    );
                }
                "measure" => {
                    let text = child.text().unwrap_or("").trim();
                    measure = text
                        .parse::<f64>()
                        .ok()
                        .filter(|m| (0.0..=1.0).contains(m))
                        .ok_or_else(|| AlignmentError::InvalidMeasure(text.to_string()))?;
                }
                _ => {}
            }
        }
        let entity1 = entity1.ok_or(AlignmentError::MissingEntity { cell: index, side: "entity1" })?;
        let entity2 = entity2.ok_or(AlignmentError::MissingEntity { cell: index, side: "entity2" })?;
        let relation = relation.ok_or_else(|| AlignmentError::MalformedRelation(String::new()))?;
        Ok(Correspondence { entity1, entity2, relation, measure })
    }

    fn entity_slot(&self, slot: Node) -> Result<EdoalExpression, AlignmentError> {
        let mut children = elements(slot);
        match (children.next(), children.next()) {
            (Some(el), None) => self.expression(el),
            (None, _) => match rdf_attr(slot, "resource") {
                Some(r) => Ok(E::ClassId(self.iri(r)?)),
                None => Err(AlignmentError::Structure(format!("empty <{}>", slot.tag_name().name()))),
            },
            (Some(_), Some(_)) => {
                Err(AlignmentError::Structure(format!("<{}> holds more than one expression", slot.tag_name().name())))
            }
        }
    }

    fn single_child<'a, 'i>(&self, el: Node<'a, 'i>) -> Result<Node<'a, 'i>, AlignmentError> {
        let mut children = elements(el);
        match (children.next(), children.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(AlignmentError::Structure(format!("<{}> must hold exactly one element", qualified(el)))),
        }
    }

    fn expression(&self, el: Node) -> Result<EdoalExpression, AlignmentError> {
        if !is_edoal_ns(el) {
            return Err(AlignmentError::UnknownElement(qualified(el)));
        }
        let name = el.tag_name().name();
        let kind = match name {
            "Class" => ExprKind::Class,
            "Property" => ExprKind::Property,
            "Relation" => ExprKind::Relation,
            "Instance" => ExprKind::Instance,
            "AttributeDomainRestriction"
            | "AttributeTypeRestriction"
            | "AttributeValueRestriction"
            | "AttributeOccurenceRestriction"
            | "AttributeOccurrenceRestriction" => return self.restriction(el),
            _ => return Err(AlignmentError::UnknownElement(qualified(el))),
        };
        if let Some(about) = rdf_attr(el, "about") {
            let iri = self.iri(about)?;
            return Ok(match kind {
                ExprKind::Class => E::ClassId(iri),
                ExprKind::Property => E::PropertyId(iri),
                ExprKind::Relation => E::RelationId(iri),
                ExprKind::Instance => E::InstanceId(iri),
            });
        }
        let ctor = self.single_child(el)?;
        if !is_edoal_ns(ctor) {
            return Err(AlignmentError::UnknownElement(qualified(ctor)));
        }
        let operands =
            || -> Result<Vec<EdoalExpression>, AlignmentError> { elements(ctor).map(|c| self.expression(c)).collect() };
        let expr = match (kind, ctor.tag_name().name()) {
            (ExprKind::Instance, _) => return Err(AlignmentError::UnknownElement(qualified(ctor))),
            (_, "and") => E::And(operands()?),
            (_, "or") => E::Or(operands()?),
            (_, "not") => E::Not(Box::new(self.expression(self.single_child(ctor)?)?)),
            (ExprKind::Property | ExprKind::Relation, "compose") => E::Compose(operands()?),
            (ExprKind::Relation, "inverse") => E::Inverse(Box::new(self.expression(self.single_child(ctor)?)?)),
            _ => return Err(AlignmentError::UnknownElement(qualified(ctor))),
        };
        Ok(expr)
    }

    fn restriction(&self, el: Node) -> Result<EdoalExpression, AlignmentError> {
        let mut on_attribute = None;
        let mut class = None;
        let mut datatype = None;
        let mut comparator = None;
        let mut value_el = None;
        for part in elements(el) {
            if !is_edoal_ns(part) {
                return Err(AlignmentError::UnknownElement(qualified(part)));
            }
            match part.tag_name().name() {
                "onAttribute" => on_attribute = Some(self.expression(self.single_child(part)?)?),
                "class" => class = Some(self.expression(self.single_child(part)?)?),
                "datatype" => {
                    let about = match elements(part).next() {
                        Some(dt) => rdf_attr(dt, "about"),
                        None => part.text().map(str::trim),
                    };
                    let about = about.ok_or_else(|| AlignmentError::Structure("datatype without IRI".to_string()))?;
                    datatype = Some(Iri::new(about.trim()).map_err(|_| AlignmentError::InvalidIri(about.to_string()))?);
                }
                "comparator" => {
                    let r = rdf_attr(part, "resource")
                        .ok_or_else(|| AlignmentError::Structure("comparator without rdf:resource".to_string()))?;
                    comparator = Some(Iri::new(r.trim()).map_err(|_| AlignmentError::InvalidIri(r.to_string()))?);
                }
                "value" => value_el = Some(part),
                _ => return Err(AlignmentError::UnknownElement(qualified(part))),
            }
        }
        let missing = |what: &str| AlignmentError::Structure(format!("<{}> lacks {what}", qualified(el)));
        let on_attribute = Box::new(on_attribute.ok_or_else(|| missing("onAttribute"))?);
        Ok(match el.tag_name().name() {
            "AttributeDomainRestriction" => {
                E::AttributeDomainRestriction { on_attribute, class: Box::new(class.ok_or_else(|| missing("class"))?) }
            }
            "AttributeTypeRestriction" => {
                E::AttributeTypeRestriction { on_attribute, datatype: datatype.ok_or_else(|| missing("datatype"))? }
            }
            "AttributeValueRestriction" => E::AttributeValueRestriction {
                on_attribute,
                comparator: comparator.ok_or_else(|| missing("comparator"))?,
                value: self.restriction_value(self.single_child(value_el.ok_or_else(|| missing("value"))?)?)?,
            },
            _ => {
                let comparator = comparator.ok_or_else(|| missing("comparator"))?;
                let value = value_el.ok_or_else(|| missing("value"))?;
                // a bare integer is accepted in place of a Literal element
                let text = match elements(value).next() {
                    Some(_) => literal_string(self.single_child(value)?).unwrap_or_default(),
                    None => value.text().unwrap_or_default().to_string(),
                };
                let cardinality =
                    text.trim().parse::<u32>().map_err(|_| AlignmentError::InvalidLiteral(text.clone()))?;
                E::AttributeOccurenceRestriction { on_attribute, comparator, cardinality }
            }
        })
    }

    fn restriction_value(&self, el: Node) -> Result<RestrictionValue, AlignmentError> {
        if !is_edoal_ns(el) {
            return Err(AlignmentError::UnknownElement(qualified(el)));
        }
        match el.tag_name().name() {
            "Literal" => {
                let lexical = literal_string(el).ok_or_else(|| AlignmentError::InvalidLiteral(String::new()))?;
                let datatype = match edoal_attr(el, "type") {
                    Some(t) => Some(Iri::new(t.trim()).map_err(|_| AlignmentError::InvalidIri(t.to_string()))?),
                    None => None,
                };
                Ok(RestrictionValue::Literal { lexical, datatype })
            }
            "Instance" => {
                let about = rdf_attr(el, "about")
                    .ok_or_else(|| AlignmentError::Structure("instance without rdf:about".to_string()))?;
                Ok(RestrictionValue::Instance(self.iri(about)?))
            }
            _ => Err(AlignmentError::UnknownElement(qualified(el))),
        }
    }
}

fn literal_string(el: Node) -> Option<String> {
    if el.tag_name().name() != "Literal" {
        return None;
    }
    edoal_attr(el, "string").map(str::to_string).or_else(|| el.text().map(str::to_string))
}

fn qualified(n: Node) -> String {
    match n.tag_name().namespace() {
        Some(ns) if ns::is_edoal(ns) => format!("edoal:{}", n.tag_name().name()),
        _ => n.tag_name().name().to_string(),
    }
}
