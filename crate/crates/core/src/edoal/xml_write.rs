use std::fmt::Write;

use super::alignment::{sort_cells, Alignment, Correspondence};
use super::expr::{EdoalExpression, ExprKind, RestrictionValue};
use super::ns;

use EdoalExpression as E;

pub(crate) const STANDARD_PREFIXES: &[(&str, &str)] =
    &[("align", ns::ALIGN), ("edoal", ns::EDOAL), ("rdf", ns::RDF), ("xsd", ns::XSD)];

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes with cells in canonical order; output is byte-stable.
pub fn serialize_alignment(a: &Alignment) -> String {
    let mut cells = a.cells.clone();
    sort_cells(&mut cells);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"utf-8\" standalone=\"no\"?>\n");
    let _ = write!(out, "<rdf:RDF xmlns=\"{}\"", ns::ALIGN);
    for (name, uri) in STANDARD_PREFIXES {
        let _ = write!(out, "\n         xmlns:{}=\"{}\"", name, escape(uri));
    }
    for (name, uri) in &a.prefixes {
        let _ = write!(out, "\n         xmlns:{}=\"{}\"", name, escape(uri));
    }
    out.push_str(">\n<Alignment>\n  <xml>yes</xml>\n");
    let _ = writeln!(out, "  <level>{}</level>", escape(&a.level));
    out.push_str("  <type>**</type>\n");
    for (tag, onto) in [("onto1", &a.onto1), ("onto2", &a.onto2)] {
        let about = onto.as_ref().map(|i| i.as_str()).unwrap_or("");
        let _ = writeln!(out, "  <{tag}>\n    <Ontology rdf:about=\"{}\"/>\n  </{tag}>", escape(about));
    }
    for cell in &cells {
        write_cell(&mut out, cell);
    }
    out.push_str("</Alignment>\n</rdf:RDF>\n");
    out
}

fn write_cell(out: &mut String, cell: &Correspondence) {
    out.push_str("  <map>\n    <Cell>\n");
    for (tag, e) in [("entity1", &cell.entity1), ("entity2", &cell.entity2)] {
        let _ = writeln!(out, "      <{tag}>");
        write_expr(out, e, 8);
        let _ = writeln!(out, "      </{tag}>");
    }
    let _ = writeln!(out, "      <relation>{}</relation>", escape(cell.relation.symbol()));
    let _ = writeln!(out, "      <measure rdf:datatype=\"{}float\">{:?}</measure>", ns::XSD, cell.measure);
    out.push_str("    </Cell>\n  </map>\n");
}

fn pad(out: &mut String, indent: usize) {
    out.extend(std::iter::repeat_n(' ', indent));
}

fn leaf(out: &mut String, indent: usize, element: &str, iri: &str) {
    pad(out, indent);
    let _ = writeln!(out, "<edoal:{element} rdf:about=\"{}\"/>", escape(iri));
}

fn write_expr(out: &mut String, e: &EdoalExpression, indent: usize) {
    match e {
        E::ClassId(i) => leaf(out, indent, "Class", i.as_str()),
        E::PropertyId(i) => leaf(out, indent, "Property", i.as_str()),
        E::RelationId(i) => leaf(out, indent, "Relation", i.as_str()),
        E::InstanceId(i) => leaf(out, indent, "Instance", i.as_str()),
        E::And(items) => constructor(out, e, "and", items.iter(), true, indent),
        E::Or(items) => constructor(out, e, "or", items.iter(), true, indent),
        E::Compose(items) => constructor(out, e, "compose", items.iter(), true, indent),
        E::Not(inner) => constructor(out, e, "not", std::iter::once(inner.as_ref()), false, indent),
        E::Inverse(inner) => constructor(out, e, "inverse", std::iter::once(inner.as_ref()), false, indent),
        E::AttributeDomainRestriction { on_attribute, class } => {
            restriction(out, "AttributeDomainRestriction", on_attribute, indent, |out, indent| {
                pad(out, indent);
                out.push_str("<edoal:class>\n");
                write_expr(out, class, indent + 2);
                pad(out, indent);
                out.push_str("</edoal:class>\n");
            })
        }
        E::AttributeTypeRestriction { on_attribute, datatype } => {
            restriction(out, "AttributeTypeRestriction", on_attribute, indent, |out, indent| {
                pad(out, indent);
                out.push_str("<edoal:datatype>\n");
                leaf(out, indent + 2, "Datatype", datatype.as_str());
                pad(out, indent);
                out.push_str("</edoal:datatype>\n");
            })
        }
        E::AttributeValueRestriction { on_attribute, comparator, value } => {
            restriction(out, "AttributeValueRestriction", on_attribute, indent, |out, indent| {
                comparator_el(out, indent, comparator.as_str());
                pad(out, indent);
                out.push_str("<edoal:value>\n");
                match value {
                    RestrictionValue::Instance(i) => leaf(out, indent + 2, "Instance", i.as_str()),
                    RestrictionValue::Literal { lexical, datatype } => {
                        literal_el(out, indent + 2, lexical, datatype.as_ref().map(|d| d.as_str()))
                    }
                }
                pad(out, indent);
                out.push_str("</edoal:value>\n");
            })
        }
        E::AttributeOccurenceRestriction { on_attribute, comparator, cardinality } => {
            restriction(out, "AttributeOccurenceRestriction", on_attribute, indent, |out, indent| {
                comparator_el(out, indent, comparator.as_str());
                pad(out, indent);
                out.push_str("<edoal:value>\n");
                literal_el(out, indent + 2, &cardinality.to_string(), Some(&format!("{}integer", ns::XSD)));
                pad(out, indent);
                out.push_str("</edoal:value>\n");
            })
        }
    }
}

fn comparator_el(out: &mut String, indent: usize, comparator: &str) {
    pad(out, indent);
    let _ = writeln!(out, "<edoal:comparator rdf:resource=\"{}\"/>", escape(comparator));
}

fn literal_el(out: &mut String, indent: usize, lexical: &str, datatype: Option<&str>) {
    pad(out, indent);
    match datatype {
        Some(dt) => {
            let _ =
                writeln!(out, "<edoal:Literal edoal:type=\"{}\" edoal:string=\"{}\"/>", escape(dt), escape(lexical));
        }
        None => {
            let _ = writeln!(out, "<edoal:Literal edoal:string=\"{}\"/>", escape(lexical));
        }
    }
}

fn constructor<'a>(
    out: &mut String,
    whole: &EdoalExpression,
    op: &str,
    operands: impl Iterator<Item = &'a EdoalExpression>,
    collection: bool,
    indent: usize,
) {
    let element = whole.kind().unwrap_or(ExprKind::Class).element_name();
    pad(out, indent);
    let _ = writeln!(out, "<edoal:{element}>");
    pad(out, indent + 2);
    if collection {
        let _ = writeln!(out, "<edoal:{op} rdf:parseType=\"Collection\">");
    } else {
        let _ = writeln!(out, "<edoal:{op}>");
    }
    for operand in operands {
        write_expr(out, operand, indent + 4);
    }
    pad(out, indent + 2);
    let _ = writeln!(out, "</edoal:{op}>");
    pad(out, indent);
    let _ = writeln!(out, "</edoal:{element}>");
}

fn restriction(
    out: &mut String,
    element: &str,
    on_attribute: &EdoalExpression,
    indent: usize,
    rest: impl FnOnce(&mut String, usize),
) {
    pad(out, indent);
    let _ = writeln!(out, "<edoal:{element}>");
    pad(out, indent + 2);
    out.push_str("<edoal:onAttribute>\n");
    write_expr(out, on_attribute, indent + 4);
    pad(out, indent + 2);
    out.push_str("</edoal:onAttribute>\n");
    rest(out, indent + 2);
    pad(out, indent);
    let _ = writeln!(out, "</edoal:{element}>");
}
