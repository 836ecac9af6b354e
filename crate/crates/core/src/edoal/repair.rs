use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::validate::{
    declared_prefixes, has_stray_text, needs_default_namespace, undeclared_entities, used_prefixes, validate, FixKind,
    KNOWN_PREFIXES,
};
use super::{ns, strip_eos_markers};
use crate::rdf::Iri;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub kind: FixKind,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub fixes: Vec<Fix>,
    pub valid_after: bool,
}

impl RepairReport {
    pub fn has(&self, kind: FixKind) -> bool {
        self.fixes.iter().any(|f| f.kind == kind)
    }
}

const MAX_PASSES: usize = 16;

/// Repairs the syntactic damage typical of generated alignments. Steps run in
/// a fixed order (end markers, namespace declarations, structural tags,
/// unqualified entities, literals) and repeat until the text stops changing,
/// which makes the result a fixed point of `repair`.
pub fn repair(xml: &str) -> (String, RepairReport) {
    if validate(xml).is_empty() {
        return (xml.to_string(), RepairReport { fixes: vec![], valid_after: true });
    }
    let mut fixes = Vec::new();
    let mut text = xml.to_string();
    for _ in 0..MAX_PASSES {
        let before = text.clone();
        text = strip_markers(text, &mut fixes);
        text = declare_prefixes(text, &mut fixes);
        text = fix_structure(text, &mut fixes);
        text = qualify_entities(text, &mut fixes);
        text = fix_literals(text, &mut fixes);
        if text == before {
            break;
        }
    }
    let valid_after = validate(&text).is_empty();
    (text, RepairReport { fixes, valid_after })
}

fn push(fixes: &mut Vec<Fix>, kind: FixKind, detail: impl Into<String>) {
    fixes.push(Fix { kind, detail: detail.into() });
}

fn strip_markers(text: String, fixes: &mut Vec<Fix>) -> String {
    let mut out = strip_eos_markers(&text);
    if out != text {
        push(fixes, FixKind::EosToken, "removed end-of-sequence markers");
    }
    if has_stray_text(&out) {
        let t = out.trim();
        if let (Some(s), Some(e)) = (t.find('<'), t.rfind('>')) {
            if s < e {
                out = format!("{}\n", &t[s..=e]);
                push(fixes, FixKind::EosToken, "removed text outside the XML document");
            }
        }
    }
    out
}

static START_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[A-Za-z_][\w:.-]*").unwrap());

/// Byte offset just after the name of the first real start tag.
fn root_tag_name_end(text: &str) -> Option<usize> {
    START_TAG.find(text).map(|m| m.end())
}

fn declare_prefixes(mut text: String, fixes: &mut Vec<Fix>) -> String {
    let declared = declared_prefixes(&text);
    let mut decls = String::new();
    for prefix in used_prefixes(&text) {
        if declared.contains(&prefix) {
            continue;
        }
        if let Some((_, uri)) = KNOWN_PREFIXES.iter().find(|(p, _)| *p == prefix) {
            let _ = write!(decls, " xmlns:{prefix}=\"{uri}\"");
            push(fixes, FixKind::MissingPrefix, format!("declared `{prefix}:`"));
        }
    }
    if needs_default_namespace(&text) {
        let _ = write!(decls, " xmlns=\"{}\"", ns::ALIGN);
        push(fixes, FixKind::MissingPrefix, "declared the default alignment namespace");
    }
    if !decls.is_empty() {
        if let Some(at) = root_tag_name_end(&text) {
            text.insert_str(at, &decls);
        }
    }
    for entity in undeclared_entities(&text) {
        if let Some((_, uri)) = KNOWN_PREFIXES.iter().find(|(p, _)| *p == entity) {
            text = text.replace(&format!("&{entity};"), uri);
            push(fixes, FixKind::MissingPrefix, format!("expanded `&{entity};`"));
        }
    }
    text
}

static HAS_ALIGNMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<([\w.-]+:)?Alignment[\s>]").unwrap());
static HAS_RDF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<rdf:RDF[\s>]").unwrap());
static RDF_START: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<rdf:RDF[^>]*>").unwrap());
static ALIGNMENT_START: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<([\w.-]+:)?Alignment(\s[^>]*)?>").unwrap());
static XML_DECL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*<\?xml[^>]*\?>\s*").unwrap());
static ONTO_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<([\w.-]+:)?(onto1|onto2)[\s>/]").unwrap());
static CELL_START: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<Cell[\s>]").unwrap());
static MAP_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<map[\s>]").unwrap());
static ENTITY_BLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)<(entity1|entity2)(\s[^>]*)?>(.*?)</(entity1|entity2)>").unwrap());
static ABOUT_ATTR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(rdf:about|rdf:resource|edoal:type)\s*=\s*"([^"]*)""#).unwrap());
static ONTO_ABOUT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?s)<(?:[\w.-]+:)?(onto1|onto2)(?:\s[^>]*)?>\s*<(?:[\w.-]+:)?Ontology[^>]*?rdf:about\s*=\s*"([^"]*)""#,
    )
    .unwrap()
});

fn metadata_block(text: &str) -> String {
    let base1 = infer_namespace(text, "entity1").unwrap_or_default();
    let mut base2 = infer_namespace(text, "entity2").unwrap_or_default();
    if base1 == base2 {
        base2.clear();
    }
    let base1 = if base2.is_empty() { String::new() } else { base1 };
    format!(
        "\n<xml>yes</xml>\n<level>2EDOAL</level>\n<type>**</type>\n<onto1><Ontology rdf:about=\"{}\"/></onto1>\n<onto2><Ontology rdf:about=\"{}\"/></onto2>\n",
        super::xml_write::escape(base1.trim_end_matches(['#', '/'])),
        super::xml_write::escape(base2.trim_end_matches(['#', '/']))
    )
}

/// Most frequent namespace among the valid entity IRIs on one side.
fn infer_namespace(text: &str, side: &str) -> Option<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for block in ENTITY_BLOCK.captures_iter(text).filter(|c| &c[1] == side) {
        for attr in ABOUT_ATTR.captures_iter(&block[3]).filter(|a| &a[1] == "rdf:about") {
            if let Ok(iri) = Iri::new(&attr[2]) {
                *counts.entry(iri.namespace().to_string()).or_default() += 1;
            }
        }
    }
    let max = counts.values().copied().max()?;
    counts.into_iter().find(|(_, n)| *n == max).map(|(ns, _)| ns)
}

fn namespace_declarations() -> String {
    let mut s = format!(" xmlns=\"{}\"", ns::ALIGN);
    for (p, uri) in super::xml_write::STANDARD_PREFIXES {
        let _ = write!(s, " xmlns:{p}=\"{uri}\"");
    }
    s
}

fn fix_structure(text: String, fixes: &mut Vec<Fix>) -> String {
    let mut text = balance_tags(&text, fixes);

    if !MAP_TAG.is_match(&text) && CELL_START.is_match(&text) {
        text = text.replace("<Cell", "<map><Cell").replace("</Cell>", "</Cell></map>");
        push(fixes, FixKind::MissingOntologyTag, "wrapped cells in <map>");
    }

    if !HAS_ALIGNMENT.is_match(&text) && (CELL_START.is_match(&text) || MAP_TAG.is_match(&text)) {
        let meta = metadata_block(&text);
        if HAS_RDF.is_match(&text) {
            let start = RDF_START.find(&text).map(|m| m.end()).unwrap_or(0);
            text.insert_str(start, &format!("\n<Alignment>{meta}"));
            match text.rfind("</rdf:RDF>") {
                Some(end) => text.insert_str(end, "</Alignment>\n"),
                None => text.push_str("</Alignment>\n</rdf:RDF>\n"),
            }
        } else {
            let body = XML_DECL.replace(&text, "").into_owned();
            text = format!(
                "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<rdf:RDF{}>\n<Alignment>{meta}{}\n</Alignment>\n</rdf:RDF>\n",
                namespace_declarations(),
                body.trim()
            );
        }
        push(fixes, FixKind::MissingOntologyTag, "added the missing Alignment element");
    }

    let present: Vec<String> = ONTO_TAG.captures_iter(&text).map(|c| c[2].to_string()).collect();
    let missing: Vec<&str> = ["onto1", "onto2"].into_iter().filter(|t| !present.iter().any(|p| p == t)).collect();
    if !missing.is_empty() {
        if let Some(m) = ALIGNMENT_START.find(&text) {
            let mut insert = String::new();
            for tag in &missing {
                let side = if *tag == "onto1" { "entity1" } else { "entity2" };
                let about = infer_namespace(&text, side).unwrap_or_default();
                let _ = write!(
                    insert,
                    "\n<{tag}><Ontology rdf:about=\"{}\"/></{tag}>",
                    super::xml_write::escape(about.trim_end_matches(['#', '/']))
                );
                push(fixes, FixKind::MissingOntologyTag, format!("added <{tag}>"));
            }
            text.insert_str(m.end(), &insert);
        }
    }
    text
}

/// Closes unclosed elements and drops stray closing tags.
fn balance_tags(text: &str, fixes: &mut Vec<Fix>) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len() + 64);
    let mut stack: Vec<String> = Vec::new();
    let mut changed = false;
    let mut i = 0;
    let mut last = 0;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &text[i..];
        let skip_to = |pat: &str| rest.find(pat).map(|p| i + p + pat.len()).unwrap_or(bytes.len());
        if rest.starts_with("<?") {
            i = skip_to("?>");
            continue;
        }
        if rest.starts_with("<!--") {
            i = skip_to("-->");
            continue;
        }
        if rest.starts_with("<![CDATA[") {
            i = skip_to("]]>");
            continue;
        }
        if rest.starts_with("<!") {
            let bracket = rest.find('[');
            let close = rest.find('>');
            i = match (bracket, close) {
                (Some(b), Some(c)) if b < c => skip_to("]>"),
                _ => skip_to(">"),
            };
            continue;
        }
        let closing = rest.starts_with("</");
        let name_start = if closing { 2 } else { 1 };
        let name: String = rest[name_start..]
            .chars()
            .take_while(|c| c.is_alphanumeric() || matches!(c, ':' | '_' | '-' | '.'))
            .collect();
        if name.is_empty() || !name.starts_with(|c: char| c.is_alphabetic() || c == '_') {
            i += 1;
            continue;
        }
        let Some(end) = tag_end(rest) else {
            // truncated inside a tag: drop the fragment
            out.push_str(&text[last..i]);
            last = bytes.len();
            changed = true;
            break;
        };
        let self_closing = rest[..end].ends_with('/');
        let tag_stop = i + end + 1;
        if closing {
            if stack.last() == Some(&name) {
                stack.pop();
            } else if let Some(pos) = stack.iter().rposition(|n| n == &name) {
                out.push_str(&text[last..i]);
                for open in stack.drain(pos + 1..).rev() {
                    let _ = write!(out, "</{open}>");
                }
                stack.pop();
                last = i;
                changed = true;
            } else {
                out.push_str(&text[last..i]);
                last = tag_stop;
                changed = true;
            }
        } else if !self_closing {
            stack.push(name);
        }
        i = tag_stop;
    }
    out.push_str(&text[last.min(text.len())..]);
    if !stack.is_empty() {
        if !out.ends_with('\n') {
            out.push('\n');
        }
        for open in stack.iter().rev() {
            let _ = writeln!(out, "</{open}>");
        }
        changed = true;
    }
    if changed {
        push(fixes, FixKind::MissingOntologyTag, "balanced unclosed or stray tags");
        out
    } else {
        text.to_string()
    }
}

/// Index of the `>` ending the tag that starts at `s[0]`, honouring quotes.
fn tag_end(s: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices().skip(1) {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'') => quote = Some(c),
            (None, '>') => return Some(i),
            (None, '<') => return None,
            _ => {}
        }
    }
    None
}

const COMPARATORS: &[&str] = &["equals", "lower-than", "greater-than"];

fn base_for(text: &str, onto: &str, side: &str) -> String {
    let declared = ONTO_ABOUT
        .captures_iter(text)
        .find(|c| &c[1] == onto)
        .map(|c| c[2].trim().to_string())
        .filter(|v| Iri::new(v.as_str()).is_ok());
    let base =
        declared.or_else(|| infer_namespace(text, side)).unwrap_or_else(|| format!("http://example.org/{onto}#"));
    if base.ends_with('#') || base.ends_with('/') {
        base
    } else {
        format!("{base}#")
    }
}

fn qualify_entities(text: String, fixes: &mut Vec<Fix>) -> String {
    let base1 = base_for(&text, "onto1", "entity1");
    let base2 = base_for(&text, "onto2", "entity2");
    let declared: BTreeMap<String, String> =
        super::validate::KNOWN_PREFIXES.iter().map(|(p, u)| (p.to_string(), u.to_string())).collect();
    let mut changed: Vec<String> = Vec::new();
    let out = ENTITY_BLOCK.replace_all(&text, |block: &Captures| {
        let base = if &block[1] == "entity1" { &base1 } else { &base2 };
        let inner = ABOUT_ATTR.replace_all(&block[3], |attr: &Captures| {
            let value = attr[2].trim();
            let compact = super::validate::is_compact_iri(value);
            if value.is_empty() || (Iri::new(value).is_ok() && !compact) || super::is_mask(value) {
                return attr[0].to_string();
            }
            let fixed = if attr[1] == *"rdf:resource" && COMPARATORS.contains(&value) {
                format!("{}{}", ns::EDOAL, value)
            } else if let Some((p, local)) = value.split_once(':').filter(|(p, _)| declared.contains_key(*p)) {
                format!("{}{}", declared[p], local)
            } else {
                let value = if compact { value.split_once(':').map_or(value, |(_, l)| l) } else { value };
                let local: String = value
                    .trim_start_matches([':', '#', '/'])
                    .chars()
                    .map(|c| if c.is_whitespace() { '_' } else { c })
                    .collect();
                format!("{base}{local}")
            };
            if Iri::new(fixed.as_str()).is_err() {
                return attr[0].to_string();
            }
            changed.push(value.to_string());
            format!("{}=\"{}\"", &attr[1], super::xml_write::escape(&fixed))
        });
        format!("<{}{}>{}</{}>", &block[1], block.get(2).map_or("", |m| m.as_str()), inner, &block[4])
    });
    let mut out = out.into_owned();
    // placeholder ontology ids written as bare names
    let onto_fix: Vec<(String, String)> = ONTO_ABOUT
        .captures_iter(&out)
        .filter_map(|c| {
            let v = c[2].trim().to_string();
            (!v.is_empty() && Iri::new(v.as_str()).is_err() && !v.contains(char::is_whitespace))
                .then(|| (v.clone(), format!("http://example.org/{}", v.trim_start_matches([':', '#', '/']))))
        })
        .collect();
    for (from, to) in onto_fix {
        out = out.replace(&format!("rdf:about=\"{from}\""), &format!("rdf:about=\"{to}\""));
        changed.push(from);
    }
    if !changed.is_empty() {
        push(fixes, FixKind::UnprefixedEntity, format!("qualified {}", changed.join(", ")));
    }
    out
}

static MEASURE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)<(measure|align:measure)(\s[^>]*)?>(.*?)</(measure|align:measure)>").unwrap());

fn fix_literals(text: String, fixes: &mut Vec<Fix>) -> String {
    let escaped = escape_markup(&text);
    if escaped != text {
        push(fixes, FixKind::InvalidLiteral, "escaped or quoted literal content");
    }
    let out = MEASURE.replace_all(&escaped, |c: &Captures| {
        let raw = c[3].trim();
        match raw.parse::<f64>() {
            Ok(m) if (0.0..=1.0).contains(&m) => c[0].to_string(),
            parsed => {
                let value = match parsed {
                    Ok(m) if m.is_finite() => m.clamp(0.0, 1.0),
                    _ => 1.0,
                };
                format!("<{}{}>{:?}</{}>", &c[1], c.get(2).map_or("", |m| m.as_str()), value, &c[4])
            }
        }
    });
    let out = out.into_owned();
    if out != escaped {
        push(fixes, FixKind::InvalidLiteral, "replaced an invalid measure");
    }
    out
}

fn is_reference_at(s: &str) -> bool {
    // s starts just after '&'
    let end = match s.find(';') {
        Some(e) if e > 0 && e < 32 => e,
        _ => return false,
    };
    let body = &s[..end];
    if let Some(num) = body.strip_prefix('#') {
        return match num.strip_prefix('x') {
            Some(hex) => !hex.is_empty() && hex.chars().all(|c| c.is_ascii_hexdigit()),
            None => !num.is_empty() && num.chars().all(|c| c.is_ascii_digit()),
        };
    }
    body.starts_with(|c: char| c.is_alphabetic() || c == '_')
        && body.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Escapes bare `&` and `<` in text and attribute values and quotes
/// unquoted attribute values. Comments, CDATA, declarations and DTDs pass through.
fn escape_markup(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();
        if c == '&' {
            out.push_str(if is_reference_at(&rest[1..]) { "&" } else { "&amp;" });
            i += 1;
            continue;
        }
        if c != '<' {
            out.push(c);
            i += c.len_utf8();
            continue;
        }
        let passthrough =
            [("<?", "?>"), ("<!--", "-->"), ("<![CDATA[", "]]>")].into_iter().find(|(open, _)| rest.starts_with(open));
        if let Some((_, close)) = passthrough {
            let end = rest.find(close).map(|p| p + close.len()).unwrap_or(rest.len());
            out.push_str(&rest[..end]);
            i += end;
            continue;
        }
        if rest.starts_with("<!") {
            let end = match (rest.find('['), rest.find('>')) {
                (Some(b), Some(e)) if b < e => rest.find("]>").map(|p| p + 2).unwrap_or(rest.len()),
                (_, Some(e)) => e + 1,
                _ => rest.len(),
            };
            out.push_str(&rest[..end]);
            i += end;
            continue;
        }
        let next = rest[1..].chars().next();
        let starts_tag = matches!(next, Some(n) if n.is_alphabetic() || n == '_' || n == '/');
        if !starts_tag {
            out.push_str("&lt;");
            i += 1;
            continue;
        }
        let consumed = copy_tag(rest, &mut out);
        i += consumed;
    }
    out
}

/// Copies one tag, fixing attribute values; returns the bytes consumed.
fn copy_tag(s: &str, out: &mut String) -> usize {
    let mut chars = s.char_indices().peekable();
    // '<' and the name
    while let Some(&(i, c)) = chars.peek() {
        if i > 0 && (c.is_whitespace() || c == '>' || c == '/') {
            break;
        }
        out.push(c);
        chars.next();
    }
    loop {
        let Some(&(i, c)) = chars.peek() else { return s.len() };
        match c {
            '>' => {
                out.push('>');
                return i + 1;
            }
            '=' => {
                out.push('=');
                chars.next();
                while let Some(&(_, w)) = chars.peek() {
                    if !w.is_whitespace() {
                        break;
                    }
                    chars.next();
                }
                match chars.peek().copied() {
                    Some((_, q @ ('"' | '\''))) => {
                        chars.next();
                        out.push(q);
                        let mut closed = false;
                        for (_, v) in chars.by_ref() {
                            if v == q {
                                out.push(q);
                                closed = true;
                                break;
                            }
                            match v {
                                '<' => out.push_str("&lt;"),
                                '&' => out.push('\u{0}'),
                                v => out.push(v),
                            }
                        }
                        fix_amp_placeholders(out);
                        if !closed {
                            out.push(q);
                            return s.len();
                        }
                    }
                    Some(_) => {
                        out.push('"');
                        while let Some(&(_, v)) = chars.peek() {
                            if v.is_whitespace() || v == '>' || (v == '/' && is_self_close_at(&chars)) {
                                break;
                            }
                            match v {
                                '"' => out.push_str("&quot;"),
                                '<' => out.push_str("&lt;"),
                                '&' => out.push_str("&amp;"),
                                v => out.push(v),
                            }
                            chars.next();
                        }
                        out.push('"');
                    }
                    None => return s.len(),
                }
            }
            c => {
                out.push(c);
                chars.next();
            }
        }
    }
}

fn is_self_close_at(chars: &std::iter::Peekable<std::str::CharIndices>) -> bool {
    let mut probe = chars.clone();
    probe.next();
    matches!(probe.peek(), Some(&(_, '>')))
}

/// Resolves the `\0` markers left for `&` inside a quoted value.
fn fix_amp_placeholders(out: &mut String) {
    if !out.contains('\u{0}') {
        return;
    }
    let mut fixed = String::with_capacity(out.len());
    let mut rest = out.as_str();
    while let Some(p) = rest.find('\u{0}') {
        fixed.push_str(&rest[..p]);
        let after = &rest[p + 1..];
        fixed.push_str(if is_reference_at(after) { "&" } else { "&amp;" });
        rest = after;
    }
    fixed.push_str(rest);
    *out = fixed;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edoal::{parse_alignment, serialize_alignment, Alignment, Correspondence, EdoalExpression, Relation};

    fn sample() -> String {
        let c = |s: &str| EdoalExpression::ClassId(Iri::new(format!("http://a.org/onto#{s}")).unwrap());
        let d = |s: &str| EdoalExpression::ClassId(Iri::new(format!("http://b.org/onto#{s}")).unwrap());
        let mut a =
            Alignment::new(Some(Iri::new("http://a.org/onto").unwrap()), Some(Iri::new("http://b.org/onto").unwrap()));
        a.cells.push(Correspondence::new(
            c("AcceptedPaper"),
            EdoalExpression::And(vec![d("Paper"), d("Acceptance")]),
            Relation::Equivalence,
        ));
        serialize_alignment(&a)
    }

    #[test]
    fn valid_input_unchanged() {
        let xml = sample();
        let (out, report) = repair(&xml);
        assert_eq!(out, xml);
        assert!(report.fixes.is_empty());
        assert!(report.valid_after);
    }

    #[test]
    fn missing_prefix() {
        let broken = sample().replace(&format!("\n         xmlns:edoal=\"{}\"", ns::EDOAL), "");
        assert!(parse_alignment(&broken).is_err());
        let (out, report) = repair(&broken);
        assert!(report.valid_after, "{out}");
        assert!(report.has(FixKind::MissingPrefix));
        assert_eq!(parse_alignment(&out).unwrap().cells.len(), 1);
    }

    #[test]
    fn trailing_eos() {
        let (out, report) = repair(&(sample() + "<|endoftext|>"));
        assert!(report.valid_after);
        assert!(report.has(FixKind::EosToken));
        assert!(!out.contains("endoftext"));
    }

    #[test]
    fn bare_cells_get_wrapped() {
        let xml = sample();
        let start = xml.find("<map>").unwrap();
        let end = xml.rfind("</map>").unwrap() + 6;
        let cells = xml[start..end].replace("<map>", "").replace("</map>", "");
        let broken = format!("Sure! Here it is:\n{cells}\n</s>");
        let (out, report) = repair(&broken);
        assert!(report.valid_after, "{out}\n{:?}\n{:?}", report, validate(&out));
        let parsed = parse_alignment(&out).unwrap();
        assert_eq!(parsed.cells.len(), 1);
        assert_eq!(parsed.onto1.as_ref().map(|i| i.as_str()), Some("http://a.org/onto"));
    }

    #[test]
    fn unprefixed_entities_get_base() {
        let broken = sample().replace("http://a.org/onto#AcceptedPaper", "AcceptedPaper");
        let (out, report) = repair(&broken);
        assert!(report.valid_after);
        assert!(report.has(FixKind::UnprefixedEntity));
        assert!(out.contains("http://a.org/onto#AcceptedPaper"));
    }

    #[test]
    fn invalid_literals() {
        let broken = sample().replace(">1.0</measure>", ">very high</measure>");
        let (out, report) = repair(&broken);
        assert!(report.valid_after, "{out}");
        assert!(report.has(FixKind::InvalidLiteral));

        let amp = sample().replace("http://b.org/onto#Paper", "http://b.org/onto#Paper&Co");
        let (out, report) = repair(&amp);
        assert!(report.valid_after, "{out}");
        assert!(out.contains("Paper&amp;Co"));
    }

    #[test]
    fn truncated_document() {
        let xml = sample();
        let cut = xml.find("</Alignment>").unwrap();
        let (out, report) = repair(&xml[..cut]);
        assert!(report.valid_after, "{out}");
        assert!(report.has(FixKind::MissingOntologyTag));
    }

    #[test]
    fn garbage_is_unrepairable() {
        let (_, report) = repair("I could not find any correspondences, sorry.");
        assert!(!report.valid_after);
    }

    #[test]
    fn repair_is_idempotent_on_samples() {
        let xml = sample();
        let damaged = [
            xml.replace("xmlns:rdf", "xmlns:rdfx"),
            xml.replace("<onto2>", "").replace("</onto2>", ""),
            format!("```xml\n{xml}```"),
            xml.replace("rdf:about=\"http://b.org/onto#Acceptance\"", "rdf:about=Acceptance"),
        ];
        for d in damaged {
            let (once, _) = repair(&d);
            let (twice, _) = repair(&once);
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn empty_alignment_round_trips() {
        let xml = serialize_alignment(&Alignment::default());
        assert!(repair(&xml).1.valid_after);
    }
}
