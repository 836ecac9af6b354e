use std::collections::BTreeSet;
use std::fmt;

use crate::rdf::Iri;

/// What an expression denotes. And/Or/Not take the kind of their operands;
/// a composition takes the kind of its last step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExprKind {
    Class,
    Property,
    Relation,
    Instance,
}

impl ExprKind {
    pub fn element_name(self) -> &'static str {
        match self {
            ExprKind::Class => "Class",
            ExprKind::Property => "Property",
            ExprKind::Relation => "Relation",
            ExprKind::Instance => "Instance",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RestrictionValue {
    Literal { lexical: String, datatype: Option<Iri> },
    Instance(Iri),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdoalExpression {
    ClassId(Iri),
    PropertyId(Iri),
    RelationId(Iri),
    InstanceId(Iri),
    And(Vec<EdoalExpression>),
    Or(Vec<EdoalExpression>),
    Not(Box<EdoalExpression>),
    Compose(Vec<EdoalExpression>),
    Inverse(Box<EdoalExpression>),
    AttributeDomainRestriction { on_attribute: Box<EdoalExpression>, class: Box<EdoalExpression> },
    AttributeTypeRestriction { on_attribute: Box<EdoalExpression>, datatype: Iri },
    AttributeValueRestriction { on_attribute: Box<EdoalExpression>, comparator: Iri, value: RestrictionValue },
    AttributeOccurenceRestriction { on_attribute: Box<EdoalExpression>, comparator: Iri, cardinality: u32 },
}

use EdoalExpression as E;

impl EdoalExpression {
    pub fn is_atomic(&self) -> bool {
        matches!(self, E::ClassId(_) | E::PropertyId(_) | E::RelationId(_) | E::InstanceId(_))
    }

    /// Kind of the expression, or `None` when operands disagree.
    pub fn kind(&self) -> Option<ExprKind> {
        match self {
            E::ClassId(_) => Some(ExprKind::Class),
            E::PropertyId(_) => Some(ExprKind::Property),
            E::RelationId(_) => Some(ExprKind::Relation),
            E::InstanceId(_) => Some(ExprKind::Instance),
            E::And(items) | E::Or(items) => {
                let first = items.first()?.kind()?;
                items.iter().all(|e| e.kind() == Some(first)).then_some(first)
            }
            E::Not(inner) => inner.kind(),
            E::Compose(items) => items.last()?.kind(),
            E::Inverse(_) => Some(ExprKind::Relation),
            E::AttributeDomainRestriction { .. }
            | E::AttributeTypeRestriction { .. }
            | E::AttributeValueRestriction { .. }
            | E::AttributeOccurenceRestriction { .. } => Some(ExprKind::Class),
        }
    }

    pub fn children(&self) -> Vec<&EdoalExpression> {
        match self {
            E::ClassId(_) | E::PropertyId(_) | E::RelationId(_) | E::InstanceId(_) => vec![],
            E::And(items) | E::Or(items) | E::Compose(items) => items.iter().collect(),
            E::Not(inner) | E::Inverse(inner) => vec![inner],
            E::AttributeDomainRestriction { on_attribute, class } => vec![on_attribute, class],
            E::AttributeTypeRestriction { on_attribute, .. }
            | E::AttributeOccurenceRestriction { on_attribute, .. } => vec![on_attribute],
            E::AttributeValueRestriction { on_attribute, .. } => vec![on_attribute],
        }
    }

    /// Tree depth; an atomic id has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Entity IRIs at the leaves, including instance values of value restrictions.
    pub fn atoms(&self) -> BTreeSet<&Iri> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a Iri>) {
        match self {
            E::ClassId(i) | E::PropertyId(i) | E::RelationId(i) | E::InstanceId(i) => {
                out.insert(i);
            }
            E::AttributeValueRestriction { on_attribute, value, .. } => {
                on_attribute.collect_atoms(out);
                if let RestrictionValue::Instance(i) = value {
                    out.insert(i);
                }
            }
            _ => self.children().into_iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    /// Atomic ids with their kinds, in traversal order.
    pub fn atomic_entities(&self) -> Vec<(ExprKind, &Iri)> {
        let mut out = Vec::new();
        self.visit_atomic(&mut |k, i| out.push((k, i)));
        out
    }

    fn visit_atomic<'a>(&'a self, f: &mut impl FnMut(ExprKind, &'a Iri)) {
        match self {
            E::ClassId(i) => f(ExprKind::Class, i),
            E::PropertyId(i) => f(ExprKind::Property, i),
            E::RelationId(i) => f(ExprKind::Relation, i),
            E::InstanceId(i) => f(ExprKind::Instance, i),
            E::AttributeValueRestriction { on_attribute, value, .. } => {
                on_attribute.visit_atomic(f);
                if let RestrictionValue::Instance(i) = value {
                    f(ExprKind::Instance, i);
                }
            }
            _ => self.children().into_iter().for_each(|c| c.visit_atomic(f)),
        }
    }

    /// Rewrites every entity IRI (atomic ids and instance values).
    pub fn map_entities(&self, f: &mut dyn FnMut(&Iri) -> Iri) -> EdoalExpression {
        let boxed = |e: &EdoalExpression, f: &mut dyn FnMut(&Iri) -> Iri| Box::new(e.map_entities(f));
        match self {
            E::ClassId(i) => E::ClassId(f(i)),
            E::PropertyId(i) => E::PropertyId(f(i)),
            E::RelationId(i) => E::RelationId(f(i)),
            E::InstanceId(i) => E::InstanceId(f(i)),
            E::And(items) => E::And(items.iter().map(|e| e.map_entities(f)).collect()),
            E::Or(items) => E::Or(items.iter().map(|e| e.map_entities(f)).collect()),
            E::Compose(items) => E::Compose(items.iter().map(|e| e.map_entities(f)).collect()),
            E::Not(inner) => E::Not(boxed(inner, f)),
            E::Inverse(inner) => E::Inverse(boxed(inner, f)),
            E::AttributeDomainRestriction { on_attribute, class } => {
                E::AttributeDomainRestriction { on_attribute: boxed(on_attribute, f), class: boxed(class, f) }
            }
            E::AttributeTypeRestriction { on_attribute, datatype } => {
                E::AttributeTypeRestriction { on_attribute: boxed(on_attribute, f), datatype: datatype.clone() }
            }
            E::AttributeValueRestriction { on_attribute, comparator, value } => E::AttributeValueRestriction {
                on_attribute: boxed(on_attribute, f),
                comparator: comparator.clone(),
                value: match value {
                    RestrictionValue::Instance(i) => RestrictionValue::Instance(f(i)),
                    lit => lit.clone(),
                },
            },
            E::AttributeOccurenceRestriction { on_attribute, comparator, cardinality } => {
                E::AttributeOccurenceRestriction {
                    on_attribute: boxed(on_attribute, f),
                    comparator: comparator.clone(),
                    cardinality: *cardinality,
                }
            }
        }
    }

    /// Structural problems: arity of n-ary constructors, operand kinds, and
    /// attribute positions that are not properties or relations.
    pub fn structural_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        self.check(&mut issues);
        issues
    }

    fn check(&self, issues: &mut Vec<String>) {
        match self {
            E::And(items) | E::Or(items) => {
                let op = if matches!(self, E::And(_)) { "and" } else { "or" };
                if items.len() < 2 {
                    issues.push(format!("`{op}` needs at least two operands, found {}", items.len()));
                }
                if self.kind().is_none() && !items.is_empty() {
                    issues.push(format!("`{op}` mixes operands of different kinds"));
                }
            }
            E::Compose(items) => {
                if items.len() < 2 {
                    issues.push(format!("`compose` needs at least two steps, found {}", items.len()));
                }
                let init_ok =
                    items.iter().take(items.len().saturating_sub(1)).all(|e| e.kind() == Some(ExprKind::Relation));
                let last_ok =
                    matches!(items.last().and_then(|e| e.kind()), Some(ExprKind::Relation | ExprKind::Property));
                if !init_ok || !last_ok {
                    issues.push("`compose` steps must be relations, optionally ending in a property".to_string());
                }
            }
            E::Not(inner) => {
                if matches!(inner.kind(), Some(ExprKind::Instance)) {
                    issues.push("`not` cannot negate an instance".to_string());
                }
            }
            E::Inverse(inner) => {
                if inner.kind() != Some(ExprKind::Relation) {
                    issues.push("`inverse` applies to relations only".to_string());
                }
            }
            E::AttributeDomainRestriction { on_attribute, class } => {
                if on_attribute.kind() != Some(ExprKind::Relation) {
                    issues.push("domain restriction must be on a relation".to_string());
                }
                if class.kind() != Some(ExprKind::Class) {
                    issues.push("domain restriction class must be a class expression".to_string());
                }
            }
            E::AttributeTypeRestriction { on_attribute, .. }
            | E::AttributeValueRestriction { on_attribute, .. }
            | E::AttributeOccurenceRestriction { on_attribute, .. }
                if !matches!(on_attribute.kind(), Some(ExprKind::Property | ExprKind::Relation)) => {
                    issues.push("restriction attribute must be a property or relation".to_string());
                }
            _ => {}
        }
        for child in self.children() {
            child.check(issues);
        }
    }
}

/// Compact functional notation, used as the canonical sort and dedup key.
impl fmt::Display for EdoalExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, name: &str, items: &[EdoalExpression]) -> fmt::Result {
            write!(f, "{name}(")?;
            for (i, e) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str(")")
        }
        match self {
            E::ClassId(i) => write!(f, "C<{i}>"),
            E::PropertyId(i) => write!(f, "P<{i}>"),
            E::RelationId(i) => write!(f, "R<{i}>"),
            E::InstanceId(i) => write!(f, "I<{i}>"),
            E::And(items) => list(f, "and", items),
            E::Or(items) => list(f, "or", items),
            E::Compose(items) => list(f, "compose", items),
            E::Not(inner) => write!(f, "not({inner})"),
            E::Inverse(inner) => write!(f, "inverse({inner})"),
            E::AttributeDomainRestriction { on_attribute, class } => write!(f, "domain({on_attribute},{class})"),
            E::AttributeTypeRestriction { on_attribute, datatype } => write!(f, "type({on_attribute},<{datatype}>)"),
            E::AttributeValueRestriction { on_attribute, comparator, value } => {
                write!(f, "value({on_attribute},<{comparator}>,")?;
                match value {
                    RestrictionValue::Instance(i) => write!(f, "I<{i}>)"),
                    RestrictionValue::Literal { lexical, datatype: Some(dt) } => write!(f, "{lexical:?}^^<{dt}>)"),
                    RestrictionValue::Literal { lexical, datatype: None } => write!(f, "{lexical:?})"),
                }
            }
            E::AttributeOccurenceRestriction { on_attribute, comparator, cardinality } => {
                write!(f, "occurrence({on_attribute},<{comparator}>,{cardinality})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> EdoalExpression {
        E::ClassId(Iri::new(format!("http://e/{s}")).unwrap())
    }
    fn r(s: &str) -> EdoalExpression {
        E::RelationId(Iri::new(format!("http://e/{s}")).unwrap())
    }
    fn p(s: &str) -> EdoalExpression {
        E::PropertyId(Iri::new(format!("http://e/{s}")).unwrap())
    }

    #[test]
    fn kinds() {
        assert_eq!(E::And(vec![c("A"), c("B")]).kind(), Some(ExprKind::Class));
        assert_eq!(E::And(vec![c("A"), r("B")]).kind(), None);
        assert_eq!(E::Compose(vec![r("a"), p("b")]).kind(), Some(ExprKind::Property));
        assert_eq!(E::Inverse(Box::new(r("a"))).kind(), Some(ExprKind::Relation));
    }

    #[test]
    fn structure_checks() {
        assert!(E::And(vec![c("A"), c("B")]).structural_issues().is_empty());
        assert_eq!(E::And(vec![c("A")]).structural_issues().len(), 1);
        assert!(!E::Compose(vec![p("a"), r("b")]).structural_issues().is_empty());
        let bad = E::AttributeDomainRestriction { on_attribute: Box::new(c("X")), class: Box::new(c("Y")) };
        assert!(!bad.structural_issues().is_empty());
    }

    #[test]
    fn atoms_and_depth() {
        let e = E::AttributeValueRestriction {
            on_attribute: Box::new(r("rel")),
            comparator: Iri::new("http://ns.inria.org/edoal/1.0/#equals").unwrap(),
            value: RestrictionValue::Instance(Iri::new("http://e/i").unwrap()),
        };
        assert_eq!(e.atoms().len(), 2);
        assert_eq!(e.depth(), 2);
        assert_eq!(c("A").depth(), 1);
    }
}
