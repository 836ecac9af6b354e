use super::expr::EdoalExpression;
use super::expr::EdoalExpression as E;

/// Canonical form: nested and/or of the same operator are flattened, operands
/// sorted by canonical text and deduplicated, single-operand and/or collapse,
/// double negation and double inversion cancel. Composition order is kept.
pub fn normalize(e: &EdoalExpression) -> EdoalExpression {
    match e {
        E::ClassId(_) | E::PropertyId(_) | E::RelationId(_) | E::InstanceId(_) => e.clone(),
        E::And(items) => nary(items, true),
        E::Or(items) => nary(items, false),
        E::Not(inner) => match normalize(inner) {
            E::Not(x) => *x,
            x => E::Not(Box::new(x)),
        },
        E::Inverse(inner) => match normalize(inner) {
            E::Inverse(x) => *x,
            x => E::Inverse(Box::new(x)),
        },
        E::Compose(items) => E::Compose(items.iter().map(normalize).collect()),
        E::AttributeDomainRestriction { on_attribute, class } => E::AttributeDomainRestriction {
            on_attribute: Box::new(normalize(on_attribute)),
            class: Box::new(normalize(class)),
        },
        E::AttributeTypeRestriction { on_attribute, datatype } => {
            E::AttributeTypeRestriction { on_attribute: Box::new(normalize(on_attribute)), datatype: datatype.clone() }
        }
        E::AttributeValueRestriction { on_attribute, comparator, value } => E::AttributeValueRestriction {
            on_attribute: Box::new(normalize(on_attribute)),
            comparator: comparator.clone(),
            value: value.clone(),
        },
        E::AttributeOccurenceRestriction { on_attribute, comparator, cardinality } => {
            E::AttributeOccurenceRestriction {
                on_attribute: Box::new(normalize(on_attribute)),
                comparator: comparator.clone(),
                cardinality: *cardinality,
            }
        }
    }
}

fn nary(items: &[EdoalExpression], is_and: bool) -> EdoalExpression {
    let mut flat = Vec::with_capacity(items.len());
    for item in items.iter().map(normalize) {
        match item {
            E::And(inner) if is_and => flat.extend(inner),
            E::Or(inner) if !is_and => flat.extend(inner),
            other => flat.push(other),
        }
    }
    let mut keyed: Vec<(String, EdoalExpression)> = flat.into_iter().map(|e| (e.to_string(), e)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let mut operands: Vec<EdoalExpression> = keyed.into_iter().map(|(_, e)| e).collect();
    if operands.len() == 1 {
        return operands.pop().unwrap();
    }
    if is_and {
        E::And(operands)
    } else {
        E::Or(operands)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Iri;

    fn c(s: &str) -> EdoalExpression {
        E::ClassId(Iri::new(format!("http://e/{s}")).unwrap())
    }
    fn r(s: &str) -> EdoalExpression {
        E::RelationId(Iri::new(format!("http://e/{s}")).unwrap())
    }

    #[test]
    fn sorts_and_operands() {
        assert_eq!(normalize(&E::And(vec![c("B"), c("A")])), E::And(vec![c("A"), c("B")]));
    }

    #[test]
    fn double_negation() {
        assert_eq!(normalize(&E::Not(Box::new(E::Not(Box::new(c("X")))))), c("X"));
        assert_eq!(normalize(&E::Inverse(Box::new(E::Inverse(Box::new(r("x")))))), r("x"));
    }

    #[test]
    fn dedupe_collapses() {
        assert_eq!(normalize(&E::And(vec![c("A"), c("A")])), c("A"));
    }

    #[test]
    fn compose_order_kept() {
        let e = E::Compose(vec![r("b"), r("a")]);
        assert_eq!(normalize(&e), e);
    }

    #[test]
    fn flattens_nested() {
        let e = E::Or(vec![c("C"), E::Or(vec![c("B"), c("A")])]);
        assert_eq!(normalize(&e), E::Or(vec![c("A"), c("B"), c("C")]));
    }
}
