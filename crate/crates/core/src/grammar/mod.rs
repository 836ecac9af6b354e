//! Seeded random derivation of masked EDOAL templates from a built-in grammar.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edoal::{ns, serialize_alignment, Alignment, Correspondence, EdoalExpression, Relation, RestrictionValue};
use crate::rdf::Iri;

use EdoalExpression as E;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Nonterminal {
    Cell,
    ClassExpr,
    PropertyExpr,
    RelationExpr,
    InstanceExpr,
    RelationSym,
    Datatype,
    Comparator,
    Literal,
    Cardinality,
}

impl Nonterminal {
    pub const ALL: [Nonterminal; 10] = [
        Nonterminal::Cell,
        Nonterminal::ClassExpr,
        Nonterminal::PropertyExpr,
        Nonterminal::RelationExpr,
        Nonterminal::InstanceExpr,
        Nonterminal::RelationSym,
        Nonterminal::Datatype,
        Nonterminal::Comparator,
        Nonterminal::Literal,
        Nonterminal::Cardinality,
    ];

    /// Nonterminals that expand into expression trees and so consume depth.
    fn is_expression(self) -> bool {
        matches!(
            self,
            Nonterminal::ClassExpr | Nonterminal::PropertyExpr | Nonterminal::RelationExpr | Nonterminal::InstanceExpr
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Symbol {
    N(Nonterminal),
    T(String),
    Mask,
}

/// What a rule builds; derivation dispatches on this.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Production {
    Cell,
    Mask,
    And,
    Or,
    Not,
    Compose,
    Inverse,
    DomainRestriction,
    TypeRestriction,
    ValueLiteral,
    ValueInstance,
    Occurrence,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductionRule {
    pub name: String,
    pub lhs: Nonterminal,
    pub rhs: Vec<Symbol>,
    pub production: Production,
    pub weight: f64,
}

impl ProductionRule {
    /// True when the rhs holds no expression nonterminal, so firing it ends recursion.
    pub fn is_terminal(&self) -> bool {
        !self.rhs.iter().any(|s| matches!(s, Symbol::N(n) if n.is_expression()))
    }
}

impl fmt::Display for ProductionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ->", self.lhs)?;
        for s in &self.rhs {
            match s {
                Symbol::N(n) => write!(f, " {n:?}")?,
                Symbol::T(t) => write!(f, " '{t}'")?,
                Symbol::Mask => write!(f, " MASK")?,
            }
        }
        Ok(())
    }
}

fn rule(name: &str, lhs: Nonterminal, rhs: Vec<Symbol>, production: Production) -> ProductionRule {
    ProductionRule { name: name.to_string(), lhs, rhs, production, weight: 1.0 }
}

const DATATYPES: &[&str] = &["string", "integer", "boolean", "date", "double"];
const COMPARATORS: &[&str] = &["equals", "lower-than", "greater-than"];
const LITERALS: &[(&str, &str)] =
    &[("true", "boolean"), ("1", "integer"), ("2020-01-01", "date"), ("example", "string")];
const CARDINALITIES: &[u32] = &[0, 1, 2];

/// The built-in rule set, transcribed from the EDOAL grammar restricted to
/// the supported expression variants. Weights are uniform.
pub fn load_grammar() -> Vec<ProductionRule> {
    use Nonterminal::*;
    use Production as P;
    use Symbol::{Mask, N, T};
    let mut rules = vec![
        rule("cell.class", Cell, vec![N(ClassExpr), N(RelationSym), N(ClassExpr)], P::Cell),
        rule("cell.property", Cell, vec![N(PropertyExpr), N(RelationSym), N(PropertyExpr)], P::Cell),
        rule("cell.relation", Cell, vec![N(RelationExpr), N(RelationSym), N(RelationExpr)], P::Cell),
        rule("class.id", ClassExpr, vec![Mask], P::Mask),
        rule("class.and", ClassExpr, vec![T("and".into()), N(ClassExpr), N(ClassExpr)], P::And),
        rule("class.or", ClassExpr, vec![T("or".into()), N(ClassExpr), N(ClassExpr)], P::Or),
        rule("class.not", ClassExpr, vec![T("not".into()), N(ClassExpr)], P::Not),
        rule(
            "class.domain",
            ClassExpr,
            vec![T("AttributeDomainRestriction".into()), N(RelationExpr), N(ClassExpr)],
            P::DomainRestriction,
        ),
        rule(
            "class.type",
            ClassExpr,
            vec![T("AttributeTypeRestriction".into()), N(PropertyExpr), N(Datatype)],
            P::TypeRestriction,
        ),
        rule(
            "class.value-literal",
            ClassExpr,
            vec![T("AttributeValueRestriction".into()), N(PropertyExpr), N(Comparator), N(Literal)],
            P::ValueLiteral,
        ),
        rule(
            "class.value-instance",
            ClassExpr,
            vec![T("AttributeValueRestriction".into()), N(RelationExpr), N(Comparator), N(InstanceExpr)],
            P::ValueInstance,
        ),
        rule(
            "class.occurrence-property",
            ClassExpr,
            vec![T("AttributeOccurenceRestriction".into()), N(PropertyExpr), N(Comparator), N(Cardinality)],
            P::Occurrence,
        ),
        rule(
            "class.occurrence-relation",
            ClassExpr,
            vec![T("AttributeOccurenceRestriction".into()), N(RelationExpr), N(Comparator), N(Cardinality)],
            P::Occurrence,
        ),
        rule("property.id", PropertyExpr, vec![Mask], P::Mask),
        rule("property.and", PropertyExpr, vec![T("and".into()), N(PropertyExpr), N(PropertyExpr)], P::And),
        rule("property.or", PropertyExpr, vec![T("or".into()), N(PropertyExpr), N(PropertyExpr)], P::Or),
        rule("property.not", PropertyExpr, vec![T("not".into()), N(PropertyExpr)], P::Not),
        rule("property.compose", PropertyExpr, vec![T("compose".into()), N(RelationExpr), N(PropertyExpr)], P::Compose),
        rule("relation.id", RelationExpr, vec![Mask], P::Mask),
        rule("relation.and", RelationExpr, vec![T("and".into()), N(RelationExpr), N(RelationExpr)], P::And),
        rule("relation.or", RelationExpr, vec![T("or".into()), N(RelationExpr), N(RelationExpr)], P::Or),
        rule("relation.not", RelationExpr, vec![T("not".into()), N(RelationExpr)], P::Not),
        rule("relation.compose", RelationExpr, vec![T("compose".into()), N(RelationExpr), N(RelationExpr)], P::Compose),
        rule("relation.inverse", RelationExpr, vec![T("inverse".into()), N(RelationExpr)], P::Inverse),
        rule("instance.id", InstanceExpr, vec![Mask], P::Mask),
    ];
    for sym in ["=", "<", ">"] {
        rules.push(rule(&format!("relation-symbol.{sym}"), RelationSym, vec![T(sym.into())], P::Terminal));
    }
    for dt in DATATYPES {
        rules.push(rule(&format!("datatype.{dt}"), Datatype, vec![T(format!("{}{dt}", ns::XSD))], P::Terminal));
    }
    for cmp in COMPARATORS {
        rules.push(rule(&format!("comparator.{cmp}"), Comparator, vec![T(format!("{}{cmp}", ns::EDOAL))], P::Terminal));
    }
    for (lex, dt) in LITERALS {
        rules.push(rule(
            &format!("literal.{dt}"),
            Literal,
            vec![T(lex.to_string()), T(format!("{}{dt}", ns::XSD))],
            P::Terminal,
        ));
    }
    for n in CARDINALITIES {
        rules.push(rule(&format!("cardinality.{n}"), Cardinality, vec![T(n.to_string())], P::Terminal));
    }
    rules
}

/// Nonterminals used on some rhs without any rule defining them.
pub fn undefined_nonterminals(rules: &[ProductionRule]) -> BTreeSet<Nonterminal> {
    let defined: BTreeSet<Nonterminal> = rules.iter().map(|r| r.lhs).collect();
    rules
        .iter()
        .flat_map(|r| r.rhs.iter())
        .filter_map(|s| match s {
            Symbol::N(n) if !defined.contains(n) => Some(*n),
            _ => None,
        })
        .collect()
}

/// Nonterminals that cannot derive a finite terminal string (least fixpoint).
pub fn unproductive_nonterminals(rules: &[ProductionRule]) -> BTreeSet<Nonterminal> {
    let mut productive: BTreeSet<Nonterminal> = BTreeSet::new();
    loop {
        let before = productive.len();
        for r in rules {
            let ok = r.rhs.iter().all(|s| match s {
                Symbol::N(n) => productive.contains(n),
                _ => true,
            });
            if ok {
                productive.insert(r.lhs);
            }
        }
        if productive.len() == before {
            break;
        }
    }
    let used: BTreeSet<Nonterminal> = rules.iter().map(|r| r.lhs).collect();
    used.difference(&productive).copied().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentTemplate {
    /// Alignment whose entity IRIs are `MASK_i` placeholders.
    pub skeleton: Alignment,
    pub slot_count: usize,
    pub seed: u64,
    pub max_depth: usize,
}

impl AlignmentTemplate {
    pub fn mask_name(slot: usize) -> String {
        format!("MASK_{slot}")
    }

    /// Slot number of a placeholder IRI, if it is one.
    pub fn slot_of(iri: &Iri) -> Option<usize> {
        iri.as_str().strip_prefix("MASK_").and_then(|n| n.parse().ok())
    }

    /// Replaces every placeholder with `fill(slot)`.
    pub fn substitute(&self, mut fill: impl FnMut(usize) -> Iri) -> Alignment {
        let mut f = |iri: &Iri| match Self::slot_of(iri) {
            Some(slot) => fill(slot),
            None => iri.clone(),
        };
        let mut out = self.skeleton.clone();
        for cell in &mut out.cells {
            cell.entity1 = cell.entity1.map_entities(&mut f);
            cell.entity2 = cell.entity2.map_entities(&mut f);
        }
        out
    }

    /// Alignment-format XML with literal placeholders.
    pub fn to_xml(&self) -> String {
        serialize_alignment(&self.skeleton)
    }
}

/// Grammar plus derivation settings.
#[derive(Clone, Debug)]
pub struct Deriver {
    rules: Vec<ProductionRule>,
}

impl Default for Deriver {
    fn default() -> Self {
        Deriver { rules: load_grammar() }
    }
}

impl Deriver {
    pub fn new(rules: Vec<ProductionRule>) -> Self {
        Deriver { rules }
    }

    pub fn rules(&self) -> &[ProductionRule] {
        &self.rules
    }

    /// Sets the weight of every rule whose name starts with `prefix`.
    pub fn set_weight(&mut self, prefix: &str, weight: f64) {
        for r in self.rules.iter_mut().filter(|r| r.name.starts_with(prefix)) {
            r.weight = weight.max(0.0);
        }
    }

    pub fn derive(&self, seed: u64, max_depth: usize, cells: usize) -> AlignmentTemplate {
        self.derive_traced(seed, max_depth, cells).0
    }

    /// Derivation plus the index of every rule fired, in firing order.
    pub fn derive_traced(&self, seed: u64, max_depth: usize, cells: usize) -> (AlignmentTemplate, Vec<usize>) {
        let mut d =
            Derivation { rules: &self.rules, rng: ChaCha8Rng::seed_from_u64(seed), max_depth, slots: 0, fired: vec![] };
        let mut skeleton = Alignment::default();
        for _ in 0..cells.max(1) {
            skeleton.cells.push(d.cell());
        }
        let template = AlignmentTemplate { skeleton, slot_count: d.slots, seed, max_depth };
        (template, d.fired)
    }
}

/// Cell count drawn uniformly from 1..=5 for a seed.
pub fn default_cell_count(seed: u64) -> usize {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15).random_range(1..=5)
}

pub fn derive_template(seed: u64, max_depth: usize, cells: usize) -> AlignmentTemplate {
    Deriver::default().derive(seed, max_depth, cells)
}

struct Derivation<'a> {
    rules: &'a [ProductionRule],
    rng: ChaCha8Rng,
    max_depth: usize,
    slots: usize,
    fired: Vec<usize>,
}

impl Derivation<'_> {
    fn choose(&mut self, lhs: Nonterminal, capped: bool) -> usize {
        let eligible: Vec<usize> = (0..self.rules.len())
            .filter(|&i| self.rules[i].lhs == lhs && (!capped || self.rules[i].is_terminal()))
            .collect();
        let total: f64 = eligible.iter().map(|&i| self.rules[i].weight).sum();
        let pick = if total > 0.0 {
            let mut x = self.rng.random::<f64>() * total;
            *eligible
                .iter()
                .find(|&&i| {
                    x -= self.rules[i].weight;
                    x < 0.0
                })
                .unwrap_or(eligible.last().expect("grammar defines every nonterminal"))
        } else {
            eligible[self.rng.random_range(0..eligible.len())]
        };
        self.fired.push(pick);
        pick
    }

    fn mask(&mut self) -> Iri {
        self.slots += 1;
        Iri::new_unchecked(AlignmentTemplate::mask_name(self.slots))
    }

    fn terminal(&mut self, lhs: Nonterminal) -> Vec<String> {
        let i = self.choose(lhs, false);
        self.rules[i]
            .rhs
            .iter()
            .filter_map(|s| match s {
                Symbol::T(t) => Some(t.clone()),
                _ => None,
            })
            .collect()
    }

    fn cell(&mut self) -> Correspondence {
        let i = self.choose(Nonterminal::Cell, false);
        let side = match self.rules[i].rhs[0] {
            Symbol::N(n) => n,
            _ => Nonterminal::ClassExpr,
        };
        let entity1 = self.expr(side, 0);
        let relation =
            Relation::from_symbol(&self.terminal(Nonterminal::RelationSym)[0]).unwrap_or(Relation::Equivalence);
        let entity2 = self.expr(side, 0);
        Correspondence::new(entity1, entity2, relation)
    }

    fn expr(&mut self, lhs: Nonterminal, depth: usize) -> EdoalExpression {
        let i = self.choose(lhs, depth >= self.max_depth);
        let rule = &self.rules[i];
        let production = rule.production;
        let subs: Vec<Nonterminal> = rule
            .rhs
            .iter()
            .filter_map(|s| match s {
                Symbol::N(n) => Some(*n),
                _ => None,
            })
            .collect();
        let sub = |d: &mut Self, k: usize| d.expr(subs[k], depth + 1);
        let iri = |s: &str| Iri::new(s).expect("grammar terminals are valid IRIs");
        match production {
            Production::Mask => {
                let m = self.mask();
                match lhs {
                    Nonterminal::ClassExpr => E::ClassId(m),
                    Nonterminal::PropertyExpr => E::PropertyId(m),
                    Nonterminal::RelationExpr => E::RelationId(m),
                    _ => E::InstanceId(m),
                }
            }
            Production::And => E::And(vec![sub(self, 0), sub(self, 1)]),
            Production::Or => E::Or(vec![sub(self, 0), sub(self, 1)]),
            Production::Compose => E::Compose(vec![sub(self, 0), sub(self, 1)]),
            Production::Not => E::Not(Box::new(sub(self, 0))),
            Production::Inverse => E::Inverse(Box::new(sub(self, 0))),
            Production::DomainRestriction => {
                let on_attribute = Box::new(sub(self, 0));
                E::AttributeDomainRestriction { on_attribute, class: Box::new(sub(self, 1)) }
            }
            Production::TypeRestriction => {
                let on_attribute = Box::new(sub(self, 0));
                let datatype = iri(&self.terminal(Nonterminal::Datatype)[0]);
                E::AttributeTypeRestriction { on_attribute, datatype }
            }
            Production::ValueLiteral => {
                let on_attribute = Box::new(sub(self, 0));
                let comparator = iri(&self.terminal(Nonterminal::Comparator)[0]);
                let lit = self.terminal(Nonterminal::Literal);
                let value = RestrictionValue::Literal { lexical: lit[0].clone(), datatype: Some(iri(&lit[1])) };
                E::AttributeValueRestriction { on_attribute, comparator, value }
            }
            Production::ValueInstance => {
                let on_attribute = Box::new(sub(self, 0));
                let comparator = iri(&self.terminal(Nonterminal::Comparator)[0]);
                // InstanceExpr has only the mask rule; fire it for the trace
                self.choose(Nonterminal::InstanceExpr, true);
                let value = RestrictionValue::Instance(self.mask());
                E::AttributeValueRestriction { on_attribute, comparator, value }
            }
            Production::Occurrence => {
                let on_attribute = Box::new(sub(self, 0));
                let comparator = iri(&self.terminal(Nonterminal::Comparator)[0]);
                let cardinality = self.terminal(Nonterminal::Cardinality)[0].parse().unwrap_or(0);
                E::AttributeOccurenceRestriction { on_attribute, comparator, cardinality }
            }
            Production::Cell | Production::Terminal => unreachable!("not an expression rule"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Entity1,
    Entity2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotPosition {
    pub slot: usize,
    pub cell: usize,
    pub side: Side,
    /// Child indices from the side's root expression to the leaf.
    pub path: Vec<usize>,
}

/// One record per placeholder, ordered by slot number.
pub fn slot_positions(t: &AlignmentTemplate) -> Vec<SlotPosition> {
    fn walk(e: &EdoalExpression, path: &mut Vec<usize>, out: &mut Vec<(usize, Vec<usize>)>) {
        match e {
            E::ClassId(i) | E::PropertyId(i) | E::RelationId(i) | E::InstanceId(i) => {
                if let Some(slot) = AlignmentTemplate::slot_of(i) {
                    out.push((slot, path.clone()));
                }
            }
            _ => {
                let children = e.children();
                for (k, c) in children.iter().enumerate() {
                    path.push(k);
                    walk(c, path, out);
                    path.pop();
                }
                if let E::AttributeValueRestriction { value: RestrictionValue::Instance(i), .. } = e {
                    if let Some(slot) = AlignmentTemplate::slot_of(i) {
                        path.push(children.len());
                        out.push((slot, path.clone()));
                        path.pop();
                    }
                }
            }
        }
    }
    let mut records = Vec::new();
    for (ci, cell) in t.skeleton.cells.iter().enumerate() {
        for (side, e) in [(Side::Entity1, &cell.entity1), (Side::Entity2, &cell.entity2)] {
            let mut found = Vec::new();
            walk(e, &mut Vec::new(), &mut found);
            records.extend(found.into_iter().map(|(slot, path)| SlotPosition { slot, cell: ci, side, path }));
        }
    }
    records.sort_by_key(|r| r.slot);
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edoal::validate;

    fn substituted_xml(t: &AlignmentTemplate) -> String {
        serialize_alignment(&t.substitute(|i| Iri::new(format!("http://x/e_{i}")).unwrap()))
    }

    #[test]
    fn class_expr_rules_cover_variants() {
        let g = load_grammar();
        let names: Vec<&str> = g.iter().filter(|r| r.lhs == Nonterminal::ClassExpr).map(|r| r.name.as_str()).collect();
        for n in ["class.id", "class.and", "class.or", "class.not", "class.domain", "class.type", "class.value-literal"]
        {
            assert!(names.contains(&n), "{n}");
        }
    }

    #[test]
    fn grammar_is_productive() {
        let g = load_grammar();
        assert!(undefined_nonterminals(&g).is_empty());
        assert!(unproductive_nonterminals(&g).is_empty());
        // Cell is the non-recursive start symbol
        for n in Nonterminal::ALL.into_iter().filter(|n| *n != Nonterminal::Cell) {
            assert!(g.iter().any(|r| r.lhs == n && r.is_terminal()), "{n:?} has no terminal rule");
        }
    }

    #[test]
    fn depth_zero_single_cell() {
        let t = derive_template(7, 0, 1);
        assert_eq!(t.skeleton.cells.len(), 1);
        assert_eq!(t.slot_count, 2);
        assert!(t.skeleton.cells[0].entity1.is_atomic() && t.skeleton.cells[0].entity2.is_atomic());
        let pos = slot_positions(&t);
        assert_eq!(pos.len(), 2);
        assert_eq!(pos[0].side, Side::Entity1);
        assert_eq!(pos[1].side, Side::Entity2);
    }

    #[test]
    fn deterministic() {
        assert_eq!(derive_template(42, 3, 4), derive_template(42, 3, 4));
        assert_eq!(derive_template(42, 3, 4).to_xml(), derive_template(42, 3, 4).to_xml());
    }

    #[test]
    fn hundred_seeds_validate() {
        for seed in 0..100 {
            let t = derive_template(seed, 3, default_cell_count(seed));
            let xml = substituted_xml(&t);
            assert_eq!(validate(&xml), vec![], "seed {seed}\n{xml}");
            assert_eq!(slot_positions(&t).len(), t.slot_count);
        }
    }

    #[test]
    fn and_of_masks_paths() {
        let mut t = derive_template(0, 0, 1);
        let m = |i: usize| E::ClassId(Iri::new_unchecked(AlignmentTemplate::mask_name(i)));
        t.skeleton.cells[0] = Correspondence::new(m(1), E::And(vec![m(2), m(3)]), Relation::Equivalence);
        t.slot_count = 3;
        let pos = slot_positions(&t);
        let e2: Vec<_> = pos.iter().filter(|p| p.side == Side::Entity2).collect();
        assert_eq!(e2.len(), 2);
        assert_ne!(e2[0].path, e2[1].path);
    }

    #[test]
    fn weights_skew_selection() {
        let mut d = Deriver::default();
        d.set_weight("class.", 0.0);
        d.set_weight("class.and", 1.0);
        d.set_weight("class.id", 1.0);
        d.set_weight("cell.", 0.0);
        d.set_weight("cell.class", 1.0);
        for seed in 0..20 {
            let (_, fired) = d.derive_traced(seed, 2, 2);
            assert!(fired.iter().all(|&i| !d.rules()[i].name.starts_with("class.")
                || matches!(d.rules()[i].name.as_str(), "class.and" | "class.id")));
        }
    }
}
