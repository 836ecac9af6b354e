use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::EdoalExpression;
use super::normalize::normalize;
use crate::rdf::Iri;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Equivalence,
    Subsumes,
    SubsumedBy,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Equivalence => "=",
            Relation::Subsumes => ">",
            Relation::SubsumedBy => "<",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s.trim() {
            "=" => Some(Relation::Equivalence),
            ">" => Some(Relation::Subsumes),
            "<" => Some(Relation::SubsumedBy),
            _ => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    pub entity1: EdoalExpression,
    pub entity2: EdoalExpression,
    pub relation: Relation,
    pub measure: f64,
}

impl Correspondence {
    pub fn new(entity1: EdoalExpression, entity2: EdoalExpression, relation: Relation) -> Self {
        Correspondence { entity1, entity2, relation, measure: 1.0 }
    }

    /// Identity used for deduplication: normalized sides plus relation.
    pub fn key(&self) -> CellKey {
        CellKey {
            entity1: normalize(&self.entity1).to_string(),
            entity2: normalize(&self.entity2).to_string(),
            relation: self.relation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub entity1: String,
    pub entity2: String,
    pub relation: Relation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Simple,
    Complex,
}

pub fn classify_cell(cell: &Correspondence) -> CellClass {
    if cell.entity1.is_atomic() && cell.entity2.is_atomic() {
        CellClass::Simple
    } else {
        CellClass::Complex
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub level: String,
    /// `None` is the empty placeholder ontology.
    pub onto1: Option<Iri>,
    pub onto2: Option<Iri>,
    /// Extra namespace declarations beyond the standard alignment ones.
    pub prefixes: BTreeMap<String, String>,
    pub cells: Vec<Correspondence>,
}

impl Default for Alignment {
    fn default() -> Self {
        Alignment {
            level: "2EDOAL".to_string(),
            onto1: None,
            onto2: None,
            prefixes: BTreeMap::new(),
            cells: Vec::new(),
        }
    }
}

impl Alignment {
    pub fn new(onto1: Option<Iri>, onto2: Option<Iri>) -> Self {
        Alignment { onto1, onto2, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells in the canonical order used by the serializer.
    pub fn sorted(&self) -> Alignment {
        let mut out = self.clone();
        sort_cells(&mut out.cells);
        out
    }
}

pub(crate) fn sort_cells(cells: &mut [Correspondence]) {
    cells.sort_by(|a, b| {
        a.key()
            .cmp(&b.key())
            .then_with(|| a.entity1.to_string().cmp(&b.entity1.to_string()))
            .then_with(|| a.entity2.to_string().cmp(&b.entity2.to_string()))
            .then_with(|| a.measure.total_cmp(&b.measure))
    });
}
