//! Relaxed precision/recall for alignments, reported separately for simple
//! and complex cells.
//!
//! Cell similarity is a surrogate: zero across different relations, else the
//! mean of the per-side Jaccard overlaps of atomic IRIs. Structurally equal
//! cells (after normalization) score exactly 1. Confidence measures are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edoal::{classify_cell, normalize, parse_alignment, Alignment, CellClass, Correspondence};
use crate::rdf::Iri;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Prf { precision, recall, f1 }
    }

    pub const PERFECT: Prf = Prf { precision: 1.0, recall: 1.0, f1: 1.0 };
    pub const ZERO: Prf = Prf { precision: 0.0, recall: 0.0, f1: 0.0 };
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub ref_simple: usize,
    pub ref_complex: usize,
    pub sys_simple: usize,
    pub sys_complex: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub simple: Prf,
    pub complex: Prf,
    pub counts: EvalCounts,
}

fn jaccard(a: &BTreeSet<&Iri>, b: &BTreeSet<&Iri>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// σ(a, b) in [0, 1]; symmetric.
pub fn cell_similarity(a: &Correspondence, b: &Correspondence) -> f64 {
    if a.relation != b.relation {
        return 0.0;
    }
    if normalize(&a.entity1) == normalize(&b.entity1) && normalize(&a.entity2) == normalize(&b.entity2) {
        return 1.0;
    }
    0.5 * jaccard(&a.entity1.atoms(), &b.entity1.atoms()) + 0.5 * jaccard(&a.entity2.atoms(), &b.entity2.atoms())
}

fn best(cell: &Correspondence, pool: &[&Correspondence]) -> f64 {
    pool.iter().map(|o| cell_similarity(cell, o)).fold(0.0, f64::max)
}

fn partition_score(system: &[&Correspondence], reference: &[&Correspondence]) -> Prf {
    match (system.is_empty(), reference.is_empty()) {
        (true, true) => Prf::PERFECT,
        (_, true) | (true, _) => Prf::ZERO,
        _ => {
            let p = system.iter().map(|c| best(c, reference)).sum::<f64>() / system.len() as f64;
            let r = reference.iter().map(|c| best(c, system)).sum::<f64>() / reference.len() as f64;
            Prf::new(p, r)
        }
    }
}

fn split(a: &Alignment) -> (Vec<&Correspondence>, Vec<&Correspondence>) {
    a.cells.iter().partition(|c| classify_cell(c) == CellClass::Simple)
}

pub fn score(system: &Alignment, reference: &Alignment) -> EvalReport {
    let (ss, sc) = split(system);
    let (rs, rc) = split(reference);
    EvalReport {
        simple: partition_score(&ss, &rs),
        complex: partition_score(&sc, &rc),
        counts: EvalCounts { ref_simple: rs.len(), ref_complex: rc.len(), sys_simple: ss.len(), sys_complex: sc.len() },
    }
}

pub const COLUMNS: [&str; 6] = ["s-p", "s-r", "s-f", "c-p", "c-r", "c-f"];

fn row(r: &EvalReport) -> [f64; 6] {
    [r.simple.precision, r.simple.recall, r.simple.f1, r.complex.precision, r.complex.recall, r.complex.f1]
}

/// Fixed-width table with one row per dataset and a trailing average row.
pub fn report_table(reports: &BTreeMap<String, EvalReport>) -> String {
    let width = reports.keys().map(|k| k.chars().count()).chain([7]).max().unwrap_or(7);
    let mut out = format!("{:<width$}", "dataset");
    for c in COLUMNS {
        out.push_str(&format!("  {c:>5}"));
    }
    out.push('\n');
    let mut sums = [0.0; 6];
    for (name, r) in reports {
        out.push_str(&format!("{name:<width$}"));
        for (i, v) in row(r).into_iter().enumerate() {
            sums[i] += v;
            out.push_str(&format!("  {v:>5.2}"));
        }
        out.push('\n');
    }
    if !reports.is_empty() {
        out.push_str(&format!("{:<width$}", "average"));
        for s in sums {
            out.push_str(&format!("  {:>5.2}", s / reports.len() as f64));
        }
        out.push('\n');
    }
    out
}

pub fn reports_to_json(reports: &BTreeMap<String, EvalReport>) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize") + "\n"
}

pub fn reports_from_json(text: &str) -> Result<BTreeMap<String, EvalReport>, serde_json::Error> {
    serde_json::from_str(text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub system: PathBuf,
    pub reference: PathBuf,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Reads a JSON manifest `{dataset: {system, reference}}`; relative paths
/// resolve against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<BTreeMap<String, ManifestEntry>, EvalError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| EvalError::Read { path: path.into(), message: e.to_string() })?;
    let mut m: BTreeMap<String, ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| EvalError::Parse { path: path.into(), message: e.to_string() })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for e in m.values_mut() {
        for p in [&mut e.system, &mut e.reference] {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(m)
}

fn read_alignment(path: &Path) -> Result<Alignment, EvalError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| EvalError::Read { path: path.into(), message: e.to_string() })?;
    parse_alignment(&text).map_err(|e| EvalError::Parse { path: path.into(), message: e.to_string() })
}

pub fn evaluate_manifest(
    manifest: &BTreeMap<String, ManifestEntry>,
) -> Result<BTreeMap<String, EvalReport>, EvalError> {
    manifest
        .iter()
        .map(|(name, e)| Ok((name.clone(), score(&read_alignment(&e.system)?, &read_alignment(&e.reference)?))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edoal::{EdoalExpression, Relation};

    fn class(s: &str) -> EdoalExpression {
        EdoalExpression::ClassId(Iri::new(format!("http://x/{s}")).unwrap())
    }

    fn cell(a: EdoalExpression, b: EdoalExpression) -> Correspondence {
        Correspondence::new(a, b, Relation::Equivalence)
    }

    fn align(cells: Vec<Correspondence>) -> Alignment {
        Alignment { cells, ..Alignment::default() }
    }

    #[test]
    fn similarity_examples() {
        let ab = cell(class("A"), class("B"));
        assert_eq!(cell_similarity(&ab, &ab), 1.0);
        assert_eq!(cell_similarity(&ab, &cell(class("A"), class("C"))), 0.5);
        let and = cell(class("A"), EdoalExpression::And(vec![class("B"), class("C")]));
        assert!((cell_similarity(&and, &ab) - 0.75).abs() < 1e-12);
        let mut sub = ab.clone();
        sub.relation = Relation::SubsumedBy;
        assert_eq!(cell_similarity(&ab, &sub), 0.0);
    }

    #[test]
    fn partition_examples() {
        let ab = cell(class("A"), class("B"));
        let cde = cell(class("C"), EdoalExpression::And(vec![class("D"), class("E")]));
        let r = score(&align(vec![ab.clone()]), &align(vec![ab.clone(), cde]));
        assert_eq!(r.simple, Prf::PERFECT);
        assert_eq!(r.complex, Prf::ZERO);
        assert_eq!(r.counts, EvalCounts { ref_simple: 1, ref_complex: 1, sys_simple: 1, sys_complex: 0 });

        let three = align(vec![ab.clone(), cell(class("X"), class("Y")), cell(class("P"), class("Q"))]);
        let empty = score(&align(vec![]), &three);
        assert_eq!(empty.simple, Prf::ZERO);
        let both = score(&align(vec![]), &align(vec![]));
        assert_eq!((both.simple, both.complex), (Prf::PERFECT, Prf::PERFECT));
    }

    #[test]
    fn f1_is_harmonic_mean() {
        let p = Prf::new(0.5, 1.0);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(Prf::new(0.0, 0.0).f1, 0.0);
    }

    #[test]
    fn table_shape() {
        assert_eq!(report_table(&BTreeMap::new()).lines().count(), 1);
        let ab = align(vec![cell(class("A"), class("B"))]);
        let mut m = BTreeMap::new();
        m.insert("toy".to_string(), score(&ab, &ab));
        let t = report_table(&m);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split_whitespace().skip(1).collect::<Vec<_>>(), COLUMNS);
        assert!(lines[1].split_whitespace().skip(1).all(|v| v == "1.00"));
        assert_eq!(report_table(&reports_from_json(&reports_to_json(&m)).unwrap()), t);
    }
}
