use std::collections::BTreeMap;

use super::alignment::{sort_cells, Alignment, CellKey, Correspondence};
use super::normalize::normalize;
use super::AlignmentError;
use crate::rdf::Iri;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MergeStats {
    pub input_cells: usize,
    pub duplicates_removed: usize,
}

pub fn merge(partials: &[Alignment]) -> Result<Alignment, AlignmentError> {
    merge_with_stats(partials).map(|(a, _)| a)
}

/// Unions the cells of all partials. Cells with equal normalized
/// (entity1, entity2, relation) collapse to one carrying the maximum measure.
pub fn merge_with_stats(partials: &[Alignment]) -> Result<(Alignment, MergeStats), AlignmentError> {
    let onto1 = agree(partials.iter().map(|a| &a.onto1), "onto1")?;
    let onto2 = agree(partials.iter().map(|a| &a.onto2), "onto2")?;
    let mut out = Alignment::new(onto1, onto2);
    if let Some(first) = partials.first() {
        out.level = first.level.clone();
    }
    let mut cells: BTreeMap<CellKey, Correspondence> = BTreeMap::new();
    let mut stats = MergeStats::default();
    for a in partials {
        for (k, v) in &a.prefixes {
            out.prefixes.entry(k.clone()).or_insert_with(|| v.clone());
        }
        for cell in &a.cells {
            stats.input_cells += 1;
            let normalized = Correspondence {
                entity1: normalize(&cell.entity1),
                entity2: normalize(&cell.entity2),
                relation: cell.relation,
                measure: cell.measure,
            };
            match cells.entry(normalized.key()) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(normalized);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    stats.duplicates_removed += 1;
                    if normalized.measure > e.get().measure {
                        e.get_mut().measure = normalized.measure;
                    }
                }
            }
        }
    }
    out.cells = cells.into_values().collect();
    sort_cells(&mut out.cells);
    Ok((out, stats))
}

fn agree<'a>(values: impl Iterator<Item = &'a Option<Iri>>, tag: &str) -> Result<Option<Iri>, AlignmentError> {
    let mut found: Option<&Iri> = None;
    for v in values.flatten() {
        match found {
            Some(f) if f != v => return Err(AlignmentError::Conflict(format!("{tag}: {f} vs {v}"))),
            _ => found = Some(v),
        }
    }
    Ok(found.cloned())
}
