use std::collections::{BTreeMap, HashMap};

use super::term::{BlankNode, Iri, RdfTerm, Subject, Triple};

/// Immutable, sorted, duplicate-free triple set with a prefix map.
///
/// Triples are kept sorted by (subject, predicate, object) so subject lookups
/// are a binary search; objects are indexed separately.
#[derive(Clone, Debug, Default)]
pub struct OntologyGraph {
    triples: Vec<Triple>,
    prefixes: BTreeMap<String, Iri>,
    base: Option<Iri>,
    by_object: HashMap<RdfTerm, Vec<usize>>,
}

impl PartialEq for OntologyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples && self.prefixes == other.prefixes && self.base == other.base
    }
}

impl OntologyGraph {
    pub fn new(triples: impl IntoIterator<Item = Triple>, prefixes: BTreeMap<String, Iri>, base: Option<Iri>) -> Self {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        triples.sort();
        triples.dedup();
        let mut by_object: HashMap<RdfTerm, Vec<usize>> = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            by_object.entry(t.object.clone()).or_default().push(i);
        }
        OntologyGraph { triples, prefixes, base, by_object }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn prefixes(&self) -> &BTreeMap<String, Iri> {
        &self.prefixes
    }

    pub fn base(&self) -> Option<&Iri> {
        self.base.as_ref()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.binary_search(triple).is_ok()
    }

    pub fn with_subject<'a>(&'a self, subject: &Subject) -> &'a [Triple] {
        let start = self.triples.partition_point(|t| &t.subject < subject);
        let end = start + self.triples[start..].partition_point(|t| &t.subject == subject);
        &self.triples[start..end]
    }

    pub fn with_object<'a>(&'a self, object: &RdfTerm) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_object.get(object).into_iter().flat_map(move |idx| idx.iter().map(move |&i| &self.triples[i]))
    }

    /// Objects of `(subject, predicate, ?)`.
    pub fn objects<'a>(&'a self, subject: &Iri, predicate: &'a str) -> impl Iterator<Item = &'a RdfTerm> + 'a {
        self.with_subject(&Subject::Iri(subject.clone()))
            .iter()
            .filter(move |t| t.predicate.as_str() == predicate)
            .map(|t| &t.object)
    }

    /// True when the IRI occurs anywhere: subject, predicate or object.
    pub fn mentions(&self, iri: &Iri) -> bool {
        !self.with_subject(&Subject::Iri(iri.clone())).is_empty()
            || self.by_object.contains_key(&RdfTerm::Iri(iri.clone()))
            || self.triples.iter().any(|t| &t.predicate == iri)
    }

    pub fn subjects(&self) -> impl Iterator<Item = &Subject> {
        let mut last: Option<&Subject> = None;
        self.triples.iter().filter_map(move |t| {
            if last == Some(&t.subject) {
                None
            } else {
                last = Some(&t.subject);
                Some(&t.subject)
            }
        })
    }

    pub fn extend(self, extra: impl IntoIterator<Item = Triple>) -> Self {
        let OntologyGraph { mut triples, prefixes, base, .. } = self;
        triples.extend(extra);
        OntologyGraph::new(triples, prefixes, base)
    }

    pub fn with_prefixes(self, prefixes: BTreeMap<String, Iri>) -> Self {
        OntologyGraph { prefixes, ..self }
    }

    pub fn has_blank_nodes(&self) -> bool {
        self.triples.iter().any(|t| matches!(t.subject, Subject::Blank(_)) || t.object.is_blank())
    }

    /// Relabels blank nodes so that, in sorted triple order, they first appear
    /// as `b0`, `b1`, ... . Renumbering changes the order, so this iterates to
    /// a fixed point with a bounded number of rounds.
    pub fn canonicalize_blanks(&self) -> OntologyGraph {
        if !self.has_blank_nodes() {
            return self.clone();
        }
        let mut current = self.clone();
        for _ in 0..32 {
            let mut mapping: HashMap<BlankNode, BlankNode> = HashMap::new();
            let mut next = 0u32;
            let mut visit = |b: BlankNode, mapping: &mut HashMap<BlankNode, BlankNode>| {
                mapping.entry(b).or_insert_with(|| {
                    let n = BlankNode(next);
                    next += 1;
                    n
                });
            };
            for t in &current.triples {
                if let Subject::Blank(b) = t.subject {
                    visit(b, &mut mapping);
                }
                if let RdfTerm::Blank(b) = t.object {
                    visit(b, &mut mapping);
                }
            }
            if mapping.iter().all(|(k, v)| k == v) {
                return current;
            }
            let relabel = |b: &BlankNode| mapping[b];
            let triples: Vec<Triple> = current
                .triples
                .iter()
                .map(|t| Triple {
                    subject: match &t.subject {
                        Subject::Blank(b) => Subject::Blank(relabel(b)),
                        s => s.clone(),
                    },
                    predicate: t.predicate.clone(),
                    object: match &t.object {
                        RdfTerm::Blank(b) => RdfTerm::Blank(relabel(b)),
                        o => o.clone(),
                    },
                })
                .collect();
            current = OntologyGraph::new(triples, current.prefixes.clone(), current.base.clone());
        }
        log::warn!("blank node canonicalization did not reach a fixed point");
        current
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn dedup_and_lookup() {
        let t = Triple::new(iri("http://e/A"), iri("http://e/p"), iri("http://e/B"));
        let g = OntologyGraph::new(vec![t.clone(), t.clone()], BTreeMap::new(), None);
        assert_eq!(g.len(), 1);
        assert_eq!(g.with_subject(&Subject::Iri(iri("http://e/A"))).len(), 1);
        assert_eq!(g.with_object(&RdfTerm::Iri(iri("http://e/B"))).count(), 1);
        assert!(g.mentions(&iri("http://e/p")));
        assert!(!g.mentions(&iri("http://e/C")));
    }

    #[test]
    fn canonical_blanks_are_fixed_point() {
        let p = iri("http://e/p");
        let g = OntologyGraph::new(
            vec![
                Triple::new(iri("http://e/A"), p.clone(), RdfTerm::Blank(BlankNode(7))),
                Triple::new(iri("http://e/B"), p.clone(), RdfTerm::Blank(BlankNode(3))),
                Triple::new(Subject::Blank(BlankNode(3)), p.clone(), RdfTerm::Blank(BlankNode(7))),
            ],
            BTreeMap::new(),
            None,
        );
        let c = g.canonicalize_blanks();
        assert_eq!(c.canonicalize_blanks(), c);
        assert_eq!(c.triples()[0].object, RdfTerm::Blank(BlankNode(0)));
    }
}
