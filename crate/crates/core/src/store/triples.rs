//! Triple projection of the typed records and its SPO/POS/OSP indexes.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::Serialize;

use super::Store;
use crate::ids::NodeId;
use crate::model::{Literal, Value};
use crate::term::Term;
use crate::vocab::{self, attr, class, RDF_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Triple {
    pub subject: NodeId,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    fn new(subject: &NodeId, predicate: &str, object: Term) -> Self {
        Triple {
            subject: subject.clone(),
            predicate: predicate.to_string(),
            object,
        }
    }

    pub fn predicate_term(&self) -> Term {
        Term::iri(&self.predicate)
    }

    /// One N-Triples line without the trailing newline.
    pub fn to_line(&self) -> String {
        let mut out = String::with_capacity(128);
        Term::node(self.subject.clone()).write_ntriples(&mut out);
        out.push_str(" <");
        out.push_str(&self.predicate);
        out.push_str("> ");
        self.object.write_ntriples(&mut out);
        out.push_str(" .");
        out
    }
}

fn string(s: &str) -> Term {
    Term::string(s)
}

fn iri(s: &str) -> Term {
    Term::iri(s)
}

fn node(id: &NodeId) -> Term {
    Term::node(id.clone())
}

pub(crate) fn source_ref_literal(source: &str, id: &str) -> String {
    format!("{source}\t{id}")
}

/// Every triple emitted by the records and edges, sorted by serialized line
/// and deduplicated.
pub(super) fn project(store: &Store) -> Vec<Triple> {
    let mut out = Vec::new();
    for frame in store.frames.values() {
        let s = &frame.id;
        out.push(Triple::new(s, RDF_TYPE, iri(class::FRAME)));
        out.push(Triple::new(s, attr::DEFINITION, string(&frame.definition)));
        out.push(Triple::new(s, attr::LANGUAGE, string(&frame.language)));
        for lu in &frame.lexical_units {
            let lit = format!("{}:{}", lu.pos.as_str(), lu.lemma);
            out.push(Triple::new(s, attr::LEXICAL_UNIT, string(&lit)));
        }
        for sr in &frame.source_refs {
            let lit = source_ref_literal(&sr.source, &sr.id);
            out.push(Triple::new(s, attr::SOURCE_REF, string(&lit)));
        }
        for (position, e) in frame.elements.iter().enumerate() {
            let fe = &e.id;
            out.push(Triple::new(fe, RDF_TYPE, iri(class::ELEMENT)));
            out.push(Triple::new(fe, attr::FRAME, node(s)));
            out.push(Triple::new(fe, attr::CORENESS, string(e.coreness.as_str())));
            out.push(Triple::new(
                fe,
                attr::POSITION,
                Term::literal(&Literal::integer(position as i64)),
            ));
            for (slot, _) in frame.roles.iter().filter(|(_, name)| **name == e.name) {
                out.push(Triple::new(fe, attr::ROLE_SLOT, string(slot)));
            }
        }
    }
    for ty in store.taxonomy.values() {
        let s = &ty.id;
        out.push(Triple::new(s, RDF_TYPE, iri(class::TAXONOMY)));
        if ty.root {
            out.push(Triple::new(s, RDF_TYPE, iri(class::TAXONOMY_ROOT)));
        }
        out.push(Triple::new(s, attr::GLOSS, string(&ty.gloss)));
        for (lemma, rank) in &ty.lemmas {
            out.push(Triple::new(s, attr::LEMMA, string(&format!("{lemma}:{rank}"))));
        }
        for h in &ty.hypernyms {
            out.push(Triple::new(s, attr::HYPERNYM, node(h)));
        }
    }
    for fer in store.fers.values() {
        let s = &fer.id;
        out.push(Triple::new(s, RDF_TYPE, iri(class::FER)));
        out.push(Triple::new(s, attr::FRAME, node(&fer.frame)));
        out.push(Triple::new(s, attr::SURFACE_FORM, string(&fer.surface_form)));
        out.push(Triple::new(s, attr::LANGUAGE, string(&fer.language)));
        out.push(Triple::new(s, attr::PROVENANCE, string(fer.provenance.as_str())));
        for (element, ty) in &fer.restrictions {
            out.push(Triple::new(s, &vocab::node_iri(element), node(ty)));
        }
    }
    for fi in store.instances.values() {
        let s = &fi.id;
        out.push(Triple::new(s, RDF_TYPE, node(&fi.frame)));
        for (element, value) in &fi.bindings {
            let object = match value {
                Value::Entity(en) => node(en),
                Value::Literal(lit) => Term::literal(lit),
            };
            out.push(Triple::new(s, &vocab::node_iri(element), object));
        }
        let p = &fi.provenance;
        out.push(Triple::new(s, attr::SOURCE_NAME, string(&p.source)));
        out.push(Triple::new(s, attr::SOURCE_SUBJECT, string(&p.subject)));
        out.push(Triple::new(s, attr::SOURCE_PREDICATE, string(&p.predicate)));
        out.push(Triple::new(s, attr::SOURCE_OBJECT, string(&p.object)));
    }
    for entity in store.entities.values() {
        let s = &entity.id;
        out.push(Triple::new(s, RDF_TYPE, iri(class::ENTITY)));
        out.push(Triple::new(s, attr::LABEL, string(&entity.label)));
        for alt in &entity.alt_labels {
            out.push(Triple::new(s, attr::ALT_LABEL, string(alt)));
        }
        for ty in &entity.types {
            out.push(Triple::new(s, attr::HAS_TYPE, node(ty)));
        }
        for sr in &entity.source_refs {
            let lit = source_ref_literal(&sr.source, &sr.id);
            out.push(Triple::new(s, attr::SOURCE_REF, string(&lit)));
        }
    }
    for edge in store.edges.values() {
        out.push(Triple::new(
            &edge.from,
            &vocab::relation_iri(edge.relation),
            node(&edge.to),
        ));
    }
    let mut keyed: Vec<(String, Triple)> = out.into_iter().map(|t| (t.to_line(), t)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    keyed.into_iter().map(|(_, t)| t).collect()
}

pub type TermId = u32;

/// Dictionary-encoded triples in three sort orders. Term ids follow the
/// byte order of the terms' N-Triples form, so comparing ids compares terms.
#[derive(Debug, Default)]
pub struct TripleIndex {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    spo: Vec<[TermId; 3]>,
    pos: Vec<[TermId; 3]>,
    osp: Vec<[TermId; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    Spo,
    Pos,
    Osp,
}

impl TripleIndex {
    pub fn build(triples: &[Triple]) -> Self {
        let mut keyed: Vec<(String, Term)> = Vec::new();
        let rows: Vec<[Term; 3]> = triples
            .iter()
            .map(|t| [Term::node(t.subject.clone()), t.predicate_term(), t.object.clone()])
            .collect();
        for row in &rows {
            for term in row {
                keyed.push((term.to_ntriples(), term.clone()));
            }
        }
        keyed.sort();
        keyed.dedup_by(|a, b| a.0 == b.0);
        let terms: Vec<Term> = keyed.into_iter().map(|(_, t)| t).collect();
        let ids: HashMap<Term, TermId> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let spo: Vec<[TermId; 3]> = rows
            .iter()
            .map(|[s, p, o]| [ids[s], ids[p], ids[o]])
            .collect();
        let mut sorted_spo = spo.clone();
        sorted_spo.sort_unstable();
        let mut pos: Vec<[TermId; 3]> = spo.iter().map(|&[s, p, o]| [p, o, s]).collect();
        pos.sort_unstable();
        let mut osp: Vec<[TermId; 3]> = spo.iter().map(|&[s, p, o]| [o, s, p]).collect();
        osp.sort_unstable();
        TripleIndex {
            terms,
            ids,
            spo: sorted_spo,
            pos,
            osp,
        }
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn id_of(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn plan(s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> (Order, Vec<TermId>) {
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => (Order::Spo, vec![s, p, o]),
            (Some(s), Some(p), None) => (Order::Spo, vec![s, p]),
            (Some(s), None, Some(o)) => (Order::Osp, vec![o, s]),
            (Some(s), None, None) => (Order::Spo, vec![s]),
            (None, Some(p), Some(o)) => (Order::Pos, vec![p, o]),
            (None, Some(p), None) => (Order::Pos, vec![p]),
            (None, None, Some(o)) => (Order::Osp, vec![o]),
            (None, None, None) => (Order::Spo, vec![]),
        }
    }

    fn range(&self, order: Order, prefix: &[TermId]) -> &[[TermId; 3]] {
        let rows = match order {
            Order::Spo => &self.spo,
            Order::Pos => &self.pos,
            Order::Osp => &self.osp,
        };
        let cmp = |row: &[TermId; 3]| row[..prefix.len()].cmp(prefix);
        let lo = rows.partition_point(|r| cmp(r) == Ordering::Less);
        let hi = rows.partition_point(|r| cmp(r) != Ordering::Greater);
        &rows[lo..hi]
    }

    /// Exact number of triples matching the bound positions.
    pub fn count(&self, s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> usize {
        let (order, prefix) = Self::plan(s, p, o);
        self.range(order, &prefix).len()
    }

    /// Matching triples as `[s, p, o]`, using the index whose sort order
    /// puts the bound positions first.
    pub fn scan(
        &self,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> impl Iterator<Item = [TermId; 3]> + '_ {
        let (order, prefix) = Self::plan(s, p, o);
        self.range(order, &prefix).iter().map(move |row| match order {
            Order::Spo => *row,
            Order::Pos => [row[2], row[0], row[1]],
            Order::Osp => [row[1], row[2], row[0]],
        })
    }

    /// Rows in SPO order; used by full-scan evaluation.
    pub fn all(&self) -> &[[TermId; 3]] {
        &self.spo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, p: &str, o: Term) -> Triple {
        Triple::new(&NodeId::parse(s).unwrap(), p, o)
    }

    #[test]
    fn lookups_agree_with_filtering() {
        let triples = vec![
            t("tx:a", attr::HYPERNYM, Term::node(NodeId::taxonomy("b"))),
            t("tx:a", attr::GLOSS, Term::string("x")),
            t("tx:b", attr::GLOSS, Term::string("x")),
            t("tx:b", attr::HYPERNYM, Term::node(NodeId::taxonomy("c"))),
        ];
        let index = TripleIndex::build(&triples);
        let ids: Vec<Option<TermId>> = (0..index.terms().len() as TermId).map(Some).collect();
        let mut choices = vec![None];
        choices.extend(ids);
        for &s in &choices {
            for &p in &choices {
                for &o in &choices {
                    let mut got: Vec<_> = index.scan(s, p, o).collect();
                    got.sort();
                    let want: Vec<_> = index
                        .all()
                        .iter()
                        .copied()
                        .filter(|r| {
                            s.is_none_or(|v| r[0] == v)
                                && p.is_none_or(|v| r[1] == v)
                                && o.is_none_or(|v| r[2] == v)
                        })
                        .collect();
                    assert_eq!(got, want);
                    assert_eq!(index.count(s, p, o), want.len());
                }
            }
        }
    }

    #[test]
    fn term_ids_follow_serialization_order() {
        let triples = vec![
            t("tx:b", attr::GLOSS, Term::string("z")),
            t("tx:a", attr::GLOSS, Term::string("a")),
        ];
        let index = TripleIndex::build(&triples);
        let lines: Vec<String> = index.terms().iter().map(Term::to_ntriples).collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
    }
}
