//! N-Triples export of a frozen store and the strict importer that inverts it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{NodeId, NodeKind};
use crate::model::{
    element_name, Coreness, Edge, Entity, Fer, FerProvenance, Frame, FrameElement, FrameInstance,
    InstanceProvenance, LexicalUnit, Literal, Pos, RelationType, SourceRef, TaxonomyType, Value,
};
use crate::store::Store;
use crate::term::{Term, TermReader};
use crate::vocab::{self, attr, class, RDF_TYPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportStats {
    pub triple_count: usize,
    pub bytes: u64,
}

/// Streams the projection, one LF-terminated line per triple.
pub fn export_ntriples(store: &Store, sink: &mut impl Write) -> Result<ExportStats> {
    let triples = store.project_triples()?;
    let mut bytes = 0u64;
    let mut line = String::with_capacity(256);
    for t in triples {
        line.clear();
        line.push_str(&t.to_line());
        line.push('\n');
        sink.write_all(line.as_bytes())?;
        bytes += line.len() as u64;
    }
    sink.flush()?;
    Ok(ExportStats {
        triple_count: triples.len(),
        bytes,
    })
}

pub fn export_to_string(store: &Store) -> Result<String> {
    let mut buf = Vec::new();
    export_ntriples(store, &mut buf)?;
    Ok(String::from_utf8(buf).expect("export writes UTF-8"))
}

/// One parsed statement.
struct Statement {
    subject: NodeId,
    predicate: String,
    object: Term,
}

fn parse_line(line: usize, text: &str) -> Result<Option<Statement>> {
    let mut r = TermReader::new(text);
    r.skip_ws();
    if r.at_end() || r.peek() == Some('#') {
        return Ok(None);
    }
    let perr = |reason: String| Error::parse(line, reason);
    let subject = r.read_iri().map_err(perr)?;
    r.skip_ws();
    let predicate = r.read_iri().map_err(perr)?;
    r.skip_ws();
    let object = match r.peek() {
        Some('<') => Term::iri(&r.read_iri().map_err(perr)?),
        Some('"') => r.read_typed_literal().map_err(perr)?,
        _ => return Err(Error::parse(line, "object must be an IRI or a typed literal")),
    };
    r.skip_ws();
    if !r.eat('.') {
        return Err(Error::parse(line, "missing terminating `.`"));
    }
    r.skip_ws();
    if !r.at_end() {
        return Err(Error::parse(line, format!("trailing content `{}`", r.rest())));
    }
    let subject = vocab::node_id_from_iri(&subject).ok_or_else(|| Error::Vocabulary {
        line,
        term: subject.clone(),
    })?;
    Ok(Some(Statement {
        subject,
        predicate,
        object,
    }))
}

fn recon(msg: impl Into<String>) -> Error {
    Error::Reconstruction(msg.into())
}

/// Attribute triples of one subject, in file order.
#[derive(Default)]
struct Subject {
    types: Vec<(usize, Term)>,
    attrs: BTreeMap<String, Vec<(usize, Term)>>,
}

impl Subject {
    fn all(&self, predicate: &str) -> &[(usize, Term)] {
        self.attrs.get(predicate).map(Vec::as_slice).unwrap_or(&[])
    }

    fn one(&self, id: &NodeId, predicate: &str) -> Result<&Term> {
        match self.all(predicate) {
            [(_, t)] => Ok(t),
            [] => Err(recon(format!("{id}: missing <{predicate}>"))),
            _ => Err(recon(format!("{id}: <{predicate}> given more than once"))),
        }
    }

    fn string(&self, id: &NodeId, predicate: &str) -> Result<String> {
        literal_string(id, predicate, self.one(id, predicate)?)
    }

    fn strings(&self, id: &NodeId, predicate: &str) -> Result<Vec<String>> {
        self.all(predicate)
            .iter()
            .map(|(_, t)| literal_string(id, predicate, t))
            .collect()
    }

    fn nodes(&self, id: &NodeId, predicate: &str, kind: NodeKind) -> Result<Vec<NodeId>> {
        self.all(predicate)
            .iter()
            .map(|(_, t)| node_of(id, predicate, t, kind))
            .collect()
    }

    /// Rejects predicates outside `allowed`.
    fn only(&self, allowed: &[&str]) -> Result<()> {
        for (p, values) in &self.attrs {
            if !allowed.contains(&p.as_str()) {
                return Err(Error::Vocabulary {
                    line: values[0].0,
                    term: p.clone(),
                });
            }
        }
        Ok(())
    }
}

fn literal_string(id: &NodeId, predicate: &str, t: &Term) -> Result<String> {
    match t {
        Term::Literal {
            value,
            datatype: crate::model::Datatype::String,
        } => Ok(value.clone()),
        _ => Err(recon(format!("{id}: <{predicate}> needs a string literal"))),
    }
}

fn node_of(id: &NodeId, predicate: &str, t: &Term, kind: NodeKind) -> Result<NodeId> {
    match t.as_node() {
        Some(n) if n.kind() == kind => Ok(n.clone()),
        _ => Err(recon(format!("{id}: <{predicate}> needs a {} node", kind.prefix()))),
    }
}

fn source_ref(id: &NodeId, lit: &str) -> Result<SourceRef> {
    let (source, sid) = lit
        .split_once('\t')
        .ok_or_else(|| recon(format!("{id}: malformed source ref `{lit}`")))?;
    Ok(SourceRef::new(source, sid))
}

/// Node-valued predicates that are element IRIs, split from the rest.
fn element_predicates(s: &Subject) -> Vec<(NodeId, &[(usize, Term)])> {
    s.attrs
        .iter()
        .filter_map(|(p, v)| {
            vocab::node_id_from_iri(p)
                .filter(|n| n.kind() == NodeKind::Element)
                .map(|n| (n, v.as_slice()))
        })
        .collect()
}

fn expect_type(id: &NodeId, s: &Subject, iri: &str) -> Result<()> {
    let expected = Term::iri(iri);
    if s.types.iter().any(|(_, t)| *t == expected) {
        Ok(())
    } else {
        Err(recon(format!("{id}: missing rdf:type <{iri}>")))
    }
}

/// Reads a store from the N-Triples written by [`export_ntriples`] and
/// freezes it. Edge weights and provenance are not part of the export and
/// come back as their defaults.
pub fn import_ntriples(text: &str) -> Result<Store> {
    let mut subjects: BTreeMap<NodeId, Subject> = BTreeMap::new();
    let mut edges: Vec<(usize, RelationType, NodeId, NodeId)> = Vec::new();

    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let Some(st) = parse_line(line, raw.strip_suffix('\r').unwrap_or(raw))? else {
            continue;
        };
        if st.predicate == RDF_TYPE {
            let known = match &st.object {
                Term::Iri { iri } => [
                    class::FRAME,
                    class::ELEMENT,
                    class::FER,
                    class::ENTITY,
                    class::TAXONOMY,
                    class::TAXONOMY_ROOT,
                ]
                .contains(&iri.as_str()),
                Term::Node { id } => id.kind() == NodeKind::Frame,
                Term::Literal { .. } => false,
            };
            if !known {
                return Err(Error::Vocabulary {
                    line,
                    term: st.object.to_ntriples(),
                });
            }
            subjects.entry(st.subject).or_default().types.push((line, st.object));
        } else if let Some(relation) = vocab::relation_from_iri(&st.predicate) {
            let to = st.object.as_node().cloned().ok_or_else(|| Error::Vocabulary {
                line,
                term: st.object.to_ntriples(),
            })?;
            edges.push((line, relation, st.subject, to));
        } else if st.predicate.starts_with(vocab::NS)
            && (is_attr(&st.predicate)
                || vocab::node_id_from_iri(&st.predicate).is_some_and(|n| n.kind() == NodeKind::Element))
        {
            subjects
                .entry(st.subject)
                .or_default()
                .attrs
                .entry(st.predicate)
                .or_default()
                .push((line, st.object));
        } else {
            return Err(Error::Vocabulary {
                line,
                term: st.predicate,
            });
        }
    }

    let mut frames: BTreeMap<NodeId, Frame> = BTreeMap::new();
    let mut elements: Vec<(NodeId, i64, FrameElement, Vec<String>)> = Vec::new();
    let mut taxonomy = Vec::new();
    let mut fers = Vec::new();
    let mut instances = Vec::new();
    let mut entities = Vec::new();

    for (id, s) in &subjects {
        match id.kind() {
            NodeKind::Frame => {
                expect_type(id, s, class::FRAME)?;
                s.only(&[attr::DEFINITION, attr::LANGUAGE, attr::LEXICAL_UNIT, attr::SOURCE_REF])?;
                let mut frame = Frame::new(id.local(), &s.string(id, attr::DEFINITION)?, &s.string(id, attr::LANGUAGE)?);
                for lu in s.strings(id, attr::LEXICAL_UNIT)? {
                    let (pos, lemma) = lu
                        .split_once(':')
                        .ok_or_else(|| recon(format!("{id}: malformed lexical unit `{lu}`")))?;
                    let pos: Pos = pos.parse().map_err(|e: String| recon(format!("{id}: {e}")))?;
                    frame.lexical_units.insert(LexicalUnit {
                        lemma: lemma.to_string(),
                        pos,
                    });
                }
                for sr in s.strings(id, attr::SOURCE_REF)? {
                    frame.source_refs.insert(source_ref(id, &sr)?);
                }
                frames.insert(id.clone(), frame);
            }
            NodeKind::Element => {
                expect_type(id, s, class::ELEMENT)?;
                s.only(&[attr::FRAME, attr::CORENESS, attr::POSITION, attr::ROLE_SLOT])?;
                let frame = node_of(id, attr::FRAME, s.one(id, attr::FRAME)?, NodeKind::Frame)?;
                let coreness: Coreness = s
                    .string(id, attr::CORENESS)?
                    .parse()
                    .map_err(|e: String| recon(format!("{id}: {e}")))?;
                let position = match s.one(id, attr::POSITION)? {
                    Term::Literal {
                        value,
                        datatype: crate::model::Datatype::Integer,
                    } => value.parse::<i64>().map_err(|_| recon(format!("{id}: bad position")))?,
                    _ => return Err(recon(format!("{id}: position must be an integer"))),
                };
                let element = FrameElement {
                    id: id.clone(),
                    frame: frame.clone(),
                    name: element_name(id).to_string(),
                    coreness,
                };
                elements.push((frame, position, element, s.strings(id, attr::ROLE_SLOT)?));
            }
            NodeKind::Taxonomy => {
                expect_type(id, s, class::TAXONOMY)?;
                s.only(&[attr::GLOSS, attr::LEMMA, attr::HYPERNYM])?;
                let mut ty = TaxonomyType::new(id.local(), &s.string(id, attr::GLOSS)?);
                ty.root = s.types.iter().any(|(_, t)| *t == Term::iri(class::TAXONOMY_ROOT));
                for lemma in s.strings(id, attr::LEMMA)? {
                    let (word, rank) = lemma
                        .rsplit_once(':')
                        .and_then(|(w, r)| Some((w, r.parse::<u32>().ok()?)))
                        .ok_or_else(|| recon(format!("{id}: malformed lemma `{lemma}`")))?;
                    ty.lemmas.insert(word.to_string(), rank);
                }
                ty.hypernyms = s.nodes(id, attr::HYPERNYM, NodeKind::Taxonomy)?.into_iter().collect();
                taxonomy.push(ty);
            }
            NodeKind::Fer => {
                expect_type(id, s, class::FER)?;
                let restrictions = element_predicates(s);
                let mut allowed = vec![attr::FRAME, attr::SURFACE_FORM, attr::LANGUAGE, attr::PROVENANCE];
                let extra: Vec<String> = restrictions.iter().map(|(e, _)| vocab::node_iri(e)).collect();
                allowed.extend(extra.iter().map(String::as_str));
                s.only(&allowed)?;
                let mut map = BTreeMap::new();
                for (element, values) in restrictions {
                    let [(_, t)] = values else {
                        return Err(recon(format!("{id}: element `{element}` restricted twice")));
                    };
                    map.insert(element.clone(), node_of(id, "restriction", t, NodeKind::Taxonomy)?);
                }
                let provenance = match s.string(id, attr::PROVENANCE)?.as_str() {
                    "automatic" => FerProvenance::Automatic,
                    "annotated" => FerProvenance::Annotated,
                    other => return Err(recon(format!("{id}: unknown provenance `{other}`"))),
                };
                let fer = Fer {
                    id: id.clone(),
                    frame: node_of(id, attr::FRAME, s.one(id, attr::FRAME)?, NodeKind::Frame)?,
                    restrictions: map,
                    surface_form: s.string(id, attr::SURFACE_FORM)?,
                    language: s.string(id, attr::LANGUAGE)?,
                    provenance,
                };
                fers.push(fer);
            }
            NodeKind::Instance => {
                let frame = match s.types.as_slice() {
                    [(_, Term::Node { id: f })] => f.clone(),
                    _ => return Err(recon(format!("{id}: needs exactly one frame type"))),
                };
                let bindings_raw = element_predicates(s);
                let mut allowed = vec![
                    attr::SOURCE_NAME,
                    attr::SOURCE_SUBJECT,
                    attr::SOURCE_PREDICATE,
                    attr::SOURCE_OBJECT,
                ];
                let extra: Vec<String> = bindings_raw.iter().map(|(e, _)| vocab::node_iri(e)).collect();
                allowed.extend(extra.iter().map(String::as_str));
                s.only(&allowed)?;
                let mut bindings = BTreeMap::new();
                for (element, values) in bindings_raw {
                    let [(_, t)] = values else {
                        return Err(recon(format!("{id}: element `{element}` bound twice")));
                    };
                    let value = match t {
                        Term::Node { id: en } if en.kind() == NodeKind::Entity => Value::Entity(en.clone()),
                        Term::Literal { value, datatype } => Value::Literal(Literal {
                            lexical: value.clone(),
                            datatype: *datatype,
                        }),
                        _ => return Err(recon(format!("{id}: binding of `{element}` is neither entity nor literal"))),
                    };
                    bindings.insert(element, value);
                }
                let provenance = InstanceProvenance {
                    source: s.string(id, attr::SOURCE_NAME)?,
                    subject: s.string(id, attr::SOURCE_SUBJECT)?,
                    predicate: s.string(id, attr::SOURCE_PREDICATE)?,
                    object: s.string(id, attr::SOURCE_OBJECT)?,
                };
                instances.push(FrameInstance {
                    id: id.clone(),
                    frame,
                    bindings,
                    provenance,
                });
            }
            NodeKind::Entity => {
                expect_type(id, s, class::ENTITY)?;
                s.only(&[attr::LABEL, attr::ALT_LABEL, attr::HAS_TYPE, attr::SOURCE_REF])?;
                let refs = s
                    .strings(id, attr::SOURCE_REF)?
                    .iter()
                    .map(|r| source_ref(id, r))
                    .collect::<Result<BTreeSet<_>>>()?;
                entities.push(Entity {
                    id: id.clone(),
                    label: s.string(id, attr::LABEL)?,
                    alt_labels: s.strings(id, attr::ALT_LABEL)?.into_iter().collect(),
                    types: s.nodes(id, attr::HAS_TYPE, NodeKind::Taxonomy)?.into_iter().collect(),
                    source_refs: refs,
                });
            }
        }
        let type_count = s.types.len();
        let expected = match id.kind() {
            NodeKind::Taxonomy => 1 + usize::from(s.types.iter().any(|(_, t)| *t == Term::iri(class::TAXONOMY_ROOT))),
            _ => 1,
        };
        if type_count != expected {
            return Err(recon(format!("{id}: unexpected rdf:type triples")));
        }
    }

    // Elements go back into their frames in position order.
    elements.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    for (frame_id, position, element, slots) in elements {
        let frame = frames
            .get_mut(&frame_id)
            .ok_or_else(|| recon(format!("{}: frame `{frame_id}` is not declared", element.id)))?;
        if position != frame.elements.len() as i64 {
            return Err(recon(format!("{}: position {position} out of sequence", element.id)));
        }
        if element.id != NodeId::element(&frame.name, &element.name) {
            return Err(recon(format!("{}: does not belong to `{frame_id}`", element.id)));
        }
        for slot in slots {
            frame.roles.insert(slot, element.name.clone());
        }
        frame.elements.push(element);
    }

    let mut store = Store::new();
    let wrap = |e: Error| match e {
        Error::Reconstruction(_) => e,
        other => recon(other.to_string()),
    };
    for frame in frames.into_values() {
        store.put_node(frame).map_err(wrap)?;
    }
    for ty in taxonomy {
        store.put_node(ty).map_err(wrap)?;
    }
    for fer in fers {
        store.put_node(fer).map_err(wrap)?;
    }
    for entity in entities {
        store.put_node(entity).map_err(wrap)?;
    }
    for fi in instances {
        store.put_node(fi).map_err(wrap)?;
    }
    // A sameAs edge into an entity id without records is a retired alias.
    for (line, relation, from, to) in &edges {
        if *relation == RelationType::SameAs
            && to.kind() == NodeKind::Entity
            && !subjects.contains_key(to)
        {
            if store.entity(from).is_none() {
                return Err(recon(format!("line {line}: alias `{to}` has no surviving entity")));
            }
            if let Some(prev) = store.retired_into(to) {
                if prev != from {
                    return Err(recon(format!("line {line}: alias `{to}` retired twice")));
                }
            }
            store.insert_retired_alias(to.clone(), from.clone());
        }
    }
    for (line, relation, from, to) in edges {
        store
            .put_edge(Edge::new(relation, from, to))
            .map_err(|e| recon(format!("line {line}: {e}")))?;
    }
    store.freeze().map_err(wrap)?;
    Ok(store)
}

fn is_attr(predicate: &str) -> bool {
    [
        attr::DEFINITION,
        attr::LANGUAGE,
        attr::LEXICAL_UNIT,
        attr::SOURCE_REF,
        attr::FRAME,
        attr::CORENESS,
        attr::POSITION,
        attr::ROLE_SLOT,
        attr::SURFACE_FORM,
        attr::PROVENANCE,
        attr::LABEL,
        attr::ALT_LABEL,
        attr::HAS_TYPE,
        attr::GLOSS,
        attr::LEMMA,
        attr::HYPERNYM,
        attr::SOURCE_NAME,
        attr::SOURCE_SUBJECT,
        attr::SOURCE_PREDICATE,
        attr::SOURCE_OBJECT,
    ]
    .contains(&predicate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Store {
        let mut s = Store::new();
        let mut root = TaxonomyType::new("entity", "anything");
        root.root = true;
        root.lemmas.insert("entity".into(), 1);
        s.put_node(root).unwrap();
        let mut book = TaxonomyType::new("book", "a written work");
        book.lemmas.insert("book".into(), 1);
        book.hypernyms.insert(NodeId::taxonomy("entity"));
        s.put_node(book).unwrap();
        let mut frame = Frame::new("Reading", "a reader reads \"text\"\n", "en")
            .with_element("Reader", Coreness::Core)
            .with_element("Text", Coreness::Core)
            .with_lexical_unit("read", Pos::V);
        frame.roles.insert("object".into(), "Text".into());
        s.put_node(frame).unwrap();
        let mut restrictions = BTreeMap::new();
        restrictions.insert(NodeId::element("Reading", "Text"), NodeId::taxonomy("book"));
        let fer = Fer::new(NodeId::frame("Reading"), restrictions, "read book", "en", FerProvenance::Automatic);
        s.put_node(fer.clone()).unwrap();
        let mut en = Entity::new(SourceRef::new("w", "Q1"), "Tab\there \\ back");
        en.types.insert(NodeId::taxonomy("book"));
        let en_id = s.put_node(en).unwrap();
        let other = Entity::new(SourceRef::new("w", "Q2"), "dup");
        let other_id = s.put_node(other).unwrap();
        s.retire_entity(&other_id, &en_id).unwrap();
        s.put_edge(Edge::new(RelationType::SameAs, en_id.clone(), other_id)).unwrap();
        let mut b = BTreeMap::new();
        b.insert(NodeId::element("Reading", "Text"), Value::Entity(en_id));
        b.insert(NodeId::element("Reading", "Reader"), Value::Literal(Literal::integer(7)));
        let prov = InstanceProvenance {
            source: "w".into(),
            subject: "Q9".into(),
            predicate: "read".into(),
            object: "Q1".into(),
        };
        let fi = FrameInstance::new(NodeId::frame("Reading"), b, prov);
        s.put_node(fi.clone()).unwrap();
        s.put_edge(Edge::new(RelationType::Concretizes, fi.id, fer.id)).unwrap();
        s.freeze().unwrap();
        s
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let s = tiny();
        let first = export_to_string(&s).unwrap();
        let back = import_ntriples(&first).unwrap();
        assert_eq!(export_to_string(&back).unwrap(), first);
        assert_eq!(back.retired_aliases().count(), 1);
        let lines: Vec<&str> = first.lines().collect();
        assert!(lines.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn foreign_predicate_is_a_vocabulary_error() {
        let mut text = export_to_string(&tiny()).unwrap();
        text.push_str("<http://cognet.example/ns#tx/book> <http://example.org/x> \"y\"^^<http://www.w3.org/2001/XMLSchema#string> .\n");
        let n = text.lines().count();
        match import_ntriples(&text) {
            Err(Error::Vocabulary { line, .. }) => assert_eq!(line, n),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_the_line() {
        let text = "<http://cognet.example/ns#tx/book> <http://cognet.example/ns#gloss> \"x\" .\n";
        assert!(matches!(import_ntriples(text), Err(Error::Parse { line: 1, .. })));
        let text = "\n<http://cognet.example/ns#tx/book> <http://cognet.example/ns#gloss> <a b> .\n";
        assert!(matches!(import_ntriples(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_fields_fail_reconstruction() {
        let text = "<http://cognet.example/ns#tx/book> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://cognet.example/ns#TaxonomyType> .\n";
        assert!(matches!(import_ntriples(text), Err(Error::Reconstruction(_))));
    }
}
