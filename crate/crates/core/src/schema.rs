//! Frame schema and taxonomy loaders.
//!
//! Both formats are tab separated with `#` comments. A file is parsed and
//! checked completely before the store is touched, so a failing file leaves
//! the store unchanged.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fer::Slot;
use crate::ids::{is_name, NodeId};
use crate::model::{Coreness, Edge, Frame, LexicalUnit, Pos, RelationFamily, RelationType, SourceRef, TaxonomyType};
use crate::store::Store;
use crate::text::normalize;
use crate::tsv::records;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestReport {
    pub frames_added: usize,
    pub elements_added: usize,
    pub lus_added: usize,
    pub roles_added: usize,
    pub relations_added: usize,
    pub types_added: usize,
    pub hypernyms_added: usize,
    pub warnings: Vec<String>,
}

/// Loads `F`, `E`, `L`, `ROLE` and `R` records. `source` names the schema
/// and becomes each frame's source reference.
pub fn ingest_frames(store: &mut Store, text: &str, source: &str) -> Result<IngestReport> {
    store.ensure_building()?;
    let mut report = IngestReport::default();
    let mut frames: BTreeMap<String, Frame> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut relations: Vec<(usize, RelationType, String, String)> = Vec::new();

    for rec in records(text) {
        let tag = rec.fields[0].trim();
        match tag {
            "F" => {
                rec.expect_len(3, 4)?;
                let name = rec.field(1, "frame name")?;
                if !is_name(name) {
                    return Err(Error::parse(rec.line, format!("invalid frame name `{name}`")));
                }
                let language = rec.field(2, "language")?;
                let definition = rec.get(3).unwrap_or("").trim();
                let is_new = !frames.contains_key(name) && store.frame_by_name(name).is_none();
                if !declared.insert(name.to_string()) || !is_new {
                    report
                        .warnings
                        .push(format!("line {}: frame `{name}` redeclared; updated", rec.line));
                }
                if is_new {
                    report.frames_added += 1;
                }
                let frame = working(&mut frames, &mut order, store, name);
                frame.definition = definition.to_string();
                frame.language = language.to_string();
                frame.source_refs.insert(SourceRef::new(source, name));
            }
            "E" => {
                rec.expect_len(4, 4)?;
                let (frame_name, element) = (rec.field(1, "frame")?, rec.field(2, "element")?);
                if !is_name(element) {
                    return Err(Error::parse(rec.line, format!("invalid element name `{element}`")));
                }
                let coreness: Coreness = rec
                    .field(3, "coreness")?
                    .parse()
                    .map_err(|e: String| Error::parse(rec.line, e))?;
                let frame = existing(&mut frames, &mut order, store, frame_name, rec.line)?;
                if frame.add_element(element, coreness) {
                    report.elements_added += 1;
                } else {
                    report.warnings.push(format!(
                        "line {}: element `{frame_name}.{element}` redeclared; coreness updated",
                        rec.line
                    ));
                }
            }
            "L" => {
                rec.expect_len(4, 4)?;
                let frame_name = rec.field(1, "frame")?;
                let lemma = normalize(rec.field(2, "lemma")?);
                let pos: Pos = rec
                    .field(3, "part of speech")?
                    .parse()
                    .map_err(|e: String| Error::parse(rec.line, e))?;
                let frame = existing(&mut frames, &mut order, store, frame_name, rec.line)?;
                if frame.lexical_units.insert(LexicalUnit { lemma, pos }) {
                    report.lus_added += 1;
                }
            }
            "ROLE" => {
                rec.expect_len(4, 4)?;
                let frame_name = rec.field(1, "frame")?;
                let slot = rec.field(2, "slot")?;
                let element = rec.field(3, "element")?;
                if Slot::parse(slot).is_none() {
                    return Err(Error::parse(rec.line, format!("unknown slot `{slot}`")));
                }
                let frame = existing(&mut frames, &mut order, store, frame_name, rec.line)?;
                if frame.element(element).is_none() {
                    return Err(Error::UnresolvedName {
                        record: format!("ROLE {frame_name} {slot} {element}"),
                        field: "element",
                        name: element.to_string(),
                    });
                }
                if frame.roles.insert(slot.to_string(), element.to_string()).as_deref()
                    != Some(element)
                {
                    report.roles_added += 1;
                }
            }
            "R" => {
                rec.expect_len(4, 4)?;
                let relation: RelationType = rec
                    .field(1, "relation")?
                    .parse()
                    .map_err(|e: String| Error::parse(rec.line, e))?;
                if relation.family() != RelationFamily::Frame {
                    return Err(Error::parse(
                        rec.line,
                        format!("`{relation}` is not a frame-to-frame relation"),
                    ));
                }
                relations.push((
                    rec.line,
                    relation,
                    rec.field(2, "source frame")?.to_string(),
                    rec.field(3, "target frame")?.to_string(),
                ));
            }
            other => return Err(Error::parse(rec.line, format!("unknown record type `{other}`"))),
        }
    }

    for (_, _, from, to) in &relations {
        for name in [from, to] {
            if !frames.contains_key(name) && store.frame_by_name(name).is_none() {
                return Err(Error::MissingNode(NodeId::frame(name).to_string()));
            }
        }
    }
    for name in &order {
        store.put_node(frames[name].clone())?;
    }
    for (line, relation, from, to) in relations {
        let edge = Edge::new(relation, NodeId::frame(&from), NodeId::frame(&to)).from_source(source);
        if store.put_edge(edge)? {
            report.relations_added += 1;
        } else {
            report
                .warnings
                .push(format!("line {line}: relation {relation} {from} {to} already present"));
        }
    }
    Ok(report)
}

/// Working copy of a frame, seeded from the store or created empty.
fn working<'a>(
    frames: &'a mut BTreeMap<String, Frame>,
    order: &mut Vec<String>,
    store: &Store,
    name: &str,
) -> &'a mut Frame {
    frames.entry(name.to_string()).or_insert_with(|| {
        order.push(name.to_string());
        store
            .frame_by_name(name)
            .cloned()
            .unwrap_or_else(|| Frame::new(name, "", ""))
    })
}

/// Working copy of a frame that must already be declared.
fn existing<'a>(
    frames: &'a mut BTreeMap<String, Frame>,
    order: &mut Vec<String>,
    store: &Store,
    name: &str,
    line: usize,
) -> Result<&'a mut Frame> {
    if !frames.contains_key(name) && store.frame_by_name(name).is_none() {
        return Err(Error::parse(line, format!("frame `{name}` is not declared")));
    }
    Ok(working(frames, order, store, name))
}

/// Loads `S`, `H` and `ROOT` records. Missing sense ranks are assigned in
/// file order: one past the highest rank already given to that lemma.
pub fn ingest_taxonomy(store: &mut Store, text: &str) -> Result<IngestReport> {
    store.ensure_building()?;
    let mut report = IngestReport::default();
    let mut types: BTreeMap<String, TaxonomyType> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut in_file: BTreeMap<String, usize> = BTreeMap::new();
    let mut max_rank: BTreeMap<String, u32> = BTreeMap::new();
    for ty in store.taxonomy_types() {
        for (lemma, &rank) in &ty.lemmas {
            let e = max_rank.entry(lemma.clone()).or_default();
            *e = (*e).max(rank);
        }
    }
    let mut edges: Vec<(usize, String, String)> = Vec::new();
    let mut roots: Vec<(usize, String)> = Vec::new();

    for rec in records(text) {
        match rec.fields[0].trim() {
            "S" => {
                rec.expect_len(3, 4)?;
                let key = rec.field(1, "synset key")?;
                if !is_name(key) {
                    return Err(Error::parse(rec.line, format!("invalid synset key `{key}`")));
                }
                if in_file.insert(key.to_string(), rec.line).is_some() {
                    return Err(Error::DuplicateKey {
                        key: key.to_string(),
                        line: rec.line,
                    });
                }
                let gloss = rec.get(2).unwrap_or("").trim();
                let mut ty = match store.taxonomy_type(&NodeId::taxonomy(key)) {
                    Some(old) => {
                        report.warnings.push(format!(
                            "line {}: synset `{key}` already present; gloss and lemmas replaced",
                            rec.line
                        ));
                        let mut ty = old.clone();
                        ty.lemmas.clear();
                        ty
                    }
                    None => {
                        report.types_added += 1;
                        TaxonomyType::new(key, "")
                    }
                };
                ty.gloss = gloss.to_string();
                for item in rec.get(3).unwrap_or("").split(',') {
                    let item = item.trim();
                    if item.is_empty() {
                        continue;
                    }
                    let (lemma, rank) = match item.rsplit_once(':') {
                        Some((lemma, rank)) if rank.chars().all(|c| c.is_ascii_digit()) => {
                            let rank: u32 = rank.parse().map_err(|_| {
                                Error::parse(rec.line, format!("bad sense rank in `{item}`"))
                            })?;
                            (normalize(lemma), Some(rank))
                        }
                        _ => (normalize(item), None),
                    };
                    if lemma.is_empty() || rank == Some(0) {
                        return Err(Error::parse(rec.line, format!("bad lemma entry `{item}`")));
                    }
                    let seen = max_rank.entry(lemma.clone()).or_default();
                    let rank = rank.unwrap_or(*seen + 1);
                    *seen = (*seen).max(rank);
                    ty.lemmas.insert(lemma, rank);
                }
                types.insert(key.to_string(), ty);
                order.push(key.to_string());
            }
            "H" => {
                rec.expect_len(3, 3)?;
                edges.push((
                    rec.line,
                    rec.field(1, "child key")?.to_string(),
                    rec.field(2, "parent key")?.to_string(),
                ));
            }
            "ROOT" => {
                rec.expect_len(2, 2)?;
                roots.push((rec.line, rec.field(1, "root key")?.to_string()));
            }
            other => return Err(Error::parse(rec.line, format!("unknown record type `{other}`"))),
        }
    }

    let mut fetch = |key: &str, line: usize| -> Result<()> {
        if !types.contains_key(key) {
            let ty = store
                .taxonomy_type(&NodeId::taxonomy(key))
                .cloned()
                .ok_or_else(|| Error::parse(line, format!("unknown synset key `{key}`")))?;
            types.insert(key.to_string(), ty);
            order.push(key.to_string());
        }
        Ok(())
    };
    for (line, child, parent) in &edges {
        fetch(child, *line)?;
        fetch(parent, *line)?;
    }
    for (line, key) in &roots {
        fetch(key, *line)?;
    }
    for (_, child, parent) in edges {
        let ty = types.get_mut(&child).expect("fetched");
        if ty.hypernyms.insert(NodeId::taxonomy(&parent)) {
            report.hypernyms_added += 1;
        }
    }
    for (_, key) in roots {
        types.get_mut(&key).expect("fetched").root = true;
    }
    for key in &order {
        store.put_node(types[key].clone())?;
    }
    Ok(report)
}

/// Frames declaring `(lemma, pos)`, sorted by name.
pub fn lookup_lexical_unit<'s>(store: &'s Store, lemma: &str, pos: Pos) -> Vec<&'s Frame> {
    store.lookup_lexical_unit(lemma, pos)
}
