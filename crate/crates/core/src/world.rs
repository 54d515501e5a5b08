//! World triples to frame instances, and sameAs entity merging.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::NodeId;
use crate::model::{
    Datatype, Edge, Entity, FrameInstance, InstanceProvenance, Literal, RelationType, SourceRef,
    Value,
};
use crate::store::Store;
use crate::tsv::records;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "datatype")]
pub enum ObjectKind {
    Entity,
    Literal(Datatype),
}

impl ObjectKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "entity" => Some(ObjectKind::Entity),
            _ => s
                .strip_prefix("literal:")
                .and_then(parse_datatype)
                .map(ObjectKind::Literal),
        }
    }
}

/// `decimal`, `xsd:decimal` or the full XSD IRI.
fn parse_datatype(s: &str) -> Option<Datatype> {
    let s = s.trim().trim_start_matches('<').trim_end_matches('>');
    Datatype::from_iri(s)
        .or_else(|| s.strip_prefix("xsd:").and_then(|l| l.parse().ok()))
        .or_else(|| s.parse().ok())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MappingRule {
    pub predicate: String,
    pub frame: NodeId,
    pub subject_element: NodeId,
    pub object_element: NodeId,
    pub object_kind: ObjectKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuleSet {
    pub rules: BTreeMap<String, MappingRule>,
    pub warnings: Vec<String>,
}

impl RuleSet {
    pub fn get(&self, predicate: &str) -> Option<&MappingRule> {
        self.rules.get(predicate)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Validates rules against the schema; a repeated predicate keeps the last
/// rule.
pub fn load_rules(store: &Store, text: &str) -> Result<RuleSet> {
    let mut set = RuleSet::default();
    for rec in records(text) {
        rec.expect_len(5, 5)?;
        let predicate = rec.field(0, "predicate")?;
        let frame_name = rec.field(1, "frame")?;
        let record = rec.fields.join("\t");
        let unresolved = |field, name: &str| Error::UnresolvedName {
            record: record.clone(),
            field,
            name: name.to_string(),
        };
        let frame = store
            .frame_by_name(frame_name)
            .filter(|f| !f.is_elementless())
            .ok_or_else(|| unresolved("frame", frame_name))?;
        let subject = rec.field(2, "subject element")?;
        let object = rec.field(3, "object element")?;
        let subject_element = frame
            .element(subject)
            .ok_or_else(|| unresolved("subjectElement", subject))?
            .id
            .clone();
        let object_element = frame
            .element(object)
            .ok_or_else(|| unresolved("objectElement", object))?
            .id
            .clone();
        if subject_element == object_element {
            return Err(Error::parse(rec.line, "subject and object element are the same"));
        }
        let kind = rec.field(4, "object kind")?;
        let object_kind = ObjectKind::parse(kind)
            .ok_or_else(|| Error::parse(rec.line, format!("unknown object kind `{kind}`")))?;
        let rule = MappingRule {
            predicate: predicate.to_string(),
            frame: frame.id.clone(),
            subject_element,
            object_element,
            object_kind,
        };
        if set.rules.insert(predicate.to_string(), rule).is_some() {
            set.warnings.push(format!(
                "line {}: second rule for `{predicate}` replaces the first",
                rec.line
            ));
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedTriple {
    pub line: usize,
    pub code: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WorldIngestReport {
    pub triples: usize,
    pub fis_created: usize,
    pub entities_created: usize,
    /// Entity lookups answered by an entity that already existed.
    pub entities_reused: usize,
    pub skipped_no_rule: usize,
    /// Triples whose object does not fit the rule; nothing is stored.
    pub skipped_invalid: Vec<SkippedTriple>,
    pub warnings: Vec<String>,
}

enum Object<'a> {
    Entity {
        id: &'a str,
        label: &'a str,
        type_key: Option<&'a str>,
    },
    Literal(Literal),
}

/// Creates one frame instance per triple with a rule. Datatype mismatches
/// skip the triple and are listed in the report.
pub fn ingest_world(store: &mut Store, rules: &RuleSet, text: &str) -> Result<WorldIngestReport> {
    store.ensure_building()?;
    let mut report = WorldIngestReport::default();
    for rec in records(text) {
        rec.expect_len(7, 8)?;
        report.triples += 1;
        let source = rec.field(0, "source")?;
        let subject_id = rec.field(1, "subject id")?;
        let subject_label = rec.get(2).unwrap_or("").trim();
        let predicate = rec.field(3, "predicate")?;
        let kind = rec.field(4, "object kind")?;
        let object_raw = rec.get(5).unwrap_or("");
        if kind != "entity" && kind != "literal" {
            return Err(Error::parse(rec.line, format!("unknown object kind `{kind}`")));
        }
        if kind == "entity" && object_raw.trim().is_empty() {
            return Err(Error::parse(rec.line, "missing object id"));
        }
        let Some(rule) = rules.get(predicate) else {
            report.skipped_no_rule += 1;
            continue;
        };
        let mut skip = |reason: String| {
            report.skipped_invalid.push(SkippedTriple {
                line: rec.line,
                code: "DatatypeError",
                reason,
            });
        };
        let object = match (kind, rule.object_kind) {
            ("entity", ObjectKind::Entity) => Object::Entity {
                id: object_raw.trim(),
                label: rec.get(6).unwrap_or("").trim(),
                type_key: rec.get(7).map(str::trim).filter(|k| !k.is_empty()),
            },
            ("literal", ObjectKind::Literal(expected)) => {
                let declared = rec.get(6).unwrap_or("").trim();
                match parse_datatype(declared) {
                    Some(dt) if dt == expected => match Literal::new(object_raw, dt) {
                        Ok(lit) => Object::Literal(lit),
                        Err(e) => {
                            skip(e.to_string());
                            continue;
                        }
                    },
                    _ => {
                        skip(format!(
                            "rule for `{predicate}` expects {}, triple declares `{declared}`",
                            expected.as_str()
                        ));
                        continue;
                    }
                }
            }
            _ => {
                skip(format!("rule for `{predicate}` expects a different object kind"));
                continue;
            }
        };

        let subject = resolve_entity(store, source, subject_id, subject_label, &mut report)?;
        let value = match object {
            Object::Literal(lit) => Value::Literal(lit),
            Object::Entity { id, label, type_key } => {
                let en = resolve_entity(store, source, id, label, &mut report)?;
                match type_key {
                    Some(key) if store.taxonomy_type(&NodeId::taxonomy(key)).is_some() => {
                        let mut entity = store.entity(&en).cloned().expect("just resolved");
                        if entity.types.insert(NodeId::taxonomy(key)) {
                            store.put_node(entity)?;
                        }
                    }
                    Some(key) => report
                        .warnings
                        .push(format!("line {}: unknown taxonomy key `{key}`", rec.line)),
                    None => report
                        .warnings
                        .push(format!("line {}: object `{id}` has no taxonomy type", rec.line)),
                }
                Value::Entity(en)
            }
        };
        let provenance = InstanceProvenance {
            source: source.to_string(),
            subject: subject_id.to_string(),
            predicate: predicate.to_string(),
            object: object_raw.to_string(),
        };
        let bindings = [
            (rule.subject_element.clone(), Value::Entity(subject)),
            (rule.object_element.clone(), value),
        ]
        .into();
        let fi = FrameInstance::new(rule.frame.clone(), bindings, provenance);
        if store.instance(&fi.id).is_none() {
            report.fis_created += 1;
        }
        store.put_node(fi)?;
    }
    Ok(report)
}

fn resolve_entity(
    store: &mut Store,
    source: &str,
    id: &str,
    label: &str,
    report: &mut WorldIngestReport,
) -> Result<NodeId> {
    let key = SourceRef::new(source, id);
    if let Some(existing) = store.entity_by_source(&key) {
        report.entities_reused += 1;
        let id = existing.id.clone();
        if !label.is_empty() && existing.labels().all(|l| l != label) {
            let mut entity = existing.clone();
            entity.alt_labels.insert(label.to_string());
            store.put_node(entity)?;
        }
        return Ok(id);
    }
    report.entities_created += 1;
    let label = if label.is_empty() { id } else { label };
    store.put_node(Entity::new(key, label))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub clusters: usize,
    pub merged: usize,
    pub warnings: Vec<String>,
}

pub fn parse_same_as(text: &str) -> Result<Vec<(usize, SourceRef, SourceRef)>> {
    let mut out = Vec::new();
    for rec in records(text) {
        rec.expect_len(4, 4)?;
        out.push((
            rec.line,
            SourceRef::new(rec.field(0, "source A")?, rec.field(1, "id A")?),
            SourceRef::new(rec.field(2, "source B")?, rec.field(3, "id B")?),
        ));
    }
    Ok(out)
}

/// Union-find over sameAs pairs. Each cluster collapses onto its smallest
/// entity id; the others become aliases linked by `sameAs` edges from the
/// survivor.
pub fn merge_entities(store: &mut Store, text: &str) -> Result<MergeReport> {
    store.ensure_building()?;
    let pairs = parse_same_as(text)?;
    let mut report = MergeReport::default();
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();

    fn find(parent: &mut BTreeMap<NodeId, NodeId>, x: &NodeId) -> NodeId {
        let mut root = x.clone();
        while let Some(p) = parent.get(&root).filter(|p| *p != &root) {
            root = p.clone();
        }
        let mut cur = x.clone();
        while cur != root {
            let next = parent.insert(cur.clone(), root.clone()).unwrap_or_else(|| root.clone());
            cur = next;
        }
        root
    }

    for (line, a, b) in pairs {
        let mut ids = Vec::with_capacity(2);
        for r in [&a, &b] {
            match store.entity_by_source(r) {
                Some(e) => ids.push(e.id.clone()),
                None => report.warnings.push(format!(
                    "line {line}: no entity for ({}, {}); pair skipped",
                    r.source, r.id
                )),
            }
        }
        if let [x, y] = ids.as_slice() {
            for id in [x, y] {
                parent.entry(id.clone()).or_insert_with(|| id.clone());
            }
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx != ry {
                // Smaller root wins, so the final root is the cluster minimum.
                let (keep, drop) = if rx < ry { (rx, ry) } else { (ry, rx) };
                parent.insert(drop, keep);
            }
        }
    }

    let members: Vec<NodeId> = parent.keys().cloned().collect();
    let mut clusters: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for id in members {
        let root = find(&mut parent, &id);
        clusters.entry(root).or_default().insert(id);
    }
    for (survivor, cluster) in clusters {
        if cluster.len() < 2 {
            continue;
        }
        report.clusters += 1;
        for retired in cluster.into_iter().filter(|id| *id != survivor) {
            store.retire_entity(&retired, &survivor)?;
            store.put_edge(
                Edge::new(RelationType::SameAs, survivor.clone(), retired).from_source("sameAs"),
            )?;
            report.merged += 1;
        }
    }
    Ok(report)
}
