//! Kind-specific node pages for the explorer.

use std::collections::BTreeMap;

use cogkit::model::element_name;
use cogkit::{Direction, NodeId, NodeKind, Store, Value};
use serde_json::{json, Map, Value as Json};

/// Short display label of any node id the store can resolve.
pub fn label_of(store: &Store, id: &NodeId) -> String {
    let label = match id.kind() {
        NodeKind::Frame => store.frame(id).map(|f| f.name.clone()),
        NodeKind::Element => store.element(id).map(|(_, e)| e.name.clone()),
        NodeKind::Fer => store.fer(id).map(|f| f.surface_form.clone()),
        NodeKind::Instance => store.instance(id).map(|fi| {
            let p = &fi.provenance;
            format!("{} {} {}", p.subject, p.predicate, p.object)
        }),
        NodeKind::Entity => store
            .entity(id)
            .or_else(|| store.retired_into(id).and_then(|s| store.entity(s)))
            .map(|e| e.label.clone()),
        NodeKind::Taxonomy => store.taxonomy_type(id).map(|t| t.key.clone()),
    };
    label.unwrap_or_else(|| id.to_string())
}

fn node_ref(store: &Store, id: &NodeId) -> Json {
    json!({ "id": id, "kind": id.kind(), "label": label_of(store, id) })
}

fn source_refs<'a>(refs: impl Iterator<Item = &'a cogkit::SourceRef>) -> Json {
    refs.map(|r| json!({ "source": r.source, "id": r.id })).collect()
}

/// `relation -> { outgoing: [...], incoming: [...] }`.
fn grouped_neighbors(store: &Store, id: &NodeId) -> cogkit::Result<Json> {
    let mut groups: BTreeMap<&str, (Vec<Json>, Vec<Json>)> = BTreeMap::new();
    for (edge, dir) in store.neighbors(id, None)? {
        let slot = groups.entry(edge.relation.as_str()).or_default();
        let (peer, list) = match dir {
            Direction::Outgoing => (&edge.to, &mut slot.0),
            Direction::Incoming => (&edge.from, &mut slot.1),
        };
        let mut entry = node_ref(store, peer);
        entry["weight"] = json!(edge.weight);
        list.push(entry);
    }
    let mut out = Map::new();
    for (relation, (outgoing, incoming)) in groups {
        out.insert(relation.to_string(), json!({ "outgoing": outgoing, "incoming": incoming }));
    }
    Ok(Json::Object(out))
}

/// `None` when the id does not resolve.
pub fn node_detail(store: &Store, id: &NodeId) -> cogkit::Result<Option<Json>> {
    if !store.contains(id) {
        return Ok(None);
    }
    let mut page = match id.kind() {
        NodeKind::Frame => {
            let f = store.frame(id).expect("contained");
            json!({
                "label": f.name,
                "definition": f.definition,
                "language": f.language,
                "elements": f.elements.iter().map(|e| json!({
                    "id": e.id, "name": e.name, "coreness": e.coreness,
                })).collect::<Vec<_>>(),
                "lexicalUnits": f.lexical_units.iter().map(|lu| json!({
                    "lemma": lu.lemma, "pos": lu.pos,
                })).collect::<Vec<_>>(),
                "roles": f.roles,
                "sourceRefs": source_refs(f.source_refs.iter()),
            })
        }
        NodeKind::Element => {
            let (frame, e) = store.element(id).expect("contained");
            json!({
                "label": e.name,
                "frame": node_ref(store, &frame.id),
                "coreness": e.coreness,
                "roleSlots": frame.roles.iter().filter(|(_, n)| **n == e.name).map(|(s, _)| s).collect::<Vec<_>>(),
            })
        }
        NodeKind::Fer => {
            let f = store.fer(id).expect("contained");
            json!({
                "label": f.surface_form,
                "frame": node_ref(store, &f.frame),
                "language": f.language,
                "provenance": f.provenance,
                "restrictions": f.restrictions.iter().map(|(e, t)| json!({
                    "element": e, "elementName": element_name(e), "type": node_ref(store, t),
                })).collect::<Vec<_>>(),
            })
        }
        NodeKind::Instance => {
            let fi = store.instance(id).expect("contained");
            let bindings: Vec<Json> = fi
                .bindings
                .iter()
                .map(|(e, v)| {
                    let value = match v {
                        Value::Entity(en) => node_ref(store, en),
                        Value::Literal(l) => json!({ "literal": l.lexical, "datatype": l.datatype }),
                    };
                    json!({ "element": e, "elementName": element_name(e), "value": value })
                })
                .collect();
            let p = &fi.provenance;
            json!({
                "label": label_of(store, id),
                "frame": node_ref(store, &fi.frame),
                "bindings": bindings,
                "sourceRefs": [{
                    "source": p.source, "subject": p.subject,
                    "predicate": p.predicate, "object": p.object,
                }],
            })
        }
        NodeKind::Entity => match store.entity(id) {
            Some(e) => {
                let aliases: Vec<&NodeId> = store
                    .retired_aliases()
                    .filter(|(_, s)| *s == id)
                    .map(|(a, _)| a)
                    .collect();
                json!({
                    "label": e.label,
                    "altLabels": e.alt_labels,
                    "types": e.types.iter().map(|t| node_ref(store, t)).collect::<Vec<_>>(),
                    "aliases": aliases,
                    "sourceRefs": source_refs(e.source_refs.iter()),
                })
            }
            None => {
                let survivor = store.retired_into(id).expect("alias");
                json!({
                    "label": label_of(store, id),
                    "retiredInto": node_ref(store, survivor),
                })
            }
        },
        NodeKind::Taxonomy => {
            let t = store.taxonomy_type(id).expect("contained");
            json!({
                "label": t.key,
                "gloss": t.gloss,
                "root": t.root,
                "lemmas": t.lemmas,
                "hypernyms": t.hypernyms.iter().map(|h| node_ref(store, h)).collect::<Vec<_>>(),
            })
        }
    };
    page["id"] = json!(id);
    page["kind"] = json!(id.kind());
    page["neighbors"] = grouped_neighbors(store, id)?;
    Ok(Some(page))
}
