use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::Store;
use crate::ids::NodeId;
use crate::model::Value;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Violation {
    /// Canonical rotation: the smallest id comes first.
    TaxonomyCycle { cycle: Vec<NodeId> },
    Dangling {
        node: NodeId,
        field: &'static str,
        target: NodeId,
    },
    MissingHypernym { node: NodeId },
    RootWithHypernym { node: NodeId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(super) fn validate(store: &Store) -> ValidationReport {
    let mut out = Vec::new();
    let mut dangling = |node: &NodeId, field: &'static str, target: &NodeId, ok: bool| {
        if !ok {
            out.push(Violation::Dangling {
                node: node.clone(),
                field,
                target: target.clone(),
            });
        }
    };

    for ty in store.taxonomy.values() {
        for h in &ty.hypernyms {
            dangling(&ty.id, "hypernym", h, store.taxonomy.contains_key(h));
        }
    }
    for fer in store.fers.values() {
        dangling(&fer.id, "frame", &fer.frame, store.frames.contains_key(&fer.frame));
        for (element, ty) in &fer.restrictions {
            dangling(
                &fer.id,
                "restriction.element",
                element,
                store.element_frame.get(element) == Some(&fer.frame),
            );
            dangling(&fer.id, "restriction.type", ty, store.taxonomy.contains_key(ty));
        }
    }
    for fi in store.instances.values() {
        dangling(&fi.id, "frame", &fi.frame, store.frames.contains_key(&fi.frame));
        for (element, value) in &fi.bindings {
            dangling(
                &fi.id,
                "binding.element",
                element,
                store.element_frame.get(element) == Some(&fi.frame),
            );
            if let Value::Entity(en) = value {
                dangling(&fi.id, "binding.value", en, store.entities.contains_key(en));
            }
        }
    }
    for entity in store.entities.values() {
        for ty in &entity.types {
            dangling(&entity.id, "type", ty, store.taxonomy.contains_key(ty));
        }
    }
    for (retired, survivor) in &store.retired {
        dangling(retired, "mergedInto", survivor, store.entities.contains_key(survivor));
    }
    for (_, from, to) in store.edges.keys() {
        dangling(from, "edge.to", to, store.contains(to));
        dangling(to, "edge.from", from, store.contains(from));
    }

    for ty in store.taxonomy.values() {
        if ty.root && !ty.hypernyms.is_empty() {
            out.push(Violation::RootWithHypernym { node: ty.id.clone() });
        }
        if !ty.root && ty.hypernyms.is_empty() {
            out.push(Violation::MissingHypernym { node: ty.id.clone() });
        }
    }
    for cycle in taxonomy_cycles(store) {
        out.push(Violation::TaxonomyCycle { cycle });
    }
    ValidationReport { violations: out }
}

/// Cycles found by DFS back edges over the hypernym graph, deduplicated by
/// canonical rotation.
fn taxonomy_cycles(store: &Store) -> Vec<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let ids: Vec<&NodeId> = store.taxonomy.keys().collect();
    let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let succ: Vec<Vec<usize>> = store
        .taxonomy
        .values()
        .map(|t| t.hypernyms.iter().filter_map(|h| index.get(h).copied()).collect())
        .collect();
    let mut mark = vec![Mark::New; ids.len()];
    let mut cycles: BTreeSet<Vec<NodeId>> = BTreeSet::new();

    for start in 0..ids.len() {
        if mark[start] != Mark::New {
            continue;
        }
        // (node, next successor position); `path` mirrors the active stack.
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        let mut path: Vec<usize> = vec![start];
        mark[start] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let (node, pos) = *top;
            if pos < succ[node].len() {
                top.1 += 1;
                let next = succ[node][pos];
                match mark[next] {
                    Mark::New => {
                        mark[next] = Mark::Active;
                        stack.push((next, 0));
                        path.push(next);
                    }
                    Mark::Active => {
                        let at = path.iter().position(|&n| n == next).expect("active on path");
                        let mut cycle: Vec<NodeId> =
                            path[at..].iter().map(|&n| ids[n].clone()).collect();
                        let min = (0..cycle.len())
                            .min_by_key(|&i| &cycle[i])
                            .expect("non-empty cycle");
                        cycle.rotate_left(min);
                        cycles.insert(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
                path.pop();
            }
        }
    }
    cycles.into_iter().collect()
}
