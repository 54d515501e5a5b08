//! `concretizes` edges between the three levels.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::NodeId;
use crate::model::{Edge, Fer, FrameInstance, RelationType, Value};
use crate::store::Store;

/// Reflexive-transitive hypernym closure as one bitset row per type.
#[derive(Debug, Clone)]
pub struct SubsumptionIndex {
    ids: BTreeMap<NodeId, usize>,
    words: usize,
    rows: Vec<u64>,
}

impl SubsumptionIndex {
    /// Fails with `TaxonomyCycle` when the hypernym graph is not acyclic.
    pub fn build(store: &Store) -> Result<Self> {
        let ids: BTreeMap<NodeId, usize> = store
            .taxonomy_types()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();
        let n = ids.len();
        let words = n.div_ceil(64).max(1);
        let parents: Vec<Vec<usize>> = store
            .taxonomy_types()
            .map(|t| t.hypernyms.iter().filter_map(|h| ids.get(h).copied()).collect())
            .collect();
        let names: Vec<&NodeId> = ids.keys().collect();

        // Post-order DFS so every parent row is complete before its children.
        let mut rows = vec![0u64; n * words];
        let mut state = vec![0u8; n]; // 0 new, 1 on stack, 2 done
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&p) = parents[node].get(*next) {
                    *next += 1;
                    match state[p] {
                        0 => {
                            state[p] = 1;
                            stack.push((p, 0));
                        }
                        1 => {
                            let mut cycle: Vec<NodeId> = stack
                                .iter()
                                .skip_while(|(x, _)| *x != p)
                                .map(|(x, _)| names[*x].clone())
                                .collect();
                            let min = (0..cycle.len()).min_by_key(|&i| &cycle[i]).unwrap_or(0);
                            cycle.rotate_left(min);
                            return Err(Error::TaxonomyCycle(cycle));
                        }
                        _ => {}
                    }
                } else {
                    rows[node * words + node / 64] |= 1 << (node % 64);
                    for &p in &parents[node] {
                        for w in 0..words {
                            rows[node * words + w] |= rows[p * words + w];
                        }
                    }
                    state[node] = 2;
                    stack.pop();
                }
            }
        }
        Ok(SubsumptionIndex { ids, words, rows })
    }

    fn slot(&self, id: &NodeId) -> Result<usize> {
        self.ids
            .get(id)
            .copied()
            .ok_or_else(|| Error::MissingNode(id.to_string()))
    }

    /// True iff `ancestor` is `descendant` or one of its hypernym ancestors.
    pub fn subsumes(&self, ancestor: &NodeId, descendant: &NodeId) -> Result<bool> {
        let (a, d) = (self.slot(ancestor)?, self.slot(descendant)?);
        Ok(self.rows[d * self.words + a / 64] >> (a % 64) & 1 == 1)
    }

    /// Ancestors of `id` including itself, in id order.
    pub fn ancestors(&self, id: &NodeId) -> Result<Vec<&NodeId>> {
        let d = self.slot(id)?;
        Ok(self
            .ids
            .iter()
            .filter(|(_, &a)| self.rows[d * self.words + a / 64] >> (a % 64) & 1 == 1)
            .map(|(id, _)| id)
            .collect())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Same frame, and every restricted element is bound to an entity with at
/// least one type under the restriction.
pub fn fi_matches_fer(index: &SubsumptionIndex, store: &Store, fi: &FrameInstance, fer: &Fer) -> bool {
    fi.frame == fer.frame
        && fer.restrictions.iter().all(|(element, required)| {
            let Some(Value::Entity(en)) = fi.bindings.get(element) else {
                return false;
            };
            store.entity(en).is_some_and(|entity| {
                entity
                    .types
                    .iter()
                    .any(|t| index.subsumes(required, t).unwrap_or(false))
            })
        })
}

/// Matching (FI, FER) pairs, with candidates pruned to FERs of the FI's frame.
pub fn matching_pairs(store: &Store, index: &SubsumptionIndex) -> Vec<(NodeId, NodeId)> {
    let mut by_frame: BTreeMap<&NodeId, Vec<&Fer>> = BTreeMap::new();
    for fer in store.fers() {
        by_frame.entry(&fer.frame).or_default().push(fer);
    }
    let mut out = Vec::new();
    for fi in store.instances() {
        for fer in by_frame.get(&fi.frame).into_iter().flatten() {
            if fi_matches_fer(index, store, fi, fer) {
                out.push((fi.id.clone(), fer.id.clone()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkReport {
    pub fi_to_fer: usize,
    pub fi_to_sf: usize,
    pub fer_to_sf: usize,
}

pub fn link_all(store: &mut Store) -> Result<LinkReport> {
    store.ensure_building()?;
    let index = SubsumptionIndex::build(store)?;
    let pairs = matching_pairs(store, &index);
    let fers: Vec<(NodeId, NodeId)> = store.fers().map(|f| (f.id.clone(), f.frame.clone())).collect();
    let fis: Vec<(NodeId, NodeId)> = store
        .instances()
        .map(|f| (f.id.clone(), f.frame.clone()))
        .collect();
    let report = LinkReport {
        fi_to_fer: pairs.len(),
        fi_to_sf: fis.len(),
        fer_to_sf: fers.len(),
    };
    for (from, to) in fers.into_iter().chain(fis).chain(pairs) {
        store.put_edge(Edge::new(RelationType::Concretizes, from, to).from_source("linker"))?;
    }
    Ok(report)
}
