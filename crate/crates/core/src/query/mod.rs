//! Keyword search, the frame catalog and triple-pattern evaluation.

mod pattern;
mod trigram;

use std::collections::BTreeMap;

use serde::Serialize;

pub use pattern::{evaluate_pattern, evaluate_with_order, PatternQuery, PatternTerm, QueryResult};
pub use trigram::{jaccard, window_similarity, TrigramIndex};

use crate::error::{Error, Result};
use crate::ids::{NodeId, NodeKind};
use crate::model::RelationType;
use crate::store::Store;
use crate::text::{normalize, tokenize};

pub const DEFAULT_LIMIT: usize = 20;
pub const DEFAULT_MIN_SIMILARITY: f64 = 0.5;

pub const FRAME_NAME_SCORE: f64 = 1.0;
pub const LEXICAL_UNIT_SCORE: f64 = 0.9;
pub const FUZZY_WEIGHT: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum MatchType {
    FrameName,
    LexicalUnit,
    FuzzyLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchHit {
    pub node: NodeId,
    pub kind: NodeKind,
    pub match_type: MatchType,
    pub score: f64,
    pub matched_text: String,
    /// Display label: frame name, surface form or primary entity label.
    pub label: String,
}

fn display_label(store: &Store, id: &NodeId) -> String {
    match id.kind() {
        NodeKind::Frame => store.frame(id).map(|f| f.name.clone()),
        NodeKind::Fer => store.fer(id).map(|f| f.surface_form.clone()),
        NodeKind::Entity => store.entity(id).map(|e| e.label.clone()),
        _ => None,
    }
    .unwrap_or_else(|| id.to_string())
}

fn frame_key(s: &str) -> String {
    normalize(&s.replace('_', " "))
}

/// Three-stage keyword search over a frozen store.
pub fn search(store: &Store, query: &str, limit: usize, min_similarity: f64) -> Result<Vec<SearchHit>> {
    let trigrams = store.trigram_index()?;
    let q = normalize(query);
    if q.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut best: BTreeMap<NodeId, (f64, MatchType, String)> = BTreeMap::new();
    let mut offer = |id: &NodeId, score: f64, ty: MatchType, text: &str| {
        let slot = best.entry(id.clone()).or_insert((f64::MIN, ty, String::new()));
        if score > slot.0 {
            *slot = (score, ty, text.to_string());
        }
    };

    let key = frame_key(&q);
    for frame in store.frames() {
        if frame_key(&frame.name) == key {
            offer(&frame.id, FRAME_NAME_SCORE, MatchType::FrameName, &frame.name);
        }
    }

    let lexicon = store.lexicon();
    for token in tokenize(&q) {
        let (lemma, frames) = lexicon.frames_for_token(&token);
        for id in frames {
            offer(&id, LEXICAL_UNIT_SCORE, MatchType::LexicalUnit, &lemma);
        }
    }

    for (id, label, sim) in trigrams.lookup(&q) {
        if sim >= min_similarity {
            offer(id, FUZZY_WEIGHT * sim, MatchType::FuzzyLabel, label);
        }
    }

    let mut hits: Vec<SearchHit> = best
        .into_iter()
        .map(|(node, (score, match_type, matched_text))| SearchHit {
            kind: node.kind(),
            label: display_label(store, &node),
            node,
            match_type,
            score,
            matched_text,
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.kind.cmp(&b.kind))
            .then_with(|| a.node.cmp(&b.node))
    });
    hits.truncate(limit);
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogRow {
    pub frame: NodeId,
    pub name: String,
    pub definition: String,
    pub fers: usize,
    pub fis: usize,
}

/// Every frame in name order with its incoming `concretizes` counts.
pub fn explore_catalog(store: &Store) -> Vec<CatalogRow> {
    let mut counts: BTreeMap<&NodeId, (usize, usize)> = BTreeMap::new();
    for edge in store.edges() {
        if edge.relation != RelationType::Concretizes || edge.to.kind() != NodeKind::Frame {
            continue;
        }
        let slot = counts.entry(&edge.to).or_default();
        match edge.from.kind() {
            NodeKind::Fer => slot.0 += 1,
            NodeKind::Instance => slot.1 += 1,
            _ => {}
        }
    }
    store
        .frames()
        .map(|f| {
            let (fers, fis) = counts.get(&f.id).copied().unwrap_or_default();
            CatalogRow {
                frame: f.id.clone(),
                name: f.name.clone(),
                definition: f.definition.clone(),
                fers,
                fis,
            }
        })
        .collect()
}
