use std::collections::{BTreeMap, BTreeSet};

use crate::ids::NodeId;
use crate::store::Store;
use crate::text::{normalize, trigrams};

#[derive(Debug, Clone)]
struct Entry {
    node: NodeId,
    label: String,
    /// Trigram sets of the whole label and of every contiguous token window.
    windows: Vec<Vec<String>>,
}

/// Character-trigram index over FER surface forms and entity labels.
#[derive(Debug, Clone, Default)]
pub struct TrigramIndex {
    entries: Vec<Entry>,
    postings: BTreeMap<String, Vec<u32>>,
}

/// Jaccard similarity of two sorted, deduplicated sets.
pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common as f64 / (a.len() + b.len() - common) as f64
}

/// Best trigram Jaccard between `query` and the label or any contiguous
/// token window of it, so a query can match one word of a longer label.
pub fn window_similarity(query: &str, label: &str) -> f64 {
    let q = trigrams(query);
    label_windows(label)
        .iter()
        .map(|w| jaccard(&q, w))
        .fold(0.0, f64::max)
}

fn label_windows(label: &str) -> Vec<Vec<String>> {
    let norm = normalize(label);
    let tokens: Vec<&str> = norm.split(' ').filter(|t| !t.is_empty()).collect();
    let mut out: BTreeSet<Vec<String>> = BTreeSet::new();
    for start in 0..tokens.len() {
        for end in start + 1..=tokens.len() {
            out.insert(trigrams(&tokens[start..end].join(" ")));
        }
    }
    out.into_iter().collect()
}

impl TrigramIndex {
    pub fn build(store: &Store) -> Self {
        let mut labeled: Vec<(NodeId, String)> = store
            .fers()
            .map(|f| (f.id.clone(), f.surface_form.clone()))
            .collect();
        for entity in store.entities() {
            for label in entity.labels() {
                labeled.push((entity.id.clone(), label.to_string()));
            }
        }
        let mut index = TrigramIndex::default();
        for (node, label) in labeled {
            let windows = label_windows(&label);
            let slot = index.entries.len() as u32;
            let grams: BTreeSet<&String> = windows.iter().flatten().collect();
            for g in grams {
                index.postings.entry(g.clone()).or_default().push(slot);
            }
            index.entries.push(Entry {
                node,
                label,
                windows,
            });
        }
        index
    }

    /// `(node, label, similarity)` for every label sharing a trigram with the
    /// query, in index order.
    pub fn lookup(&self, query: &str) -> Vec<(&NodeId, &str, f64)> {
        let q = trigrams(query);
        let mut slots: BTreeSet<u32> = BTreeSet::new();
        for g in &q {
            if let Some(list) = self.postings.get(g) {
                slots.extend(list.iter().copied());
            }
        }
        slots
            .into_iter()
            .map(|s| {
                let e = &self.entries[s as usize];
                let sim = e.windows.iter().map(|w| jaccard(&q, w)).fold(0.0, f64::max);
                (&e.node, e.label.as_str(), sim)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
