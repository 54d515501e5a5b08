#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use cogkit::pipeline::{self, BuildOutput};
use cogkit::{
    Coreness, Edge, Entity, Fer, FerProvenance, Frame, FrameInstance, InstanceProvenance, Literal,
    NodeId, RelationType, SourceRef, Store, TaxonomyType, Value,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../sample")
}

pub fn sample_text(name: &str) -> String {
    std::fs::read_to_string(sample_dir().join(name)).unwrap()
}

/// Builds the sample corpus, writing the needs-annotation file to a private
/// temporary path so parallel tests do not race on it.
pub fn build_sample() -> BuildOutput {
    let out = std::env::temp_dir().join(format!(
        "cogkit-needs-{}-{:?}.tsv",
        std::process::id(),
        std::thread::current().id()
    ));
    let built = pipeline::build(&sample_dir().join("manifest.json"), Some(&out)).unwrap();
    let _ = std::fs::remove_file(out);
    built
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn tx(i: usize) -> NodeId {
    NodeId::taxonomy(&format!("t{i:02}"))
}

/// Random DAG: `t00` is the root; every other node picks one to three
/// hypernyms among the nodes before it.
pub fn random_taxonomy(rng: &mut StdRng, n: usize) -> Vec<TaxonomyType> {
    (0..n)
        .map(|i| {
            let mut t = TaxonomyType::new(&format!("t{i:02}"), &format!("type {i}"));
            t.lemmas.insert(format!("w{i}"), 1);
            if i == 0 {
                t.root = true;
            } else {
                for _ in 0..rng.gen_range(1..=3) {
                    t.hypernyms.insert(tx(rng.gen_range(0..i)));
                }
            }
            t
        })
        .collect()
}

pub fn put_taxonomy(store: &mut Store, types: &[TaxonomyType]) {
    for t in types {
        store.put_node(t.clone()).unwrap();
    }
}

/// Naive ancestor sets by repeated breadth-first expansion.
pub fn naive_ancestors(types: &[TaxonomyType]) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let parents: BTreeMap<&NodeId, &BTreeSet<NodeId>> =
        types.iter().map(|t| (&t.id, &t.hypernyms)).collect();
    types
        .iter()
        .map(|t| {
            let mut seen = BTreeSet::from([t.id.clone()]);
            let mut frontier = vec![t.id.clone()];
            while let Some(x) = frontier.pop() {
                for p in parents.get(&x).into_iter().flat_map(|s| s.iter()) {
                    if seen.insert(p.clone()) {
                        frontier.push(p.clone());
                    }
                }
            }
            (t.id.clone(), seen)
        })
        .collect()
}

pub const FRAMES: [(&str, [&str; 3]); 3] = [
    ("Alpha", ["A1", "A2", "A3"]),
    ("Beta", ["B1", "B2", "B3"]),
    ("Gamma", ["C1", "C2", "C3"]),
];

pub fn put_frames(store: &mut Store) {
    for (name, elements) in FRAMES {
        let mut f = Frame::new(name, &format!("{name} frame"), "en");
        for (i, e) in elements.iter().enumerate() {
            let c = if i < 2 { Coreness::Core } else { Coreness::Peripheral };
            f.add_element(e, c);
        }
        f = f.with_lexical_unit(&name.to_lowercase(), cogkit::Pos::V);
        store.put_node(f).unwrap();
    }
}

/// Label pool with every character the N-Triples escaper must handle.
pub const TORTURE: [&str; 8] = [
    "plain",
    "quote \" inside",
    "back \\ slash",
    "new\nline",
    "tab\there",
    "cr\rreturn",
    "bell \u{7} and del \u{7f}",
    "caf\u{e9} \u{1F600} \u{4e2d}",
];

pub struct RandomKb {
    pub store: Store,
    pub types: Vec<TaxonomyType>,
}

/// A small store over the three test frames with random FERs, entities and
/// instances. Not linked and not frozen.
pub fn random_kb(rng: &mut StdRng, max_types: usize, max_fers: usize, max_fis: usize) -> RandomKb {
    let mut store = Store::new();
    let n_types = rng.gen_range(2..=max_types);
    let types = random_taxonomy(rng, n_types);
    put_taxonomy(&mut store, &types);
    put_frames(&mut store);

    let mut fer_ids = Vec::new();
    for i in 0..rng.gen_range(1..=max_fers) {
        let (frame, elements) = FRAMES[rng.gen_range(0..FRAMES.len())];
        let mut restrictions = BTreeMap::new();
        for _ in 0..rng.gen_range(1..=2) {
            let e = elements[rng.gen_range(0..elements.len())];
            restrictions.insert(NodeId::element(frame, e), tx(rng.gen_range(0..n_types)));
        }
        let fer = Fer::new(
            NodeId::frame(frame),
            restrictions,
            &format!("{} phrase {i}", frame.to_lowercase()),
            "en",
            FerProvenance::Automatic,
        );
        fer_ids.push(store.put_node(fer).unwrap());
    }

    let mut entities = Vec::new();
    for i in 0..rng.gen_range(1..=12) {
        let label = if rng.gen_bool(0.3) {
            TORTURE[rng.gen_range(0..TORTURE.len())].to_string()
        } else {
            format!("entity {i}")
        };
        let mut e = Entity::new(SourceRef::new("gen", format!("E{i}")), &label);
        for _ in 0..rng.gen_range(0..=2) {
            e.types.insert(tx(rng.gen_range(0..n_types)));
        }
        if rng.gen_bool(0.2) {
            e.alt_labels.insert(TORTURE[rng.gen_range(0..TORTURE.len())].to_string());
        }
        entities.push(store.put_node(e).unwrap());
    }

    for i in 0..rng.gen_range(1..=max_fis) {
        let (frame, elements) = FRAMES[rng.gen_range(0..FRAMES.len())];
        let mut bindings = BTreeMap::new();
        for e in elements {
            if rng.gen_bool(0.6) {
                let v = if rng.gen_bool(0.85) {
                    Value::Entity(entities.choose(rng).unwrap().clone())
                } else {
                    Value::Literal(Literal::integer(rng.gen_range(0..100)))
                };
                bindings.insert(NodeId::element(frame, e), v);
            }
        }
        if bindings.is_empty() {
            bindings.insert(
                NodeId::element(frame, elements[0]),
                Value::Entity(entities[0].clone()),
            );
        }
        let prov = InstanceProvenance {
            source: "gen".into(),
            subject: format!("S{i}"),
            predicate: "p".into(),
            object: format!("O{i}"),
        };
        store
            .put_node(FrameInstance::new(NodeId::frame(frame), bindings, prov))
            .unwrap();
    }

    for _ in 0..rng.gen_range(0..=4) {
        let a = fer_ids.choose(rng).unwrap().clone();
        let b = fer_ids.choose(rng).unwrap().clone();
        let rel = [RelationType::HasPrerequisite, RelationType::Causes, RelationType::MotivatedByGoal]
            [rng.gen_range(0..3)];
        store.put_edge(Edge::new(rel, a, b).weighted(1.0)).unwrap();
    }
    RandomKb { store, types }
}

/// Sorted (fi, fer) pairs by brute force over every combination.
pub fn oracle_pairs(store: &Store, types: &[TaxonomyType]) -> BTreeSet<(NodeId, NodeId)> {
    let anc = naive_ancestors(types);
    let mut out = BTreeSet::new();
    for fi in store.instances() {
        for fer in store.fers() {
            if fi.frame != fer.frame {
                continue;
            }
            let ok = fer.restrictions.iter().all(|(element, required)| {
                match fi.bindings.get(element) {
                    Some(Value::Entity(en)) => store
                        .entity(en)
                        .unwrap()
                        .types
                        .iter()
                        .any(|t| anc[t].contains(required)),
                    _ => false,
                }
            });
            if ok {
                out.insert((fi.id.clone(), fer.id.clone()));
            }
        }
    }
    out
}
