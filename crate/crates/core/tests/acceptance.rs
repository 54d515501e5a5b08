//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails the
//! test if any criterion fails.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cogkit::fer::{ingest_assertions, parse_assertions};
use cogkit::linker::{link_all, SubsumptionIndex};
use cogkit::query::{evaluate_pattern, evaluate_with_order, search, PatternQuery, PatternTerm};
use cogkit::rdf::{export_to_string, import_ntriples};
use cogkit::schema::{ingest_frames, ingest_taxonomy};
use cogkit::store::Triple;
use cogkit::world::merge_entities;
use cogkit::{
    Error, Fer, FrameInstance, InstanceProvenance, NodeId, NodeKind, RelationType, Store, Term,
    Value, Violation,
};
use rand::seq::SliceRandom;
use rand::Rng;
use support::*;

const RUNTIME_LIMIT: Duration = Duration::from_secs(5);
const SELF_RETRIEVAL_MIN: f64 = 0.8;
const SEARCH_REPEATS: usize = 10;
const LINKER_STORES: u64 = 200;
const TAXONOMIES: u64 = 1000;
const PATTERN_QUERIES: u64 = 100;
const RDF_STORES: u64 = 50;
const MERGE_INPUTS: u64 = 100;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);
type RefPair = ((String, String), (String, String));

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn expected_nodes() -> BTreeMap<&'static str, usize> {
    [("sf", 7), ("fe", 31), ("fer", 13), ("fi", 17), ("en", 15), ("tx", 40)].into()
}

fn expected_edges() -> BTreeMap<&'static str, usize> {
    [
        ("inheritsFrom", 1),
        ("uses", 1),
        ("precedes", 1),
        ("hasPrerequisite", 4),
        ("motivatedByGoal", 2),
        ("causes", 2),
        ("hasSubevent", 1),
        ("sameAs", 3),
        ("concretizes", 45),
    ]
    .into()
}

fn c1_pipeline() -> Outcome {
    let start = Instant::now();
    let built = build_sample();
    let elapsed = start.elapsed();
    ensure!(built.report.validation.is_clean(), "violations: {:?}", built.report.validation);
    let stats = built.store.stats();
    ensure!(stats.nodes == expected_nodes(), "nodes {:?}", stats.nodes);
    ensure!(stats.edges == expected_edges(), "edges {:?}", stats.edges);
    ensure!(stats.edge_total == 60, "edge total {}", stats.edge_total);
    ensure!(stats.retired_entities == 3, "retired {}", stats.retired_entities);
    ensure!(elapsed < RUNTIME_LIMIT, "build took {elapsed:?}");
    Ok(())
}

fn c2_chain() -> Outcome {
    let built = build_sample();
    let s = &built.store;
    let frame = NodeId::frame("Commerce_buy");
    ensure!(s.frame(&frame).is_some(), "no {frame}");

    let goods = NodeId::element("Commerce_buy", "Goods");
    let restrictions = BTreeMap::from([(goods.clone(), NodeId::taxonomy("book"))]);
    let buy_book = Fer::content_id(&frame, &restrictions, "buy book");
    let fer = s.fer(&buy_book).ok_or("no buy book FER")?;
    ensure!(fer.restrictions == restrictions, "restrictions {:?}", fer.restrictions);

    let goal = BTreeMap::from([(NodeId::element("Motion", "Goal"), NodeId::taxonomy("bookstore"))]);
    let bookstore = Fer::content_id(&NodeId::frame("Motion"), &goal, "go to bookstore");
    ensure!(s.fer(&bookstore).is_some(), "no go to bookstore FER");
    ensure!(
        s.edge(RelationType::HasPrerequisite, &buy_book, &bookstore).is_some(),
        "no hasPrerequisite edge"
    );

    let fi_id = FrameInstance::content_id(&InstanceProvenance {
        source: "wikidata".into(),
        subject: "Q_Emile".into(),
        predicate: "ex:bought".into(),
        object: "Q41567".into(),
    });
    let fi = s.instance(&fi_id).ok_or("no Emile FI")?;
    let label = |e: &NodeId, v: Option<&Value>| -> Result<String, String> {
        match v {
            Some(Value::Entity(en)) => Ok(s.entity(en).ok_or(format!("dangling {e}"))?.label.clone()),
            other => Err(format!("{e} bound to {other:?}")),
        }
    };
    let buyer = NodeId::element("Commerce_buy", "Buyer");
    ensure!(label(&buyer, fi.bindings.get(&buyer))? == "Emile", "buyer");
    ensure!(label(&goods, fi.bindings.get(&goods))? == "Hamlet", "goods");

    for (from, to) in [(&fi_id, &buy_book), (&buy_book, &frame), (&fi_id, &frame)] {
        ensure!(
            s.edge(RelationType::Concretizes, from, to).is_some(),
            "missing concretizes {from} -> {to}"
        );
    }
    Ok(())
}

fn c3_linker() -> Outcome {
    for seed in 0..LINKER_STORES {
        let mut r = rng(seed);
        let mut kb = random_kb(&mut r, 25, 15, 30);
        ensure!(kb.store.instances().count() <= 30 && kb.store.fers().count() <= 15, "generator bounds");
        let expected = oracle_pairs(&kb.store, &kb.types);
        let report = link_all(&mut kb.store).map_err(|e| e.to_string())?;
        let got: BTreeSet<(NodeId, NodeId)> = kb
            .store
            .edges()
            .filter(|e| {
                e.relation == RelationType::Concretizes
                    && e.from.kind() == NodeKind::Instance
                    && e.to.kind() == NodeKind::Fer
            })
            .map(|e| (e.from.clone(), e.to.clone()))
            .collect();
        ensure!(got == expected, "seed {seed}: linker pairs differ from oracle");
        ensure!(report.fi_to_fer == expected.len(), "seed {seed}: report count");
        for fi in kb.store.instances() {
            ensure!(kb.store.edge(RelationType::Concretizes, &fi.id, &fi.frame).is_some(), "seed {seed}: fi->sf");
        }
        for fer in kb.store.fers() {
            ensure!(kb.store.edge(RelationType::Concretizes, &fer.id, &fer.frame).is_some(), "seed {seed}: fer->sf");
        }
    }
    Ok(())
}

fn c4_subsumption() -> Outcome {
    for seed in 0..TAXONOMIES {
        let mut r = rng(10_000 + seed);
        let n = r.gen_range(2..=25);
        let types = random_taxonomy(&mut r, n);
        let mut store = Store::new();
        put_taxonomy(&mut store, &types);
        let idx = SubsumptionIndex::build(&store).map_err(|e| e.to_string())?;
        let ids: Vec<NodeId> = types.iter().map(|t| t.id.clone()).collect();
        let sub = |a: &NodeId, b: &NodeId| idx.subsumes(a, b).unwrap();
        let naive = naive_ancestors(&types);
        for a in &ids {
            ensure!(sub(a, a), "seed {seed}: not reflexive at {a}");
            for b in &ids {
                ensure!(sub(b, a) == naive[a].contains(b), "seed {seed}: closure differs at {b} ⊒ {a}");
                if a != b && sub(a, b) {
                    ensure!(!sub(b, a), "seed {seed}: antisymmetry fails for {a}, {b}");
                }
                for c in &ids {
                    if sub(a, b) && sub(b, c) {
                        ensure!(sub(a, c), "seed {seed}: transitivity fails {a} {b} {c}");
                    }
                }
            }
        }

        // Make a strict ancestor point back at one of its descendants.
        let x = r.gen_range(1..n);
        let strict: Vec<&NodeId> = naive[&ids[x]].iter().filter(|y| **y != ids[x]).collect();
        let y = strict.choose(&mut r).copied().ok_or("non-root without ancestor")?;
        let mut looped = types.iter().find(|t| &t.id == y).unwrap().clone();
        looped.hypernyms.insert(ids[x].clone());
        store.put_node(looped).map_err(|e| e.to_string())?;
        match store.freeze() {
            Err(Error::ValidationFailed(report)) => ensure!(
                report.violations.iter().any(|v| matches!(v, Violation::TaxonomyCycle { .. })),
                "seed {seed}: no cycle violation"
            ),
            other => return Err(format!("seed {seed}: cycle accepted: {other:?}")),
        }
        ensure!(!store.is_frozen(), "seed {seed}: store froze");
    }
    Ok(())
}

/// Nested loops over the full projection, with no index.
fn naive_eval(triples: &[Triple], q: &PatternQuery) -> Vec<Vec<String>> {
    fn go(
        triples: &[Triple],
        q: &PatternQuery,
        depth: usize,
        env: &mut BTreeMap<String, Term>,
        out: &mut BTreeSet<Vec<String>>,
    ) {
        if depth == q.patterns.len() {
            out.insert(q.variables.iter().map(|v| env[v].to_ntriples()).collect());
            return;
        }
        for t in triples {
            let row = [Term::node(t.subject.clone()), t.predicate_term(), t.object.clone()];
            let mut added = Vec::new();
            let mut ok = true;
            for (p, value) in q.patterns[depth].iter().zip(row) {
                match p {
                    PatternTerm::Const(c) => ok &= *c == value,
                    PatternTerm::Var(v) => match env.get(v) {
                        Some(bound) => ok &= *bound == value,
                        None => {
                            env.insert(v.clone(), value);
                            added.push(v.clone());
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                go(triples, q, depth + 1, env, out);
            }
            for v in added {
                env.remove(&v);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(triples, q, 0, &mut BTreeMap::new(), &mut out);
    out.into_iter().collect()
}

fn random_query(r: &mut rand::rngs::StdRng, triples: &[Triple]) -> PatternQuery {
    let vars = ["a", "b", "c", "d"];
    let n = r.gen_range(1..=3);
    let mut patterns: Vec<[PatternTerm; 3]> = Vec::new();
    let anchor = triples.choose(r).unwrap().subject.clone();
    let siblings: Vec<&Triple> = triples.iter().filter(|t| t.subject == anchor).collect();
    for k in 0..n {
        // Later patterns usually share the first subject so joins hit.
        let joined = k > 0 && r.gen_bool(0.6);
        let t = if k == 0 || joined { *siblings.choose(r).unwrap() } else { triples.choose(r).unwrap() };
        let row = [Term::node(t.subject.clone()), t.predicate_term(), t.object.clone()];
        let pat: Vec<PatternTerm> = row
            .into_iter()
            .enumerate()
            .map(|(i, term)| {
                if r.gen_bool(0.03) {
                    PatternTerm::Const(Term::string("no such value"))
                } else if i == 0 && joined && matches!(patterns[0], [PatternTerm::Var(_), _, _]) {
                    patterns[0][0].clone()
                } else if r.gen_bool(if i == 1 { 0.35 } else { 0.6 }) {
                    PatternTerm::Var(vars[r.gen_range(0..vars.len())].to_string())
                } else {
                    PatternTerm::Const(term)
                }
            })
            .collect();
        patterns.push([pat[0].clone(), pat[1].clone(), pat[2].clone()]);
    }
    let mut seen: Vec<String> = Vec::new();
    for p in &patterns {
        for t in p {
            if let PatternTerm::Var(v) = t {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
        }
    }
    if seen.is_empty() {
        patterns[0][0] = PatternTerm::Var("a".into());
        seen.push("a".into());
    }
    seen.shuffle(r);
    seen.truncate(r.gen_range(1..=seen.len()));
    PatternQuery {
        variables: seen,
        patterns,
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn c5_patterns() -> Outcome {
    let mut nonempty = 0;
    for seed in 0..PATTERN_QUERIES {
        let mut r = rng(20_000 + seed);
        let mut kb = random_kb(&mut r, 8, 5, 8);
        link_all(&mut kb.store).map_err(|e| e.to_string())?;
        kb.store.freeze().map_err(|e| e.to_string())?;
        let triples = kb.store.project_triples().unwrap();
        let q = random_query(&mut r, triples);
        let expected = naive_eval(triples, &q);
        let render = |rows: Vec<Vec<Term>>| -> Vec<Vec<String>> {
            rows.iter().map(|row| row.iter().map(Term::to_ntriples).collect()).collect()
        };
        let got = render(evaluate_pattern(&kb.store, &q, None).map_err(|e| e.to_string())?.rows);
        ensure!(got == expected, "seed {seed}: engine {} rows, oracle {}", got.len(), expected.len());
        for order in permutations(q.patterns.len()) {
            let alt = render(evaluate_with_order(&kb.store, &q, &order, None).map_err(|e| e.to_string())?.rows);
            ensure!(alt == expected, "seed {seed}: order {order:?} disagrees");
        }
        nonempty += usize::from(!expected.is_empty());
    }
    ensure!(nonempty >= PATTERN_QUERIES as usize / 2, "only {nonempty} queries had results");
    Ok(())
}

fn c6_rdf() -> Outcome {
    let round = |store: &Store, what: &str| -> Outcome {
        let first = export_to_string(store).map_err(|e| e.to_string())?;
        let lines: Vec<&str> = first.split_terminator('\n').collect();
        ensure!(lines.windows(2).all(|w| w[0].as_bytes() < w[1].as_bytes()), "{what}: lines not sorted");
        ensure!(first.ends_with('\n') && !first.contains('\r'), "{what}: line endings");
        let back = import_ntriples(&first).map_err(|e| format!("{what}: {e}"))?;
        let second = export_to_string(&back).map_err(|e| e.to_string())?;
        ensure!(first == second, "{what}: re-export differs");
        for e in store.entities() {
            let b = back.entity(&e.id).ok_or(format!("{what}: lost {}", e.id))?;
            ensure!(b.label == e.label && b.alt_labels == e.alt_labels, "{what}: labels of {} changed", e.id);
        }
        Ok(())
    };
    round(&build_sample().store, "sample")?;
    let mut tortured = 0;
    for seed in 0..RDF_STORES {
        let mut r = rng(30_000 + seed);
        let mut kb = random_kb(&mut r, 10, 6, 10);
        let ids: Vec<(String, String)> = kb
            .store
            .entities()
            .flat_map(|e| e.source_refs.iter().map(|s| (s.source.clone(), s.id.clone())))
            .collect();
        let mut same = String::new();
        for _ in 0..r.gen_range(0..3) {
            let (a, b) = (ids.choose(&mut r).unwrap(), ids.choose(&mut r).unwrap());
            same.push_str(&format!("{}\t{}\t{}\t{}\n", a.0, a.1, b.0, b.1));
        }
        merge_entities(&mut kb.store, &same).map_err(|e| e.to_string())?;
        link_all(&mut kb.store).map_err(|e| e.to_string())?;
        kb.store.freeze().map_err(|e| e.to_string())?;
        tortured += kb
            .store
            .entities()
            .filter(|e| e.labels().any(|l| TORTURE[1..].contains(&l)))
            .count();
        round(&kb.store, &format!("seed {seed}"))?;
    }
    ensure!(tortured > 0, "no torture label was generated");
    Ok(())
}

fn c7_search() -> Outcome {
    let built = build_sample();
    let s = &built.store;
    let hits = search(s, "buy", 20, 0.5).map_err(|e| e.to_string())?;
    ensure!(
        hits.first().map(|h| h.node.as_str()) == Some("sf:Commerce_buy"),
        "first hit {:?}",
        hits.first()
    );
    for fer in s.fers() {
        let hits = search(s, &fer.surface_form, usize::MAX, 0.5).map_err(|e| e.to_string())?;
        let own = hits.iter().find(|h| h.node == fer.id);
        ensure!(
            own.is_some_and(|h| h.score >= SELF_RETRIEVAL_MIN),
            "`{}` does not retrieve itself: {own:?}",
            fer.surface_form
        );
    }
    for q in ["buy", "bookstor", "Hamlet", "Commerce buy", "go to bookstore"] {
        let first = search(s, q, 20, 0.5).map_err(|e| e.to_string())?;
        for _ in 1..SEARCH_REPEATS {
            ensure!(search(s, q, 20, 0.5).unwrap() == first, "`{q}` not deterministic");
        }
    }
    for q in ["", "   "] {
        ensure!(matches!(search(s, q, 20, 0.5), Err(Error::EmptyQuery)), "`{q}` accepted");
    }
    Ok(())
}

fn schema_store() -> Store {
    let mut s = Store::new();
    ingest_frames(&mut s, &sample_text("frames.tsv"), "frames").unwrap();
    ingest_taxonomy(&mut s, &sample_text("taxonomy.tsv")).unwrap();
    s
}

fn c8_rejections() -> Outcome {
    let text = sample_text("assertions.tsv");
    let total = parse_assertions(&text).map_err(|e| e.to_string())?.len();
    let mut all = schema_store();
    let report = ingest_assertions(&mut all, &text).map_err(|e| e.to_string())?;
    ensure!(report.assertions == total, "assertion count");
    ensure!(
        report.frame_edges + report.fer_edges + report.rejected.len() == total,
        "{} + {} + {} != {total}",
        report.frame_edges,
        report.fer_edges,
        report.rejected.len()
    );

    let rejected: BTreeSet<usize> = report.rejected.iter().map(|r| r.assertion.line).collect();
    let keep = |want_rejected: bool| -> String {
        text.lines()
            .enumerate()
            .map(|(i, l)| {
                let is_rejected = rejected.contains(&(i + 1));
                if l.starts_with('#') || is_rejected == want_rejected { l } else { "" }
            })
            .collect::<Vec<_>>()
            .join("\n")
    };

    let mut accepted_only = schema_store();
    ingest_assertions(&mut accepted_only, &keep(false)).map_err(|e| e.to_string())?;
    ensure!(accepted_only.stats() == all.stats(), "rejected assertions changed the counts");

    let before = accepted_only.stats();
    let again = ingest_assertions(&mut accepted_only, &keep(true)).map_err(|e| e.to_string())?;
    ensure!(again.rejected.len() == rejected.len(), "rejections not reproduced");
    ensure!(accepted_only.stats() == before, "snapshot changed after rejected-only ingest");
    Ok(())
}

fn state_json(s: &Store) -> String {
    serde_json::to_string(&s.to_state()).unwrap()
}

fn c9_merge() -> Outcome {
    for seed in 0..MERGE_INPUTS {
        let mut r = rng(40_000 + seed);
        let kb = random_kb(&mut r, 6, 3, 12);
        let refs: Vec<(String, String)> = kb
            .store
            .entities()
            .map(|e| {
                let s = e.source_refs.iter().next().unwrap();
                (s.source.clone(), s.id.clone())
            })
            .collect();
        let mut pairs: Vec<RefPair> = (0..r.gen_range(1..=6))
            .map(|_| (refs.choose(&mut r).unwrap().clone(), refs.choose(&mut r).unwrap().clone()))
            .collect();
        let render = |pairs: &[RefPair]| -> String {
            pairs
                .iter()
                .map(|(a, b)| format!("{}\t{}\t{}\t{}\n", a.0, a.1, b.0, b.1))
                .collect()
        };
        let state = kb.store.to_state();
        let mut base = Store::from_state(state.clone()).map_err(|e| e.to_string())?;
        merge_entities(&mut base, &render(&pairs)).map_err(|e| e.to_string())?;
        let reference = state_json(&base);

        pairs.shuffle(&mut r);
        for p in pairs.iter_mut() {
            if r.gen_bool(0.5) {
                std::mem::swap(&mut p.0, &mut p.1);
            }
        }
        let mut permuted = Store::from_state(state).map_err(|e| e.to_string())?;
        merge_entities(&mut permuted, &render(&pairs)).map_err(|e| e.to_string())?;
        ensure!(state_json(&permuted) == reference, "seed {seed}: order changed the result");

        merge_entities(&mut permuted, &render(&pairs)).map_err(|e| e.to_string())?;
        ensure!(state_json(&permuted) == reference, "seed {seed}: second merge changed the store");

        for fi in permuted.instances() {
            for v in fi.bindings.values() {
                if let Value::Entity(en) = v {
                    ensure!(
                        permuted.entity(en).is_some() && permuted.retired_into(en).is_none(),
                        "seed {seed}: {} binds retired {en}",
                        fi.id
                    );
                }
            }
        }
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("end-to-end sample build matches the fixture oracle", c1_pipeline),
        ("FI -> FER -> SF chain of the buy-book example", c2_chain),
        ("linker equals the brute-force oracle on random stores", c3_linker),
        ("subsumption laws and cycle rejection", c4_subsumption),
        ("pattern queries equal the naive join in every order", c5_patterns),
        ("N-Triples round-trip is byte-identical", c6_rdf),
        ("search ranking, self-retrieval and determinism", c7_search),
        ("assertion rejection conservation", c8_rejections),
        ("sameAs merge invariance and idempotence", c9_merge),
    ];
    // Written to the process stdout directly so the lines survive test capture.
    let mut out = std::io::stdout();
    writeln!(out).unwrap();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panic".into())));
        match outcome {
            Ok(()) => writeln!(out, "PASS criterion {n}: {name}").unwrap(),
            Err(why) => {
                writeln!(out, "FAIL criterion {n}: {name}: {why}").unwrap();
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
