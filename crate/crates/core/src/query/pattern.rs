//! Conjunctive triple-pattern queries.
//!
//! ```text
//! SELECT ?fi ?g
//! ?fi rdf:type sf:Commerce_buy .
//! ?fi fe:Commerce_buy/Goods ?g .
//! ```

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::NodeId;
use crate::model::{Datatype, XSD};
use crate::store::{Store, TermId, TripleIndex};
use crate::term::{Term, TermReader};
use crate::vocab::{NS, RDF_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternQuery {
    pub variables: Vec<String>,
    pub patterns: Vec<[PatternTerm; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryResult {
    pub variables: Vec<String>,
    pub rows: Vec<Vec<Term>>,
}

fn malformed(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::MalformedQuery(format!("line {line}: {msg}"))
}

fn is_var_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn prefixed(line: usize, token: &str) -> Result<Term> {
    if token == "a" {
        return Ok(Term::iri(RDF_TYPE));
    }
    let (prefix, local) = token
        .split_once(':')
        .ok_or_else(|| malformed(line, format!("unrecognized term `{token}`")))?;
    match prefix {
        "rdf" if local == "type" => Ok(Term::iri(RDF_TYPE)),
        "cognet" => Ok(Term::iri(&format!("{NS}{local}"))),
        "sf" | "fe" | "fer" | "fi" | "en" | "tx" => NodeId::parse(token)
            .map(Term::node)
            .map_err(|_| malformed(line, format!("malformed node id `{token}`"))),
        _ => Err(malformed(line, format!("unknown prefix in `{token}`"))),
    }
}

fn read_term(r: &mut TermReader<'_>, line: usize) -> Result<PatternTerm> {
    match r.peek() {
        Some('?') => {
            r.eat('?');
            let name = r.read_bare();
            if !is_var_name(name) {
                return Err(malformed(line, format!("bad variable name `?{name}`")));
            }
            Ok(PatternTerm::Var(name.to_string()))
        }
        Some('<') => {
            let iri = r.read_iri().map_err(|e| malformed(line, e))?;
            Ok(PatternTerm::Const(Term::iri(&iri)))
        }
        Some('"') => {
            let value = r.read_quoted().map_err(|e| malformed(line, e))?;
            let datatype = if r.eat('^') {
                if !r.eat('^') {
                    return Err(malformed(line, "expected `^^`"));
                }
                let dt = if r.peek() == Some('<') {
                    r.read_iri().map_err(|e| malformed(line, e))?
                } else {
                    let bare = r.read_bare();
                    match bare.strip_prefix("xsd:") {
                        Some(local) => format!("{XSD}{local}"),
                        None => return Err(malformed(line, format!("unknown datatype `{bare}`"))),
                    }
                };
                Datatype::from_iri(&dt)
                    .ok_or_else(|| malformed(line, format!("unsupported datatype <{dt}>")))?
            } else {
                Datatype::String
            };
            if !datatype.accepts(&value) {
                return Err(malformed(line, format!("`{value}` is not a valid {}", datatype.as_str())));
            }
            Ok(PatternTerm::Const(Term::Literal { value, datatype }))
        }
        Some(_) => {
            let token = r.read_bare();
            Ok(PatternTerm::Const(prefixed(line, token)?))
        }
        None => Err(malformed(line, "pattern needs three terms")),
    }
}

impl PatternQuery {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let Some((head_line, head)) = lines.next() else {
            return Err(Error::EmptyQuery);
        };
        let mut words = head.split_whitespace();
        if !words.next().is_some_and(|w| w.eq_ignore_ascii_case("select")) {
            return Err(malformed(head_line, "query must start with SELECT"));
        }
        let mut star = false;
        let mut variables = Vec::new();
        for w in words {
            if w == "*" {
                star = true;
            } else {
                match w.strip_prefix('?').filter(|n| is_var_name(n)) {
                    Some(name) if !variables.iter().any(|v| v == name) => variables.push(name.to_string()),
                    Some(_) => {}
                    None => return Err(malformed(head_line, format!("bad projection `{w}`"))),
                }
            }
        }
        if star == !variables.is_empty() {
            return Err(malformed(head_line, "SELECT needs `*` or at least one variable"));
        }

        let mut patterns = Vec::new();
        for (line, text) in lines {
            let body = text.strip_suffix('.').map(str::trim_end).unwrap_or(text);
            let mut r = TermReader::new(body);
            let mut terms = Vec::with_capacity(3);
            for _ in 0..3 {
                r.skip_ws();
                terms.push(read_term(&mut r, line)?);
            }
            r.skip_ws();
            if !r.at_end() {
                return Err(malformed(line, format!("unexpected `{}`", r.rest())));
            }
            if matches!(&terms[0], PatternTerm::Const(Term::Literal { .. }))
                || matches!(&terms[1], PatternTerm::Const(Term::Literal { .. }))
            {
                return Err(malformed(line, "literals may only appear as objects"));
            }
            let [s, p, o]: [PatternTerm; 3] = terms.try_into().expect("three terms");
            patterns.push([s, p, o]);
        }
        if patterns.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut seen: Vec<String> = Vec::new();
        for pat in &patterns {
            for t in pat {
                if let PatternTerm::Var(v) = t {
                    if !seen.contains(v) {
                        seen.push(v.clone());
                    }
                }
            }
        }
        if star {
            variables = seen;
        } else if let Some(v) = variables.iter().find(|v| !seen.contains(v)) {
            return Err(Error::UnboundProjection(v.clone()));
        }
        Ok(PatternQuery { variables, patterns })
    }

    fn slots(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for pat in &self.patterns {
            for t in pat {
                if let PatternTerm::Var(v) = t {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }
}

/// Encoded position: a constant id or a variable slot.
#[derive(Clone, Copy)]
enum Pos {
    Const(TermId),
    Var(usize),
}

struct Plan {
    patterns: Vec<[Pos; 3]>,
    projection: Vec<usize>,
    slots: usize,
}

/// `None` when some constant is absent from the store, which makes the
/// whole conjunction empty.
fn encode(index: &TripleIndex, query: &PatternQuery) -> Option<Plan> {
    let slots = query.slots();
    let slot = |v: &String| slots.iter().position(|s| s == v).expect("collected");
    let mut patterns = Vec::with_capacity(query.patterns.len());
    for pat in &query.patterns {
        let mut enc = [Pos::Var(0); 3];
        for (i, t) in pat.iter().enumerate() {
            enc[i] = match t {
                PatternTerm::Var(v) => Pos::Var(slot(v)),
                PatternTerm::Const(term) => Pos::Const(index.id_of(term)?),
            };
        }
        patterns.push(enc);
    }
    let projection = query.variables.iter().map(slot).collect();
    Some(Plan {
        patterns,
        projection,
        slots: slots.len(),
    })
}

/// Greedy order: fewest unbound variable positions first, then the smallest
/// constant-only range, then input order.
fn greedy_order(index: &TripleIndex, plan: &Plan) -> Vec<usize> {
    let mut bound = vec![false; plan.slots];
    let mut left: Vec<usize> = (0..plan.patterns.len()).collect();
    let mut order = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let key = |i: usize| {
            let pat = &plan.patterns[i];
            let free = pat
                .iter()
                .filter(|p| matches!(p, Pos::Var(v) if !bound[*v]))
                .count();
            let c = |p: &Pos| match p {
                Pos::Const(id) => Some(*id),
                Pos::Var(_) => None,
            };
            (free, index.count(c(&pat[0]), c(&pat[1]), c(&pat[2])), i)
        };
        let at = (0..left.len()).min_by_key(|&k| key(left[k])).expect("non-empty");
        let chosen = left.remove(at);
        for p in &plan.patterns[chosen] {
            if let Pos::Var(v) = p {
                bound[*v] = true;
            }
        }
        order.push(chosen);
    }
    order
}

fn join(
    index: &TripleIndex,
    plan: &Plan,
    order: &[usize],
    depth: usize,
    binding: &mut Vec<Option<TermId>>,
    out: &mut BTreeSet<Vec<TermId>>,
) {
    let Some(&next) = order.get(depth) else {
        out.insert(
            plan.projection
                .iter()
                .map(|&v| binding[v].expect("all variables bound"))
                .collect(),
        );
        return;
    };
    let pat = plan.patterns[next];
    let fixed = |p: Pos, b: &[Option<TermId>]| match p {
        Pos::Const(id) => Some(id),
        Pos::Var(v) => b[v],
    };
    let (s, p, o) = (
        fixed(pat[0], binding),
        fixed(pat[1], binding),
        fixed(pat[2], binding),
    );
    for row in index.scan(s, p, o) {
        let mut newly = Vec::with_capacity(3);
        let mut ok = true;
        for (pos, value) in pat.iter().zip(row) {
            if let Pos::Var(v) = *pos {
                match binding[v] {
                    Some(existing) if existing != value => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding[v] = Some(value);
                        newly.push(v);
                    }
                }
            }
        }
        if ok {
            join(index, plan, order, depth + 1, binding, out);
        }
        for v in newly {
            binding[v] = None;
        }
    }
}

fn run(store: &Store, query: &PatternQuery, order: Option<&[usize]>, limit: Option<usize>) -> Result<QueryResult> {
    let index = store.triple_index()?;
    let mut result = QueryResult {
        variables: query.variables.clone(),
        rows: Vec::new(),
    };
    let Some(plan) = encode(index, query) else {
        return Ok(result);
    };
    let order = match order {
        Some(o) => {
            let mut check: Vec<usize> = o.to_vec();
            check.sort_unstable();
            if check != (0..plan.patterns.len()).collect::<Vec<_>>() {
                return Err(Error::MalformedQuery("order is not a permutation of the patterns".into()));
            }
            o.to_vec()
        }
        None => greedy_order(index, &plan),
    };
    let mut rows = BTreeSet::new();
    join(index, &plan, &order, 0, &mut vec![None; plan.slots], &mut rows);
    // Term ids follow serialization order, so the set order is the row order.
    result.rows = rows
        .into_iter()
        .take(limit.unwrap_or(usize::MAX))
        .map(|row| row.into_iter().map(|id| index.term(id).clone()).collect())
        .collect();
    Ok(result)
}

/// Deduplicated rows, ordered by the serialized projected values.
pub fn evaluate_pattern(store: &Store, query: &PatternQuery, limit: Option<usize>) -> Result<QueryResult> {
    run(store, query, None, limit)
}

/// Same as [`evaluate_pattern`] with a caller-chosen pattern order.
pub fn evaluate_with_order(
    store: &Store,
    query: &PatternQuery,
    order: &[usize],
    limit: Option<usize>,
) -> Result<QueryResult> {
    run(store, query, Some(order), limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_terms_and_projection() {
        let q = PatternQuery::parse(
            "select ?fi ?g\n# comment\n?fi rdf:type sf:Commerce_buy .\n\
             ?fi <http://cognet.example/ns#fe/Commerce_buy/Goods> ?g\n\
             ?g cognet:label \"Hamlet\"^^xsd:string .\n",
        )
        .unwrap();
        assert_eq!(q.variables, ["fi", "g"]);
        assert_eq!(q.patterns.len(), 3);
        assert_eq!(
            q.patterns[1][1],
            PatternTerm::Const(Term::node(NodeId::element("Commerce_buy", "Goods")))
        );
        assert_eq!(
            PatternQuery::parse("SELECT *\n?s ?p ?o\n").unwrap().variables,
            ["s", "p", "o"]
        );
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(matches!(PatternQuery::parse(""), Err(Error::EmptyQuery)));
        assert!(matches!(PatternQuery::parse("SELECT ?a\n"), Err(Error::EmptyQuery)));
        assert!(matches!(
            PatternQuery::parse("SELECT ?z\n?a ?b ?c\n"),
            Err(Error::UnboundProjection(v)) if v == "z"
        ));
        for bad in [
            "?a ?b ?c",
            "SELECT ?a\n?a ?b\n",
            "SELECT ?a\n?a zz:b ?c\n",
            "SELECT ?a\n?a rdf:type sf:bad id\n",
            "SELECT ?a\n?a ?b \"x\"^^xsd:integer\n",
            "SELECT ?a\n\"x\" ?b ?a\n",
        ] {
            assert!(matches!(PatternQuery::parse(bad), Err(Error::MalformedQuery(_))), "{bad}");
        }
    }
}
