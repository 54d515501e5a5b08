//! Commonsense assertions to frames and FERs.
//!
//! Each phrase is parsed against a [`Lexicon`] snapshot of the schema and
//! taxonomy: the evoking lexical unit picks candidate frames, the remaining
//! content words become fillers typed by their first taxonomy sense, and
//! each filler is assigned a frame element through the frame's role table.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::NodeId;
use crate::model::{
    Coreness, Edge, Fer, FerProvenance, Frame, FrameElement, Pos, RelationFamily, RelationType,
};
use crate::store::Store;
use crate::text::{lemmatize, normalize, tokenize, word_class, WordClass};
use crate::tsv::records;

pub const DEFAULT_LANGUAGE: &str = "en";

/// Syntactic position of a filler relative to the evoking word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Object,
    /// Prepositional argument; `None` is the generic `oblique` key.
    Oblique(Option<String>),
}

impl Slot {
    pub fn parse(key: &str) -> Option<Slot> {
        match key {
            "object" => Some(Slot::Object),
            "oblique" => Some(Slot::Oblique(None)),
            _ => {
                let prep = key.strip_prefix("oblique:")?;
                (word_class(prep) == Some(WordClass::Preposition))
                    .then(|| Slot::Oblique(Some(prep.to_string())))
            }
        }
    }

    pub fn key(&self) -> String {
        match self {
            Slot::Object => "object".into(),
            Slot::Oblique(None) => "oblique".into(),
            Slot::Oblique(Some(p)) => format!("oblique:{p}"),
        }
    }

    /// Role-table keys to try, most specific first.
    fn lookup_keys(&self) -> Vec<String> {
        match self {
            Slot::Object => vec!["object".into()],
            Slot::Oblique(None) => vec!["oblique".into()],
            Slot::Oblique(Some(p)) => vec![format!("oblique:{p}"), "oblique".into()],
        }
    }
}

/// Read-only view of the schema and taxonomy used by the parser.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    frames: BTreeMap<NodeId, Frame>,
    lexical_units: BTreeMap<(String, Pos), Vec<NodeId>>,
    lu_lemmas: HashSet<String>,
    /// Lemma to `(rank, type)` in preference order.
    senses: BTreeMap<String, Vec<(u32, NodeId)>>,
}

impl Lexicon {
    pub fn snapshot(store: &Store) -> Self {
        let mut lex = Lexicon::default();
        for frame in store.frames() {
            for lu in &frame.lexical_units {
                lex.lexical_units
                    .entry((lu.lemma.clone(), lu.pos))
                    .or_default()
                    .push(frame.id.clone());
                lex.lu_lemmas.insert(lu.lemma.clone());
            }
            lex.frames.insert(frame.id.clone(), frame.clone());
        }
        // Frames are visited in id order, which is name order.
        for ty in store.taxonomy_types() {
            for (lemma, &rank) in &ty.lemmas {
                lex.senses
                    .entry(lemma.clone())
                    .or_default()
                    .push((rank, ty.id.clone()));
            }
        }
        for senses in lex.senses.values_mut() {
            senses.sort();
        }
        lex
    }

    pub fn frame(&self, id: &NodeId) -> Option<&Frame> {
        self.frames.get(id)
    }

    pub fn frames_for(&self, lemma: &str, pos: Pos) -> &[NodeId] {
        self.lexical_units
            .get(&(lemma.to_string(), pos))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Lemma of `token` against the LU lemmas, with the frames declaring it
    /// under any part of speech, sorted and deduplicated.
    pub fn frames_for_token(&self, token: &str) -> (String, Vec<NodeId>) {
        let lemma = self.lemma_for_lu(token);
        let mut frames: Vec<NodeId> = self
            .lexical_units
            .range((lemma.clone(), Pos::V)..)
            .take_while(|((l, _), _)| *l == lemma)
            .flat_map(|(_, ids)| ids.iter().cloned())
            .collect();
        frames.sort();
        frames.dedup();
        (lemma, frames)
    }

    fn lemma_for_lu(&self, token: &str) -> String {
        lemmatize(token, |c| self.lu_lemmas.contains(c))
    }

    fn lemma_for_type(&self, token: &str) -> String {
        lemmatize(token, |c| self.senses.contains_key(c))
    }
}

/// First-sense taxonomy type for a lemma; ties on rank go to the smaller key.
pub fn link_taxonomy(lexicon: &Lexicon, lemma: &str) -> Result<NodeId> {
    let lemma = normalize(lemma);
    lexicon
        .senses
        .get(&lemma)
        .and_then(|s| s.first())
        .map(|(_, id)| id.clone())
        .ok_or(Error::UnknownLemma(lemma))
}

/// Role table first, then the first unassigned core element skipping the
/// agent-like first core element (unless it is the only one).
pub fn assign_element<'f>(
    frame: &'f Frame,
    slot: &Slot,
    assigned: &BTreeSet<NodeId>,
) -> Result<&'f FrameElement> {
    for key in slot.lookup_keys() {
        if let Some(e) = frame.roles.get(&key).and_then(|name| frame.element(name)) {
            if !assigned.contains(&e.id) {
                return Ok(e);
            }
            break;
        }
    }
    let core: Vec<&FrameElement> = frame.core_elements().collect();
    let skip = usize::from(core.len() > 1);
    core.into_iter()
        .skip(skip)
        .find(|e| !assigned.contains(&e.id))
        .ok_or_else(|| Error::NoAssignableElement(frame.name.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum RejectReason {
    NoEvokingWord,
    AmbiguousUnresolved,
    FillerUnknown,
    UnsupportedShape,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::NoEvokingWord => "noEvokingWord",
            RejectReason::AmbiguousUnresolved => "ambiguousUnresolved",
            RejectReason::FillerUnknown => "fillerUnknown",
            RejectReason::UnsupportedShape => "unsupportedShape",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FillerAssignment {
    pub element: NodeId,
    pub filler_lemma: String,
    #[serde(rename = "type")]
    pub ty: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "camelCase")]
pub enum PhraseParse {
    FrameRef {
        frame: NodeId,
    },
    FerDraft {
        frame: NodeId,
        assignments: Vec<FillerAssignment>,
    },
    Reject {
        reason: RejectReason,
    },
}

impl PhraseParse {
    pub fn reject_reason(&self) -> Option<RejectReason> {
        match self {
            PhraseParse::Reject { reason } => Some(*reason),
            _ => None,
        }
    }
}

struct Filler {
    lemma: String,
    ty: NodeId,
    slot: Slot,
}

/// Evoking word position, consumed token count and candidate frames.
fn find_evoker(lexicon: &Lexicon, tokens: &[String], pos: Pos) -> Option<(usize, usize, Vec<NodeId>)> {
    for i in 0..tokens.len() {
        if word_class(&tokens[i]).is_some() {
            continue;
        }
        let lemma = lexicon.lemma_for_lu(&tokens[i]);
        if let Some(next) = tokens.get(i + 1) {
            for second in [next.clone(), lexicon.lemma_for_lu(next)] {
                let frames = lexicon.frames_for(&format!("{lemma} {second}"), pos);
                if !frames.is_empty() {
                    return Some((i, 2, frames.to_vec()));
                }
            }
        }
        let frames = lexicon.frames_for(&lemma, pos);
        if !frames.is_empty() {
            return Some((i, 1, frames.to_vec()));
        }
    }
    None
}

/// Parses one phrase; never fails, unparseable input yields `Reject`.
pub fn parse_phrase(lexicon: &Lexicon, phrase: &str, _language: &str) -> PhraseParse {
    let reject = |reason| PhraseParse::Reject { reason };
    let tokens = tokenize(phrase);
    let (at, width, candidates, pos) = match find_evoker(lexicon, &tokens, Pos::V) {
        Some((i, w, c)) => (i, w, c, Pos::V),
        None => match find_evoker(lexicon, &tokens, Pos::N) {
            Some((i, w, c)) => (i, w, c, Pos::N),
            None => return reject(RejectReason::NoEvokingWord),
        },
    };

    // (token, slot) pairs in phrase order.
    let mut raw: Vec<(&str, Slot)> = Vec::new();
    for token in &tokens[..at] {
        if word_class(token).is_none() {
            if pos == Pos::V {
                return reject(RejectReason::UnsupportedShape);
            }
            raw.push((token, Slot::Object));
        }
    }
    let mut prep: Option<&str> = None;
    for token in &tokens[at + width..] {
        match word_class(token) {
            Some(WordClass::Stop) => {}
            Some(WordClass::Preposition) => prep = Some(token),
            None => {
                let slot = match prep.take() {
                    Some(p) => Slot::Oblique(Some(p.to_string())),
                    None => Slot::Object,
                };
                raw.push((token, slot));
            }
        }
    }
    if prep.is_some() {
        return reject(RejectReason::UnsupportedShape);
    }

    let mut fillers = Vec::with_capacity(raw.len());
    for (token, slot) in raw {
        let lemma = lexicon.lemma_for_type(token);
        match link_taxonomy(lexicon, &lemma) {
            Ok(ty) => fillers.push(Filler { lemma, ty, slot }),
            Err(_) => return reject(RejectReason::FillerUnknown),
        }
    }
    if fillers.is_empty() {
        return PhraseParse::FrameRef {
            frame: candidates[0].clone(),
        };
    }

    // Best candidate by number of fillers landing on core elements; the
    // candidate list is in name order, so the first maximum wins ties.
    let mut best: Option<(usize, NodeId, Vec<FillerAssignment>)> = None;
    for id in &candidates {
        let Some(frame) = lexicon.frame(id) else { continue };
        let Some(assignments) = assign_all(frame, &fillers) else {
            continue;
        };
        let core = assignments
            .iter()
            .filter(|a| {
                frame
                    .element_by_id(&a.element)
                    .is_some_and(|e| e.coreness == Coreness::Core)
            })
            .count();
        if best.as_ref().is_none_or(|(score, _, _)| core > *score) {
            best = Some((core, id.clone(), assignments));
        }
    }
    match best {
        Some((_, frame, assignments)) => PhraseParse::FerDraft { frame, assignments },
        None => reject(RejectReason::AmbiguousUnresolved),
    }
}

fn assign_all(frame: &Frame, fillers: &[Filler]) -> Option<Vec<FillerAssignment>> {
    let mut assigned = BTreeSet::new();
    let mut out = Vec::with_capacity(fillers.len());
    for filler in fillers {
        let element = assign_element(frame, &filler.slot, &assigned).ok()?;
        assigned.insert(element.id.clone());
        out.push(FillerAssignment {
            element: element.id.clone(),
            filler_lemma: filler.lemma.clone(),
            ty: filler.ty.clone(),
        });
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Assertion {
    pub line: usize,
    pub start: String,
    pub relation: RelationType,
    pub end: String,
    pub weight: f64,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Start,
    End,
    Both,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Start => "start",
            Side::End => "end",
            Side::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub assertion: Assertion,
    pub side: Side,
    pub reasons: Vec<RejectReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FerIngestReport {
    pub assertions: usize,
    pub fers_created: usize,
    /// Materialized assertions whose endpoints are both frames.
    pub frame_edges: usize,
    /// Materialized assertions with at least one FER endpoint.
    pub fer_edges: usize,
    /// Materialized assertions whose edge was already present.
    pub duplicate_edges: usize,
    pub rejected: Vec<Rejection>,
}

pub fn parse_assertions(text: &str) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    for rec in records(text) {
        rec.expect_len(3, 5)?;
        let relation: RelationType = rec
            .field(1, "relation")?
            .parse()
            .map_err(|e: String| Error::parse(rec.line, e))?;
        if relation.family() != RelationFamily::Commonsense {
            return Err(Error::parse(
                rec.line,
                format!("`{relation}` is not a commonsense relation"),
            ));
        }
        let weight = match rec.get(3).map(str::trim).filter(|w| !w.is_empty()) {
            None => 1.0,
            Some(w) => w
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w > 0.0)
                .ok_or_else(|| Error::parse(rec.line, format!("bad weight `{w}`")))?,
        };
        out.push(Assertion {
            line: rec.line,
            start: rec.field(0, "start phrase")?.to_string(),
            relation,
            end: rec.field(2, "end phrase")?.to_string(),
            weight,
            source: rec.get(4).unwrap_or("").trim().to_string(),
        });
    }
    Ok(out)
}

/// Parses both phrases of every assertion and materializes the ones where
/// both sides parse. Rejected assertions write nothing.
pub fn ingest_assertions(store: &mut Store, text: &str) -> Result<FerIngestReport> {
    store.ensure_building()?;
    let assertions = parse_assertions(text)?;
    let lexicon = store.lexicon().into_owned();
    let annotated: BTreeMap<String, NodeId> = store
        .fers()
        .filter(|f| f.provenance == FerProvenance::Annotated)
        .map(|f| (f.surface_form.clone(), f.id.clone()))
        .collect();
    let mut report = FerIngestReport {
        assertions: assertions.len(),
        ..Default::default()
    };
    for assertion in assertions {
        let start = parse_phrase(&lexicon, &assertion.start, DEFAULT_LANGUAGE);
        let end = parse_phrase(&lexicon, &assertion.end, DEFAULT_LANGUAGE);
        let side = match (start.reject_reason(), end.reject_reason()) {
            (None, None) => None,
            (Some(a), None) => Some((Side::Start, vec![a])),
            (None, Some(b)) => Some((Side::End, vec![b])),
            (Some(a), Some(b)) => Some((Side::Both, vec![a, b])),
        };
        if let Some((side, reasons)) = side {
            report.rejected.push(Rejection {
                assertion,
                side,
                reasons,
            });
            continue;
        }
        let from = materialize(store, &start, &assertion.start, &annotated, &mut report)?;
        let to = materialize(store, &end, &assertion.end, &annotated, &mut report)?;
        let both_frames = from.kind() == crate::NodeKind::Frame && to.kind() == crate::NodeKind::Frame;
        let edge = Edge::new(assertion.relation, from, to)
            .weighted(assertion.weight)
            .from_source(&assertion.source);
        if !store.put_edge(edge)? {
            report.duplicate_edges += 1;
        }
        if both_frames {
            report.frame_edges += 1;
        } else {
            report.fer_edges += 1;
        }
    }
    Ok(report)
}

fn materialize(
    store: &mut Store,
    parse: &PhraseParse,
    phrase: &str,
    annotated: &BTreeMap<String, NodeId>,
    report: &mut FerIngestReport,
) -> Result<NodeId> {
    match parse {
        PhraseParse::FrameRef { frame } => Ok(frame.clone()),
        PhraseParse::FerDraft { frame, assignments } => {
            let surface = normalize(phrase);
            if let Some(id) = annotated.get(&surface) {
                return Ok(id.clone());
            }
            let restrictions = assignments
                .iter()
                .map(|a| (a.element.clone(), a.ty.clone()))
                .collect();
            let fer = Fer::new(
                frame.clone(),
                restrictions,
                &surface,
                DEFAULT_LANGUAGE,
                FerProvenance::Automatic,
            );
            if store.fer(&fer.id).is_none() {
                report.fers_created += 1;
            }
            store.put_node(fer)
        }
        PhraseParse::Reject { .. } => unreachable!("rejections are filtered before materializing"),
    }
}

pub const NEEDS_ANNOTATION_HEADER: &str =
    "# startPhrase\trelation\tendPhrase\tweight\tsource\tside\treason";

/// Rejected assertions as TSV: the assertion fields, the failing side and
/// the comma-separated reason codes.
pub fn write_needs_annotation(rejected: &[Rejection], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{NEEDS_ANNOTATION_HEADER}")?;
    for r in rejected {
        let a = &r.assertion;
        let reasons: Vec<&str> = r.reasons.iter().map(|x| x.code()).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            a.start,
            a.relation,
            a.end,
            a.weight,
            a.source,
            r.side.as_str(),
            reasons.join(",")
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub line: usize,
    pub surface_form: String,
    pub frame: String,
    pub restrictions: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotationReport {
    pub fers_created: usize,
    pub fers_replaced: usize,
    pub edges_repointed: usize,
    pub warnings: Vec<String>,
}

pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for rec in records(text) {
        rec.expect_len(3, 3)?;
        let mut restrictions = Vec::new();
        for item in rec.field(2, "restrictions")?.split(';') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (element, key) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(rec.line, format!("expected Element=type in `{item}`")))?;
            restrictions.push((element.trim().to_string(), key.trim().to_string()));
        }
        if restrictions.is_empty() {
            return Err(Error::parse(rec.line, "annotation without restrictions"));
        }
        out.push(AnnotationRecord {
            line: rec.line,
            surface_form: rec.field(0, "surface form")?.to_string(),
            frame: rec.field(1, "frame")?.to_string(),
            restrictions,
        });
    }
    Ok(out)
}

/// Creates annotated FERs. An annotated record replaces every other FER
/// with the same normalized surface form; their edges move to the new node.
pub fn import_annotations(store: &mut Store, text: &str) -> Result<AnnotationReport> {
    store.ensure_building()?;
    let records = parse_annotations(text)?;
    let mut fers = Vec::with_capacity(records.len());
    for rec in &records {
        let record = format!("{}\t{}", rec.surface_form, rec.frame);
        let unresolved = |field, name: &str| Error::UnresolvedName {
            record: record.clone(),
            field,
            name: name.to_string(),
        };
        let frame = store
            .frame_by_name(&rec.frame)
            .filter(|f| !f.is_elementless())
            .ok_or_else(|| unresolved("frame", &rec.frame))?;
        let mut restrictions = BTreeMap::new();
        for (element, key) in &rec.restrictions {
            let e = frame.element(element).ok_or_else(|| unresolved("element", element))?;
            let ty = NodeId::taxonomy(key);
            if !crate::ids::is_name(key) || store.taxonomy_type(&ty).is_none() {
                return Err(unresolved("type", key));
            }
            if restrictions.insert(e.id.clone(), ty).is_some() {
                return Err(Error::parse(rec.line, format!("element `{element}` restricted twice")));
            }
        }
        fers.push(Fer::new(
            frame.id.clone(),
            restrictions,
            &normalize(&rec.surface_form),
            DEFAULT_LANGUAGE,
            FerProvenance::Annotated,
        ));
    }

    let mut report = AnnotationReport::default();
    for fer in fers {
        let replaced: Vec<NodeId> = store
            .fers()
            .filter(|f| f.surface_form == fer.surface_form && f.id != fer.id)
            .map(|f| f.id.clone())
            .collect();
        if store.fer(&fer.id).is_none() {
            report.fers_created += 1;
        }
        let id = store.put_node(fer)?;
        for old in replaced {
            report.edges_repointed += store.edges().filter(|e| e.from == old || e.to == old).count();
            store.replace_fer(&old, &id)?;
            report.fers_replaced += 1;
            report
                .warnings
                .push(format!("{old} replaced by annotated {id}"));
        }
    }
    Ok(report)
}
