//! Typed node/edge store with a build-then-freeze lifecycle.
//!
//! During the build phase records are inserted and validated individually.
//! `freeze` runs the cross-record checks (taxonomy acyclicity, dangling
//! references), then builds every secondary index and the triple projection.
//! A frozen store is immutable and `Sync`, so it can be shared behind an
//! `Arc` by any number of readers.

mod triples;
mod validate;

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use triples::{Triple, TripleIndex, TermId};
pub use validate::{ValidationReport, Violation};

use crate::error::{Error, Result};
use crate::fer::Lexicon;
use crate::ids::{is_name, NodeId, NodeKind};
use crate::model::{
    Edge, Entity, Fer, Frame, FrameElement, FrameInstance, LexicalUnit, Node, Pos, RelationType,
    SourceRef, TaxonomyType, Value,
};
use crate::query::TrigramIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Building,
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outgoing,
    Incoming,
}

pub(crate) type EdgeKey = (RelationType, NodeId, NodeId);

struct FrozenState {
    projection: Vec<Triple>,
    index: TripleIndex,
    lexical_units: BTreeMap<LexicalUnit, BTreeSet<NodeId>>,
    adjacency: BTreeMap<NodeId, Vec<(EdgeKey, Direction)>>,
    trigrams: TrigramIndex,
    lexicon: Lexicon,
}

#[derive(Default)]
pub struct Store {
    frames: BTreeMap<NodeId, Frame>,
    fers: BTreeMap<NodeId, Fer>,
    instances: BTreeMap<NodeId, FrameInstance>,
    entities: BTreeMap<NodeId, Entity>,
    taxonomy: BTreeMap<NodeId, TaxonomyType>,
    /// Retired entity id to the entity it was merged into.
    retired: BTreeMap<NodeId, NodeId>,
    edges: BTreeMap<EdgeKey, Edge>,
    element_frame: BTreeMap<NodeId, NodeId>,
    entity_by_source: BTreeMap<SourceRef, NodeId>,
    frozen: Option<Box<FrozenState>>,
}

/// Serializable snapshot of the records of a building store.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StoreState {
    pub frames: Vec<Frame>,
    pub taxonomy: Vec<TaxonomyType>,
    pub fers: Vec<Fer>,
    pub entities: Vec<Entity>,
    pub instances: Vec<FrameInstance>,
    pub retired: Vec<(NodeId, NodeId)>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoreStats {
    pub phase: Phase,
    pub nodes: BTreeMap<&'static str, usize>,
    #[serde(rename = "retiredEntities")]
    pub retired_entities: usize,
    pub edges: BTreeMap<&'static str, usize>,
    #[serde(rename = "edgeTotal")]
    pub edge_total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triples: Option<usize>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("phase", &self.phase())
            .field("stats", &self.stats())
            .finish()
    }
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self) -> Phase {
        if self.frozen.is_some() {
            Phase::Frozen
        } else {
            Phase::Building
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    pub(crate) fn ensure_building(&self) -> Result<()> {
        if self.is_frozen() {
            Err(Error::Frozen)
        } else {
            Ok(())
        }
    }

    fn frozen(&self) -> Result<&FrozenState> {
        self.frozen.as_deref().ok_or(Error::NotFrozen)
    }

    // ---- insertion ------------------------------------------------------

    /// Validates and upserts a record. Identical content maps to the same id.
    pub fn put_node(&mut self, node: impl Into<Node>) -> Result<NodeId> {
        self.ensure_building()?;
        let node = node.into();
        self.check_node(&node)?;
        let id = node.id().clone();
        match node {
            Node::Frame(frame) => {
                self.element_frame
                    .retain(|_, owner| owner != &frame.id);
                for element in &frame.elements {
                    self.element_frame
                        .insert(element.id.clone(), frame.id.clone());
                }
                self.frames.insert(id.clone(), frame);
            }
            Node::Fer(fer) => {
                self.fers.insert(id.clone(), fer);
            }
            Node::Instance(fi) => {
                self.instances.insert(id.clone(), fi);
            }
            Node::Entity(entity) => {
                if let Some(old) = self.entities.get(&id) {
                    for sr in &old.source_refs {
                        self.entity_by_source.remove(sr);
                    }
                }
                for sr in &entity.source_refs {
                    self.entity_by_source.insert(sr.clone(), id.clone());
                }
                self.entities.insert(id.clone(), entity);
            }
            Node::Taxonomy(ty) => {
                self.taxonomy.insert(id.clone(), ty);
            }
        }
        Ok(id)
    }

    fn check_node(&self, node: &Node) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        match node {
            Node::Frame(frame) => {
                if !is_name(&frame.name) || frame.id != NodeId::frame(&frame.name) {
                    return fail(format!("bad frame name `{}`", frame.name));
                }
                let mut names = BTreeSet::new();
                for e in &frame.elements {
                    if !is_name(&e.name) || !names.insert(e.name.as_str()) {
                        return fail(format!(
                            "frame `{}`: element name `{}` invalid or repeated",
                            frame.name, e.name
                        ));
                    }
                    if e.frame != frame.id || e.id != NodeId::element(&frame.name, &e.name) {
                        return fail(format!(
                            "element `{}` does not belong to `{}`",
                            e.id, frame.id
                        ));
                    }
                }
                for (slot, element) in &frame.roles {
                    if crate::fer::Slot::parse(slot).is_none() {
                        return fail(format!("frame `{}`: unknown slot `{slot}`", frame.name));
                    }
                    if frame.element(element).is_none() {
                        return fail(format!(
                            "frame `{}`: role `{slot}` names unknown element `{element}`",
                            frame.name
                        ));
                    }
                }
                if frame.lexical_units.iter().any(|lu| lu.lemma.is_empty()) {
                    return fail(format!("frame `{}`: empty lexical unit", frame.name));
                }
                if let Some(current) = self.frames.get(&frame.id) {
                    for e in &current.elements {
                        if frame.element_by_id(&e.id).is_none() && self.element_in_use(&e.id) {
                            return fail(format!("cannot drop element `{}` that is in use", e.id));
                        }
                    }
                }
            }
            Node::Fer(fer) => {
                if fer.id != Fer::content_id(&fer.frame, &fer.restrictions, &fer.surface_form) {
                    return fail(format!("FER id `{}` does not match its content", fer.id));
                }
                let frame = self.anchor_frame(&fer.frame)?;
                if fer.restrictions.is_empty() {
                    return fail(format!("FER `{}` has no restriction", fer.surface_form));
                }
                if fer.surface_form.trim().is_empty() {
                    return fail("FER with empty surface form".into());
                }
                for (element, ty) in &fer.restrictions {
                    if frame.element_by_id(element).is_none() {
                        return fail(format!(
                            "restriction element `{element}` is not in frame `{}`",
                            frame.name
                        ));
                    }
                    if !self.taxonomy.contains_key(ty) {
                        return fail(format!("restriction type `{ty}` is not a taxonomy type"));
                    }
                }
            }
            Node::Instance(fi) => {
                if fi.id != FrameInstance::content_id(&fi.provenance) {
                    return fail(format!("instance id `{}` does not match provenance", fi.id));
                }
                let frame = self.anchor_frame(&fi.frame)?;
                if fi.bindings.is_empty() {
                    return fail(format!("instance `{}` has no binding", fi.id));
                }
                for (element, value) in &fi.bindings {
                    if frame.element_by_id(element).is_none() {
                        return fail(format!(
                            "binding element `{element}` is not in frame `{}`",
                            frame.name
                        ));
                    }
                    if let Value::Entity(en) = value {
                        if !self.entities.contains_key(en) {
                            return fail(format!("binding refers to unknown entity `{en}`"));
                        }
                    }
                    if let Value::Literal(lit) = value {
                        if !lit.datatype.accepts(&lit.lexical) {
                            return fail(format!(
                                "`{}` is not a valid {}",
                                lit.lexical,
                                lit.datatype.as_str()
                            ));
                        }
                    }
                }
            }
            Node::Entity(entity) => {
                if entity.label.trim().is_empty() {
                    return fail(format!("entity `{}` has an empty label", entity.id));
                }
                if !entity
                    .source_refs
                    .iter()
                    .any(|sr| Entity::content_id(sr) == entity.id)
                {
                    return fail(format!(
                        "entity id `{}` is not derived from any of its source refs",
                        entity.id
                    ));
                }
                for sr in &entity.source_refs {
                    if let Some(owner) = self.entity_by_source.get(sr) {
                        if owner != &entity.id {
                            return fail(format!(
                                "source ref ({}, {}) already belongs to `{owner}`",
                                sr.source, sr.id
                            ));
                        }
                    }
                }
                for ty in &entity.types {
                    if !self.taxonomy.contains_key(ty) {
                        return fail(format!("entity type `{ty}` is not a taxonomy type"));
                    }
                }
            }
            Node::Taxonomy(ty) => {
                if !is_name(&ty.key) || ty.id != NodeId::taxonomy(&ty.key) {
                    return fail(format!("bad taxonomy key `{}`", ty.key));
                }
                if ty.lemmas.values().any(|&rank| rank == 0) {
                    return fail(format!("`{}`: sense ranks start at 1", ty.key));
                }
                if ty.hypernyms.iter().any(|h| h.kind() != NodeKind::Taxonomy) {
                    return fail(format!("`{}`: hypernyms must be taxonomy types", ty.key));
                }
            }
        }
        Ok(())
    }

    fn anchor_frame(&self, id: &NodeId) -> Result<&Frame> {
        let frame = self
            .frames
            .get(id)
            .ok_or_else(|| Error::MissingNode(id.to_string()))?;
        if frame.is_elementless() {
            return Err(Error::Invariant(format!(
                "frame `{}` is elementless and cannot anchor FERs or instances",
                frame.name
            )));
        }
        Ok(frame)
    }

    fn element_in_use(&self, element: &NodeId) -> bool {
        self.fers.values().any(|f| f.restrictions.contains_key(element))
            || self.instances.values().any(|i| i.bindings.contains_key(element))
    }

    /// Inserts an edge unless `(relation, from, to)` is already present.
    pub fn put_edge(&mut self, edge: Edge) -> Result<bool> {
        self.ensure_building()?;
        for end in [&edge.from, &edge.to] {
            if !self.contains(end) {
                return Err(Error::MissingNode(end.to_string()));
            }
        }
        if !edge.relation.allows(edge.from.kind(), edge.to.kind()) {
            return Err(Error::EndpointKind {
                relation: edge.relation.to_string(),
                from: edge.from,
                to: edge.to,
            });
        }
        if !(edge.weight.is_finite() && edge.weight > 0.0) {
            return Err(Error::Invariant(format!(
                "edge weight must be positive, got {}",
                edge.weight
            )));
        }
        let key = (edge.relation, edge.from.clone(), edge.to.clone());
        if self.edges.contains_key(&key) {
            return Ok(false);
        }
        self.edges.insert(key, edge);
        Ok(true)
    }

    // ---- internal mutation used by pipelines ----------------------------

    /// Removes a FER, re-pointing its commonsense edges to `replacement`.
    /// Its `concretizes` edges are dropped; linking recomputes them.
    pub(crate) fn replace_fer(&mut self, old: &NodeId, replacement: &NodeId) -> Result<()> {
        self.ensure_building()?;
        self.fers.remove(old);
        self.edges.retain(|(relation, from, to), _| {
            *relation != RelationType::Concretizes || (from != old && to != old)
        });
        self.repoint_edges(old, replacement);
        Ok(())
    }

    pub(crate) fn repoint_edges(&mut self, old: &NodeId, new: &NodeId) {
        let touched: Vec<EdgeKey> = self
            .edges
            .keys()
            .filter(|(_, from, to)| from == old || to == old)
            .cloned()
            .collect();
        for key in touched {
            let mut edge = self.edges.remove(&key).expect("key just listed");
            if &edge.from == old {
                edge.from = new.clone();
            }
            if &edge.to == old {
                edge.to = new.clone();
            }
            let key = (edge.relation, edge.from.clone(), edge.to.clone());
            self.edges.entry(key).or_insert(edge);
        }
    }

    /// Folds `retired` into `survivor`: bindings and edges are re-pointed and
    /// the retired id stays resolvable as an alias.
    pub(crate) fn retire_entity(&mut self, retired: &NodeId, survivor: &NodeId) -> Result<()> {
        self.ensure_building()?;
        let Some(old) = self.entities.remove(retired) else {
            return Err(Error::MissingNode(retired.to_string()));
        };
        for sr in &old.source_refs {
            self.entity_by_source.insert(sr.clone(), survivor.clone());
        }
        let target = self
            .entities
            .get_mut(survivor)
            .ok_or_else(|| Error::MissingNode(survivor.to_string()))?;
        if old.label != target.label {
            target.alt_labels.insert(old.label.clone());
        }
        for label in old.alt_labels {
            if label != target.label {
                target.alt_labels.insert(label);
            }
        }
        target.types.extend(old.types);
        target.source_refs.extend(old.source_refs);
        for fi in self.instances.values_mut() {
            for value in fi.bindings.values_mut() {
                if matches!(value, Value::Entity(e) if e == retired) {
                    *value = Value::Entity(survivor.clone());
                }
            }
        }
        for alias_target in self.retired.values_mut() {
            if alias_target == retired {
                *alias_target = survivor.clone();
            }
        }
        self.retired.insert(retired.clone(), survivor.clone());
        // Provenance edges that hung off the retired id move to the survivor.
        let outgoing: Vec<EdgeKey> = self
            .edges
            .keys()
            .filter(|(_, from, _)| from == retired)
            .cloned()
            .collect();
        for key in outgoing {
            let mut edge = self.edges.remove(&key).expect("listed");
            edge.from = survivor.clone();
            if edge.from != edge.to {
                let key = (edge.relation, edge.from.clone(), edge.to.clone());
                self.edges.entry(key).or_insert(edge);
            }
        }
        Ok(())
    }

    pub(crate) fn insert_retired_alias(&mut self, retired: NodeId, survivor: NodeId) {
        self.retired.insert(retired, survivor);
    }

    // ---- lifecycle ------------------------------------------------------

    /// Validates the whole store and, when clean, builds all indexes and
    /// switches to the frozen phase. On failure the store keeps building.
    pub fn freeze(&mut self) -> Result<ValidationReport> {
        self.ensure_building()?;
        let report = self.validate();
        if !report.is_clean() {
            return Err(Error::ValidationFailed(report));
        }
        let projection = triples::project(self);
        let index = TripleIndex::build(&projection);
        let mut lexical_units: BTreeMap<LexicalUnit, BTreeSet<NodeId>> = BTreeMap::new();
        for frame in self.frames.values() {
            for lu in &frame.lexical_units {
                lexical_units
                    .entry(lu.clone())
                    .or_default()
                    .insert(frame.id.clone());
            }
        }
        let mut adjacency: BTreeMap<NodeId, Vec<(EdgeKey, Direction)>> = BTreeMap::new();
        for key in self.edges.keys() {
            adjacency
                .entry(key.1.clone())
                .or_default()
                .push((key.clone(), Direction::Outgoing));
            adjacency
                .entry(key.2.clone())
                .or_default()
                .push((key.clone(), Direction::Incoming));
        }
        for list in adjacency.values_mut() {
            list.sort_by(|(a, da), (b, db)| {
                let peer = |k: &EdgeKey, d: &Direction| match d {
                    Direction::Outgoing => k.2.clone(),
                    Direction::Incoming => k.1.clone(),
                };
                a.0.cmp(&b.0)
                    .then_with(|| peer(a, da).cmp(&peer(b, db)))
                    .then_with(|| da.cmp(db))
            });
        }
        let trigrams = TrigramIndex::build(self);
        let lexicon = Lexicon::snapshot(self);
        self.frozen = Some(Box::new(FrozenState {
            projection,
            index,
            lexical_units,
            adjacency,
            trigrams,
            lexicon,
        }));
        Ok(report)
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    // ---- read access ----------------------------------------------------

    pub fn frame(&self, id: &NodeId) -> Option<&Frame> {
        self.frames.get(id)
    }

    pub fn frame_by_name(&self, name: &str) -> Option<&Frame> {
        self.frames.get(&NodeId::frame(name))
    }

    /// Resolves an `fe:` id to its frame and element.
    pub fn element(&self, id: &NodeId) -> Option<(&Frame, &FrameElement)> {
        let frame = self.frames.get(self.element_frame.get(id)?)?;
        Some((frame, frame.element_by_id(id)?))
    }

    pub fn fer(&self, id: &NodeId) -> Option<&Fer> {
        self.fers.get(id)
    }

    pub fn instance(&self, id: &NodeId) -> Option<&FrameInstance> {
        self.instances.get(id)
    }

    pub fn entity(&self, id: &NodeId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn entity_by_source(&self, source: &SourceRef) -> Option<&Entity> {
        self.entities.get(self.entity_by_source.get(source)?)
    }

    pub fn taxonomy_type(&self, id: &NodeId) -> Option<&TaxonomyType> {
        self.taxonomy.get(id)
    }

    /// Entity a retired id was merged into.
    pub fn retired_into(&self, id: &NodeId) -> Option<&NodeId> {
        self.retired.get(id)
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.values()
    }

    pub fn fers(&self) -> impl Iterator<Item = &Fer> {
        self.fers.values()
    }

    pub fn instances(&self) -> impl Iterator<Item = &FrameInstance> {
        self.instances.values()
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn taxonomy_types(&self) -> impl Iterator<Item = &TaxonomyType> {
        self.taxonomy.values()
    }

    pub fn retired_aliases(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.retired.iter()
    }

    pub fn elements(&self) -> impl Iterator<Item = &FrameElement> {
        self.frames.values().flat_map(|f| f.elements.iter())
    }

    /// Edges in `(relation, from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge(&self, relation: RelationType, from: &NodeId, to: &NodeId) -> Option<&Edge> {
        self.edges.get(&(relation, from.clone(), to.clone()))
    }

    pub fn node_count(&self) -> usize {
        self.frames.len()
            + self.element_frame.len()
            + self.fers.len()
            + self.instances.len()
            + self.entities.len()
            + self.taxonomy.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// True when `id` names a stored node or a retired entity alias.
    pub fn contains(&self, id: &NodeId) -> bool {
        match id.kind() {
            NodeKind::Frame => self.frames.contains_key(id),
            NodeKind::Element => self.element_frame.contains_key(id),
            NodeKind::Fer => self.fers.contains_key(id),
            NodeKind::Instance => self.instances.contains_key(id),
            NodeKind::Entity => self.entities.contains_key(id) || self.retired.contains_key(id),
            NodeKind::Taxonomy => self.taxonomy.contains_key(id),
        }
    }

    /// Frames declaring `(lemma, pos)`, sorted by name. Uses the frozen index
    /// when available and a scan otherwise.
    pub fn lookup_lexical_unit(&self, lemma: &str, pos: Pos) -> Vec<&Frame> {
        let lu = LexicalUnit {
            lemma: crate::text::normalize(lemma),
            pos,
        };
        match &self.frozen {
            Some(state) => state
                .lexical_units
                .get(&lu)
                .into_iter()
                .flatten()
                .filter_map(|id| self.frames.get(id))
                .collect(),
            None => self
                .frames
                .values()
                .filter(|f| f.lexical_units.contains(&lu))
                .collect(),
        }
    }

    /// Parser snapshot; cached once frozen.
    pub fn lexicon(&self) -> Cow<'_, Lexicon> {
        match &self.frozen {
            Some(state) => Cow::Borrowed(&state.lexicon),
            None => Cow::Owned(Lexicon::snapshot(self)),
        }
    }

    pub fn project_triples(&self) -> Result<&[Triple]> {
        Ok(&self.frozen()?.projection)
    }

    pub fn triple_index(&self) -> Result<&TripleIndex> {
        Ok(&self.frozen()?.index)
    }

    pub fn trigram_index(&self) -> Result<&TrigramIndex> {
        Ok(&self.frozen()?.trigrams)
    }

    /// All edges touching `id`, sorted by (relation, peer id).
    pub fn neighbors(
        &self,
        id: &NodeId,
        relation: Option<RelationType>,
    ) -> Result<Vec<(&Edge, Direction)>> {
        let state = self.frozen()?;
        if !self.contains(id) {
            return Err(Error::MissingNode(id.to_string()));
        }
        Ok(state
            .adjacency
            .get(id)
            .into_iter()
            .flatten()
            .filter(|(key, _)| relation.is_none_or(|r| r == key.0))
            .map(|(key, dir)| (&self.edges[key], *dir))
            .collect())
    }

    pub fn stats(&self) -> StoreStats {
        let nodes = [
            ("sf", self.frames.len()),
            ("fe", self.element_frame.len()),
            ("fer", self.fers.len()),
            ("fi", self.instances.len()),
            ("en", self.entities.len()),
            ("tx", self.taxonomy.len()),
        ]
        .into_iter()
        .collect();
        let mut edges: BTreeMap<&'static str, usize> = BTreeMap::new();
        for (relation, _, _) in self.edges.keys() {
            *edges.entry(relation.as_str()).or_default() += 1;
        }
        StoreStats {
            phase: self.phase(),
            nodes,
            retired_entities: self.retired.len(),
            edges,
            edge_total: self.edges.len(),
            triples: self.frozen.as_ref().map(|s| s.projection.len()),
        }
    }

    // ---- build-state persistence ----------------------------------------

    pub fn to_state(&self) -> StoreState {
        StoreState {
            frames: self.frames.values().cloned().collect(),
            taxonomy: self.taxonomy.values().cloned().collect(),
            fers: self.fers.values().cloned().collect(),
            entities: self.entities.values().cloned().collect(),
            instances: self.instances.values().cloned().collect(),
            retired: self
                .retired
                .iter()
                .map(|(a, b)| (a.clone(), b.clone()))
                .collect(),
            edges: self.edges.values().cloned().collect(),
        }
    }

    /// Rebuilds a building-phase store, re-running every insertion check.
    pub fn from_state(state: StoreState) -> Result<Self> {
        let mut store = Store::new();
        for frame in state.frames {
            store.put_node(frame)?;
        }
        for ty in state.taxonomy {
            store.put_node(ty)?;
        }
        for fer in state.fers {
            store.put_node(fer)?;
        }
        for entity in state.entities {
            store.put_node(entity)?;
        }
        for fi in state.instances {
            store.put_node(fi)?;
        }
        for (retired, survivor) in state.retired {
            store.insert_retired_alias(retired, survivor);
        }
        for edge in state.edges {
            store.put_edge(edge)?;
        }
        Ok(store)
    }
}
