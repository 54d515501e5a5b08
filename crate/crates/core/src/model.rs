//! Typed records for the three knowledge levels and the edges between them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coreness {
    Core,
    Peripheral,
    Extrathematic,
}

impl Coreness {
    pub fn as_str(self) -> &'static str {
        match self {
            Coreness::Core => "core",
            Coreness::Peripheral => "peripheral",
            Coreness::Extrathematic => "extrathematic",
        }
    }
}

impl FromStr for Coreness {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "core" => Ok(Coreness::Core),
            "peripheral" => Ok(Coreness::Peripheral),
            "extrathematic" => Ok(Coreness::Extrathematic),
            other => Err(format!("unknown coreness `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    V,
    N,
    A,
    Adv,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::V => "v",
            Pos::N => "n",
            Pos::A => "a",
            Pos::Adv => "adv",
        }
    }
}

impl FromStr for Pos {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "v" => Ok(Pos::V),
            "n" => Ok(Pos::N),
            "a" => Ok(Pos::A),
            "adv" => Ok(Pos::Adv),
            other => Err(format!("unknown part of speech `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LexicalUnit {
    pub lemma: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceRef {
    pub source: String,
    pub id: String,
}

impl SourceRef {
    pub fn new(source: impl Into<String>, id: impl Into<String>) -> Self {
        SourceRef {
            source: source.into(),
            id: id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameElement {
    pub id: NodeId,
    pub frame: NodeId,
    pub name: String,
    pub coreness: Coreness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub id: NodeId,
    pub name: String,
    pub definition: String,
    pub language: String,
    /// Declaration order is significant for element assignment.
    pub elements: Vec<FrameElement>,
    pub lexical_units: BTreeSet<LexicalUnit>,
    /// Syntactic slot (`object`, `oblique`, `oblique:<prep>`) to element name.
    pub roles: BTreeMap<String, String>,
    pub source_refs: BTreeSet<SourceRef>,
}

impl Frame {
    pub fn new(name: &str, definition: &str, language: &str) -> Self {
        Frame {
            id: NodeId::frame(name),
            name: name.to_string(),
            definition: definition.to_string(),
            language: language.to_string(),
            elements: Vec::new(),
            lexical_units: BTreeSet::new(),
            roles: BTreeMap::new(),
            source_refs: BTreeSet::new(),
        }
    }

    pub fn with_element(mut self, name: &str, coreness: Coreness) -> Self {
        self.add_element(name, coreness);
        self
    }

    pub fn with_lexical_unit(mut self, lemma: &str, pos: Pos) -> Self {
        self.lexical_units.insert(LexicalUnit {
            lemma: crate::text::normalize(lemma),
            pos,
        });
        self
    }

    /// Adds or updates an element; returns true when it was new.
    pub fn add_element(&mut self, name: &str, coreness: Coreness) -> bool {
        if let Some(existing) = self.elements.iter_mut().find(|e| e.name == name) {
            existing.coreness = coreness;
            return false;
        }
        self.elements.push(FrameElement {
            id: NodeId::element(&self.name, name),
            frame: self.id.clone(),
            name: name.to_string(),
            coreness,
        });
        true
    }

    pub fn element(&self, name: &str) -> Option<&FrameElement> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn element_by_id(&self, id: &NodeId) -> Option<&FrameElement> {
        self.elements.iter().find(|e| &e.id == id)
    }

    pub fn is_elementless(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn core_elements(&self) -> impl Iterator<Item = &FrameElement> {
        self.elements
            .iter()
            .filter(|e| e.coreness == Coreness::Core)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyType {
    pub id: NodeId,
    pub key: String,
    pub gloss: String,
    /// Normalized lemma to sense rank (1 = first sense).
    pub lemmas: BTreeMap<String, u32>,
    pub hypernyms: BTreeSet<NodeId>,
    /// Designated roots are the only types allowed to lack hypernyms.
    pub root: bool,
}

impl TaxonomyType {
    pub fn new(key: &str, gloss: &str) -> Self {
        TaxonomyType {
            id: NodeId::taxonomy(key),
            key: key.to_string(),
            gloss: gloss.to_string(),
            lemmas: BTreeMap::new(),
            hypernyms: BTreeSet::new(),
            root: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FerProvenance {
    Automatic,
    Annotated,
}

impl FerProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            FerProvenance::Automatic => "automatic",
            FerProvenance::Annotated => "annotated",
        }
    }
}

/// Frame with element restrictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fer {
    pub id: NodeId,
    pub frame: NodeId,
    /// Element id to taxonomy type id; one restriction per element.
    pub restrictions: BTreeMap<NodeId, NodeId>,
    pub surface_form: String,
    pub language: String,
    pub provenance: FerProvenance,
}

impl Fer {
    pub fn new(
        frame: NodeId,
        restrictions: BTreeMap<NodeId, NodeId>,
        surface_form: &str,
        language: &str,
        provenance: FerProvenance,
    ) -> Self {
        let id = Self::content_id(&frame, &restrictions, surface_form);
        Fer {
            id,
            frame,
            restrictions,
            surface_form: surface_form.to_string(),
            language: language.to_string(),
            provenance,
        }
    }

    pub fn content_id(
        frame: &NodeId,
        restrictions: &BTreeMap<NodeId, NodeId>,
        surface_form: &str,
    ) -> NodeId {
        let restrictions = restrictions
            .iter()
            .map(|(element, ty)| format!("{}={}", element_name(element), ty.local()))
            .collect::<Vec<_>>()
            .join(";");
        NodeId::hashed(
            NodeKind::Fer,
            &[frame.local(), &restrictions, surface_form],
        )
    }
}

/// The element name part of an `fe:` id.
pub fn element_name(id: &NodeId) -> &str {
    id.local().rsplit_once('/').map(|(_, n)| n).unwrap_or(id.local())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    DateTime,
}

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

impl Datatype {
    pub fn as_str(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::DateTime => "dateTime",
        }
    }

    pub fn iri(self) -> String {
        format!("{XSD}{}", self.as_str())
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        iri.strip_prefix(XSD).and_then(|l| l.parse().ok())
    }

    pub fn accepts(self, lexical: &str) -> bool {
        match self {
            Datatype::String => true,
            Datatype::Integer => {
                let digits = lexical.strip_prefix(['+', '-']).unwrap_or(lexical);
                !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
            }
            Datatype::Decimal => {
                let body = lexical.strip_prefix(['+', '-']).unwrap_or(lexical);
                let (int, frac) = body.split_once('.').unwrap_or((body, ""));
                (!int.is_empty() || !frac.is_empty())
                    && int.bytes().all(|b| b.is_ascii_digit())
                    && frac.bytes().all(|b| b.is_ascii_digit())
            }
            Datatype::DateTime => {
                chrono::DateTime::parse_from_rfc3339(lexical).is_ok()
                    || chrono::NaiveDateTime::parse_from_str(lexical, "%Y-%m-%dT%H:%M:%S%.f")
                        .is_ok()
            }
        }
    }
}

impl FromStr for Datatype {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "string" => Ok(Datatype::String),
            "integer" => Ok(Datatype::Integer),
            "decimal" => Ok(Datatype::Decimal),
            "dateTime" => Ok(Datatype::DateTime),
            other => Err(format!("unsupported datatype `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Datatype,
}

impl Literal {
    pub fn new(lexical: impl Into<String>, datatype: Datatype) -> Result<Self> {
        let lexical = lexical.into();
        if !datatype.accepts(&lexical) {
            return Err(Error::Datatype {
                lexical,
                datatype: datatype.as_str().to_string(),
            });
        }
        Ok(Literal { lexical, datatype })
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: Datatype::String,
        }
    }

    pub fn integer(value: i64) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Datatype::Integer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Value {
    Entity(NodeId),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceProvenance {
    pub source: String,
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameInstance {
    pub id: NodeId,
    pub frame: NodeId,
    pub bindings: BTreeMap<NodeId, Value>,
    pub provenance: InstanceProvenance,
}

impl FrameInstance {
    pub fn new(
        frame: NodeId,
        bindings: BTreeMap<NodeId, Value>,
        provenance: InstanceProvenance,
    ) -> Self {
        FrameInstance {
            id: Self::content_id(&provenance),
            frame,
            bindings,
            provenance,
        }
    }

    pub fn content_id(p: &InstanceProvenance) -> NodeId {
        NodeId::hashed(
            NodeKind::Instance,
            &[&p.source, &p.subject, &p.predicate, &p.object],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: NodeId,
    pub label: String,
    pub alt_labels: BTreeSet<String>,
    pub types: BTreeSet<NodeId>,
    pub source_refs: BTreeSet<SourceRef>,
}

impl Entity {
    pub fn new(first: SourceRef, label: &str) -> Self {
        let id = Self::content_id(&first);
        let mut source_refs = BTreeSet::new();
        source_refs.insert(first);
        Entity {
            id,
            label: label.to_string(),
            alt_labels: BTreeSet::new(),
            types: BTreeSet::new(),
            source_refs,
        }
    }

    pub fn content_id(source: &SourceRef) -> NodeId {
        NodeId::hashed(NodeKind::Entity, &[&source.source, &source.id])
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str()).chain(self.alt_labels.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationType {
    #[serde(rename = "inheritsFrom")]
    InheritsFrom,
    #[serde(rename = "uses")]
    Uses,
    #[serde(rename = "subframeOf")]
    SubframeOf,
    #[serde(rename = "precedes")]
    Precedes,
    #[serde(rename = "hasPrerequisite")]
    HasPrerequisite,
    #[serde(rename = "causes")]
    Causes,
    #[serde(rename = "motivatedByGoal")]
    MotivatedByGoal,
    #[serde(rename = "usedFor")]
    UsedFor,
    #[serde(rename = "capableOf")]
    CapableOf,
    #[serde(rename = "hasSubevent")]
    HasSubevent,
    #[serde(rename = "isA")]
    IsA,
    #[serde(rename = "concretizes")]
    Concretizes,
    #[serde(rename = "sameAs")]
    SameAs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationFamily {
    Frame,
    Commonsense,
    Structural,
}

impl RelationType {
    pub const ALL: [RelationType; 13] = [
        RelationType::InheritsFrom,
        RelationType::Uses,
        RelationType::SubframeOf,
        RelationType::Precedes,
        RelationType::HasPrerequisite,
        RelationType::Causes,
        RelationType::MotivatedByGoal,
        RelationType::UsedFor,
        RelationType::CapableOf,
        RelationType::HasSubevent,
        RelationType::IsA,
        RelationType::Concretizes,
        RelationType::SameAs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::InheritsFrom => "inheritsFrom",
            RelationType::Uses => "uses",
            RelationType::SubframeOf => "subframeOf",
            RelationType::Precedes => "precedes",
            RelationType::HasPrerequisite => "hasPrerequisite",
            RelationType::Causes => "causes",
            RelationType::MotivatedByGoal => "motivatedByGoal",
            RelationType::UsedFor => "usedFor",
            RelationType::CapableOf => "capableOf",
            RelationType::HasSubevent => "hasSubevent",
            RelationType::IsA => "isA",
            RelationType::Concretizes => "concretizes",
            RelationType::SameAs => "sameAs",
        }
    }

    pub fn family(self) -> RelationFamily {
        use RelationType::*;
        match self {
            InheritsFrom | Uses | SubframeOf | Precedes => RelationFamily::Frame,
            Concretizes | SameAs => RelationFamily::Structural,
            _ => RelationFamily::Commonsense,
        }
    }

    /// Legal (from, to) kinds.
    pub fn allows(self, from: NodeKind, to: NodeKind) -> bool {
        use NodeKind::*;
        match self.family() {
            RelationFamily::Frame => from == Frame && to == Frame,
            RelationFamily::Commonsense => matches!(from, Frame | Fer) && matches!(to, Frame | Fer),
            RelationFamily::Structural => match self {
                RelationType::Concretizes => matches!(
                    (from, to),
                    (Fer, Frame) | (Instance, Fer) | (Instance, Frame)
                ),
                _ => from == Entity && to == Entity,
            },
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = String;
    /// Accepts the registry name in any letter case (`HasPrerequisite` too).
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown relation `{s}`"))
    }
}

impl PartialOrd for RelationType {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RelationType {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_str().cmp(other.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub relation: RelationType,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub provenance: String,
}

impl Edge {
    pub fn new(relation: RelationType, from: NodeId, to: NodeId) -> Self {
        Edge {
            relation,
            from,
            to,
            weight: 1.0,
            provenance: String::new(),
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn from_source(mut self, source: &str) -> Self {
        self.provenance = source.to_string();
        self
    }
}

/// Any record that can be stored with `Store::put_node`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Frame(Frame),
    Fer(Fer),
    Instance(FrameInstance),
    Entity(Entity),
    Taxonomy(TaxonomyType),
}

impl Node {
    pub fn id(&self) -> &NodeId {
        match self {
            Node::Frame(n) => &n.id,
            Node::Fer(n) => &n.id,
            Node::Instance(n) => &n.id,
            Node::Entity(n) => &n.id,
            Node::Taxonomy(n) => &n.id,
        }
    }
}

macro_rules! node_from {
    ($($variant:ident($ty:ty)),*) => {
        $(impl From<$ty> for Node {
            fn from(value: $ty) -> Self {
                Node::$variant(value)
            }
        })*
    };
}

node_from!(
    Frame(Frame),
    Fer(Fer),
    Instance(FrameInstance),
    Entity(Entity),
    Taxonomy(TaxonomyType)
);
