//! Kind-prefixed node identifiers.
//!
//! Every id is derived from record content, never from insertion order, so
//! two builds over the same inputs assign the same ids.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Frame,
    Element,
    Fer,
    Instance,
    Entity,
    Taxonomy,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Frame,
        NodeKind::Element,
        NodeKind::Fer,
        NodeKind::Instance,
        NodeKind::Entity,
        NodeKind::Taxonomy,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            NodeKind::Frame => "sf",
            NodeKind::Element => "fe",
            NodeKind::Fer => "fer",
            NodeKind::Instance => "fi",
            NodeKind::Entity => "en",
            NodeKind::Taxonomy => "tx",
        }
    }

    fn from_prefix(prefix: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.prefix() == prefix)
    }

    pub fn as_str(self) -> &'static str {
        self.prefix()
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

/// Prefix reserved for literal wrappers; never assigned to a stored node.
pub const LITERAL_PREFIX: &str = "lit";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn parse(raw: &str) -> Result<Self> {
        let (prefix, rest) = raw
            .split_once(':')
            .ok_or_else(|| Error::MissingNode(raw.to_string()))?;
        if prefix == LITERAL_PREFIX {
            return Err(Error::Invariant(format!(
                "`{raw}`: the `lit:` prefix is reserved for literals"
            )));
        }
        let kind =
            NodeKind::from_prefix(prefix).ok_or_else(|| Error::MissingNode(raw.to_string()))?;
        let ok = match kind {
            NodeKind::Element => match rest.split_once('/') {
                Some((frame, element)) => is_name(frame) && is_name(element),
                None => false,
            },
            _ => is_name(rest),
        };
        if !ok {
            return Err(Error::MissingNode(raw.to_string()));
        }
        Ok(NodeId(raw.to_string()))
    }

    pub fn frame(name: &str) -> Self {
        NodeId(format!("sf:{name}"))
    }

    pub fn element(frame: &str, element: &str) -> Self {
        NodeId(format!("fe:{frame}/{element}"))
    }

    pub fn taxonomy(key: &str) -> Self {
        NodeId(format!("tx:{key}"))
    }

    pub(crate) fn hashed(kind: NodeKind, parts: &[&str]) -> Self {
        NodeId(format!("{}:{}", kind.prefix(), content_hash(parts)))
    }

    pub fn kind(&self) -> NodeKind {
        let prefix = self.0.split(':').next().unwrap_or_default();
        NodeKind::from_prefix(prefix).expect("NodeId constructed with a known prefix")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The part after the kind prefix.
    pub fn local(&self) -> &str {
        self.0.split_once(':').map(|(_, l)| l).unwrap_or_default()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for NodeId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        NodeId::parse(&value)
    }
}

impl From<NodeId> for String {
    fn from(value: NodeId) -> Self {
        value.0
    }
}

/// Names usable inside ids and IRIs without escaping.
pub fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// First 16 hex digits of SHA-256 over the unit-separator-joined parts.
pub fn content_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update([0x1f]);
        }
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
