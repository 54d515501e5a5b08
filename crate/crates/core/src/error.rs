use thiserror::Error;

use crate::ids::NodeId;
use crate::store::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("store is frozen; mutation rejected")]
    Frozen,
    #[error("store is still building; operation requires a frozen store")]
    NotFrozen,
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("relation `{relation}` does not accept {from} -> {to}")]
    EndpointKind {
        relation: String,
        from: NodeId,
        to: NodeId,
    },
    #[error("no such node: {0}")]
    MissingNode(String),
    #[error("validation failed with {} violation(s)", .0.violations.len())]
    ValidationFailed(ValidationReport),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate key `{key}` at line {line}")]
    DuplicateKey { key: String, line: usize },
    #[error("unresolved {field} `{name}` in record `{record}`")]
    UnresolvedName {
        record: String,
        field: &'static str,
        name: String,
    },
    #[error("no taxonomy type has lemma `{0}`")]
    UnknownLemma(String),
    #[error("frame `{0}` has no assignable element left")]
    NoAssignableElement(String),
    #[error("`{lexical}` is not a valid {datatype}")]
    Datatype { lexical: String, datatype: String },
    #[error("line {line}: unknown vocabulary `{term}`")]
    Vocabulary { line: usize, term: String },
    #[error("cannot reconstruct records: {0}")]
    Reconstruction(String),
    #[error("taxonomy contains a cycle through {}", fmt_cycle(.0))]
    TaxonomyCycle(Vec<NodeId>),
    #[error("empty query")]
    EmptyQuery,
    #[error("projected variable ?{0} does not occur in any pattern")]
    UnboundProjection(String),
    #[error("malformed query: {0}")]
    MalformedQuery(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_cycle(ids: &[NodeId]) -> String {
    ids.iter().map(NodeId::as_str).collect::<Vec<_>>().join(" -> ")
}

impl Error {
    /// Stable machine-readable code, used in CLI and HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Frozen | Error::NotFrozen => "PhaseError",
            Error::Invariant(_) => "InvariantError",
            Error::EndpointKind { .. } => "EndpointKindError",
            Error::MissingNode(_) => "MissingNodeError",
            Error::ValidationFailed(_) => "ValidationFailed",
            Error::Parse { .. } => "ParseError",
            Error::DuplicateKey { .. } => "DuplicateKey",
            Error::UnresolvedName { .. } => "UnresolvedName",
            Error::UnknownLemma(_) => "UnknownLemma",
            Error::NoAssignableElement(_) => "NoAssignableElement",
            Error::Datatype { .. } => "DatatypeError",
            Error::Vocabulary { .. } => "VocabularyError",
            Error::Reconstruction(_) => "ReconstructionError",
            Error::TaxonomyCycle(_) => "TaxonomyCycle",
            Error::EmptyQuery => "EmptyQuery",
            Error::UnboundProjection(_) => "UnboundProjection",
            Error::MalformedQuery(_) => "MalformedQuery",
            Error::Manifest(_) => "ManifestError",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}
