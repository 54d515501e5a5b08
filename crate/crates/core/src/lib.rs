//! Frame-semantic knowledge base engine.
//!
//! Knowledge lives on three levels: semantic frames (`sf:`) with their
//! elements, frames with element restrictions (`fer:`) derived from
//! commonsense phrases, and frame instances (`fi:`) built from world
//! triples. `concretizes` edges connect instances to restrictions to frames.
//!
//! A [`Store`] is filled by the ingest modules, linked, then frozen; a frozen
//! store serves search, pattern queries and N-Triples export.

pub mod error;
pub mod fer;
pub mod ids;
pub mod linker;
pub mod model;
pub mod pipeline;
pub mod query;
pub mod rdf;
pub mod schema;
pub mod store;
pub mod term;
pub mod text;
mod tsv;
pub mod vocab;
pub mod world;

pub use error::{Error, Result};
pub use ids::{NodeId, NodeKind};
pub use model::{
    Coreness, Datatype, Edge, Entity, Fer, FerProvenance, Frame, FrameElement, FrameInstance,
    InstanceProvenance, LexicalUnit, Literal, Node, Pos, RelationFamily, RelationType, SourceRef,
    TaxonomyType, Value,
};
pub use store::{Direction, Phase, Store, StoreState, StoreStats, ValidationReport, Violation};
pub use term::Term;
