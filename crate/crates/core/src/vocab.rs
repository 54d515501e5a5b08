//! IRI scheme of the exported vocabulary.

use crate::ids::{NodeId, NodeKind};
use crate::model::RelationType;

pub const NS: &str = "http://cognet.example/ns#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

pub mod class {
    pub const FRAME: &str = "http://cognet.example/ns#Frame";
    pub const ELEMENT: &str = "http://cognet.example/ns#FrameElement";
    pub const FER: &str = "http://cognet.example/ns#Fer";
    pub const ENTITY: &str = "http://cognet.example/ns#Entity";
    pub const TAXONOMY: &str = "http://cognet.example/ns#TaxonomyType";
    pub const TAXONOMY_ROOT: &str = "http://cognet.example/ns#TaxonomyRoot";
}

/// Attribute predicates, one per record field that is not part of the IRI.
pub mod attr {
    pub const DEFINITION: &str = "http://cognet.example/ns#definition";
    pub const LANGUAGE: &str = "http://cognet.example/ns#language";
    pub const LEXICAL_UNIT: &str = "http://cognet.example/ns#lexicalUnit";
    pub const SOURCE_REF: &str = "http://cognet.example/ns#sourceRef";
    pub const FRAME: &str = "http://cognet.example/ns#frame";
    pub const CORENESS: &str = "http://cognet.example/ns#coreness";
    pub const POSITION: &str = "http://cognet.example/ns#position";
    pub const ROLE_SLOT: &str = "http://cognet.example/ns#roleSlot";
    pub const SURFACE_FORM: &str = "http://cognet.example/ns#surfaceForm";
    pub const PROVENANCE: &str = "http://cognet.example/ns#provenance";
    pub const LABEL: &str = "http://cognet.example/ns#label";
    pub const ALT_LABEL: &str = "http://cognet.example/ns#altLabel";
    pub const HAS_TYPE: &str = "http://cognet.example/ns#hasType";
    pub const GLOSS: &str = "http://cognet.example/ns#gloss";
    pub const LEMMA: &str = "http://cognet.example/ns#lemma";
    pub const HYPERNYM: &str = "http://cognet.example/ns#hypernym";
    pub const SOURCE_NAME: &str = "http://cognet.example/ns#sourceName";
    pub const SOURCE_SUBJECT: &str = "http://cognet.example/ns#sourceSubject";
    pub const SOURCE_PREDICATE: &str = "http://cognet.example/ns#sourcePredicate";
    pub const SOURCE_OBJECT: &str = "http://cognet.example/ns#sourceObject";
}

fn kind_path(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Frame => "frame",
        NodeKind::Element => "fe",
        NodeKind::Fer => "fer",
        NodeKind::Instance => "fi",
        NodeKind::Entity => "en",
        NodeKind::Taxonomy => "tx",
    }
}

pub fn node_iri(id: &NodeId) -> String {
    format!("{NS}{}/{}", kind_path(id.kind()), id.local())
}

pub fn relation_iri(relation: RelationType) -> String {
    format!("{NS}rel/{}", relation.as_str())
}

pub fn relation_from_iri(iri: &str) -> Option<RelationType> {
    let name = iri.strip_prefix(NS)?.strip_prefix("rel/")?;
    RelationType::ALL.into_iter().find(|r| r.as_str() == name)
}

/// Inverse of [`node_iri`]; `None` for anything outside the node paths.
pub fn node_id_from_iri(iri: &str) -> Option<NodeId> {
    let rest = iri.strip_prefix(NS)?;
    let (path, local) = rest.split_once('/')?;
    let kind = NodeKind::ALL.into_iter().find(|k| kind_path(*k) == path)?;
    NodeId::parse(&format!("{}:{local}", kind.prefix())).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_iris_invert() {
        for raw in ["sf:Commerce_buy", "fe:Commerce_buy/Goods", "tx:book", "fer:0123abcd"] {
            let id = NodeId::parse(raw).unwrap();
            assert_eq!(node_id_from_iri(&node_iri(&id)), Some(id));
        }
        assert_eq!(
            node_iri(&NodeId::element("Commerce_buy", "Goods")),
            "http://cognet.example/ns#fe/Commerce_buy/Goods"
        );
        assert_eq!(node_id_from_iri(class::FRAME), None);
        assert_eq!(node_id_from_iri(&relation_iri(RelationType::IsA)), None);
        assert_eq!(
            relation_from_iri(&relation_iri(RelationType::IsA)),
            Some(RelationType::IsA)
        );
    }
}
