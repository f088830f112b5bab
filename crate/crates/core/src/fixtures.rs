//! Knowledge graphs bundled with the crate.

use crate::kg::KnowledgeGraph;

pub const DBPEDIA_SAMPLE: &str = include_str!("../../../fixtures/dbpedia-sample.tsv");
pub const ORKG_SAMPLE: &str = include_str!("../../../fixtures/orkg-sample.tsv");

pub fn dbpedia_kg() -> KnowledgeGraph {
    KnowledgeGraph::parse("dbpedia", DBPEDIA_SAMPLE).expect("bundled dbpedia sample parses")
}

pub fn orkg_kg() -> KnowledgeGraph {
    KnowledgeGraph::parse("orkg", ORKG_SAMPLE).expect("bundled orkg sample parses")
}

/// The bundled KG called `name`, if there is one.
pub fn bundled_kg(name: &str) -> Option<KnowledgeGraph> {
    match name {
        "dbpedia" => Some(dbpedia_kg()),
        "orkg" => Some(orkg_kg()),
        _ => None,
    }
}
