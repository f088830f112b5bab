//! JSONL datasets with gold KG triples and optional gold intermediates.
//!
//! `gold_clusters` spans refer to `text`. The other intermediate spans refer
//! to the text obtained by applying the gold clusters (or to `text` itself
//! when there are no gold clusters).

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{
    apply_coref, CorefCluster, Document, EntityLink, LinkedTriple, Object, RelationLink, TextTriple,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("example {id:?}: {message}")]
    Invalid { id: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldTriple {
    pub s: String,
    pub p: String,
    /// An IRI, or a literal (numbers and quoted strings are literals).
    pub o: String,
}

impl GoldTriple {
    pub fn to_linked(&self) -> LinkedTriple {
        LinkedTriple::new(self.s.trim(), self.p.trim(), Object::parse(&self.o))
    }

    pub fn from_linked(t: &LinkedTriple) -> GoldTriple {
        GoldTriple {
            s: t.subject_iri.clone(),
            p: t.predicate_iri.clone(),
            o: t.object.to_plain(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub kg: String,
    #[serde(default)]
    pub gold_triples: Vec<GoldTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_clusters: Option<Vec<CorefCluster>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_text_triples: Option<Vec<TextTriple>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_entity_links: Option<Vec<EntityLink>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_relation_links: Option<Vec<RelationLink>>,
}

impl Example {
    pub fn new(id: &str, text: &str, kg: &str, gold: &[LinkedTriple]) -> Example {
        Example {
            id: id.to_string(),
            text: text.to_string(),
            kg: kg.to_string(),
            gold_triples: gold.iter().map(GoldTriple::from_linked).collect(),
            gold_clusters: None,
            gold_text_triples: None,
            gold_entity_links: None,
            gold_relation_links: None,
        }
    }

    pub fn document(&self) -> Document {
        Document::new(self.id.clone(), self.text.clone())
    }

    /// Gold KG triples as a duplicate-free list.
    pub fn gold(&self) -> Vec<LinkedTriple> {
        let mut seen = HashSet::new();
        self.gold_triples
            .iter()
            .map(GoldTriple::to_linked)
            .filter(|t| seen.insert(t.clone()))
            .collect()
    }

    /// The document after applying the gold clusters.
    pub fn resolved_document(&self) -> Result<Document, DatasetError> {
        let clusters = self.gold_clusters.as_deref().unwrap_or(&[]);
        apply_coref(&self.document(), clusters)
            .map(|(doc, _)| doc)
            .map_err(|e| self.invalid(format!("gold clusters: {e}")))
    }

    fn invalid(&self, message: String) -> DatasetError {
        DatasetError::Invalid {
            id: self.id.clone(),
            message,
        }
    }

    /// Checks that every gold span matches the text it refers to.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.id.is_empty() {
            return Err(self.invalid("empty id".into()));
        }
        let resolved = self.resolved_document()?;
        let text = &resolved.text;
        let check = |what: &str, span: &crate::annotation::Span| {
            span.validate(text)
                .map_err(|e| self.invalid(format!("{what}: {e}")))
        };
        for t in self.gold_text_triples.iter().flatten() {
            for s in t.spans() {
                check("gold text triple", s)?;
            }
        }
        for l in self.gold_entity_links.iter().flatten() {
            check("gold entity link", &l.span)?;
        }
        for l in self.gold_relation_links.iter().flatten() {
            check("gold relation link", &l.span)?;
        }
        Ok(())
    }
}

/// Parses JSONL, skipping blank lines, and validates every example.
pub fn parse_jsonl(content: &str) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ex: Example = serde_json::from_str(line).map_err(|source| DatasetError::Json {
            line: i + 1,
            source,
        })?;
        ex.validate()?;
        out.push(ex);
    }
    Ok(out)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<Example>, DatasetError> {
    parse_jsonl(&std::fs::read_to_string(path)?)
}

pub fn to_jsonl(examples: &[Example]) -> String {
    examples
        .iter()
        .map(|e| serde_json::to_string(e).expect("example serializes") + "\n")
        .collect()
}
