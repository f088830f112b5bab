//! Label/alias index over a knowledge graph sample, used by the linkers.
//!
//! File format: one tab-separated entry per line,
//! `kind<TAB>iri<TAB>label<TAB>alias1|alias2|...`, with an optional
//! `kind\tiri\tlabel\taliases` header line. Blank lines and lines starting
//! with `#` are skipped.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_FUZZY_THRESHOLD: f64 = 0.82;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate {kind} IRI {iri}")]
    Duplicate {
        line: usize,
        kind: EntryKind,
        iri: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Entity,
    Property,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::Entity => "entity",
            EntryKind::Property => "property",
        })
    }
}

impl FromStr for EntryKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entity" => Ok(EntryKind::Entity),
            "property" => Ok(EntryKind::Property),
            other => Err(format!(
                "unknown kind {other:?} (expected entity or property)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Exact,
    CaseInsensitive,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgEntry {
    pub kind: EntryKind,
    pub iri: String,
    pub label: String,
    pub aliases: Vec<String>,
}

impl KgEntry {
    /// Label followed by aliases.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    pub name: String,
    entries: Vec<KgEntry>,
    by_iri: HashMap<(EntryKind, String), usize>,
    exact_index: HashMap<(EntryKind, String), Vec<usize>>,
    label_index: HashMap<(EntryKind, String), Vec<usize>>,
    /// Lowercased names with their character count, for fuzzy matching.
    fuzzy_names: Vec<(usize, String, usize)>,
}

impl KnowledgeGraph {
    pub fn empty(name: impl Into<String>) -> KnowledgeGraph {
        KnowledgeGraph {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn load(
        name: impl Into<String>,
        path: impl AsRef<Path>,
    ) -> Result<KnowledgeGraph, KgError> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|source| KgError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(name, &content)
    }

    pub fn parse(name: impl Into<String>, content: &str) -> Result<KnowledgeGraph, KgError> {
        let mut kg = KnowledgeGraph::empty(name);
        for (idx, raw) in content.lines().enumerate() {
            let line = idx + 1;
            let row = raw.trim_end_matches('\r');
            if row.trim().is_empty() || row.starts_with('#') {
                continue;
            }
            if line == 1 && row.starts_with("kind\t") {
                continue;
            }
            let cols: Vec<&str> = row.split('\t').collect();
            if cols.len() < 3 || cols.len() > 4 {
                return Err(KgError::Parse {
                    line,
                    message: format!(
                        "expected 3 or 4 tab-separated columns, found {}",
                        cols.len()
                    ),
                });
            }
            let kind: EntryKind = cols[0]
                .parse()
                .map_err(|message| KgError::Parse { line, message })?;
            let iri = cols[1].trim();
            let label = cols[2].trim();
            if iri.is_empty() || label.is_empty() {
                return Err(KgError::Parse {
                    line,
                    message: "IRI and label must be non-empty".into(),
                });
            }
            let aliases = cols
                .get(3)
                .map(|a| {
                    a.split('|')
                        .map(str::trim)
                        .filter(|a| !a.is_empty())
                        .map(String::from)
                        .collect()
                })
                .unwrap_or_default();
            kg.insert(
                KgEntry {
                    kind,
                    iri: iri.to_string(),
                    label: label.to_string(),
                    aliases,
                },
                line,
            )?;
        }
        Ok(kg)
    }

    fn insert(&mut self, entry: KgEntry, line: usize) -> Result<(), KgError> {
        let key = (entry.kind, entry.iri.clone());
        if self.by_iri.contains_key(&key) {
            return Err(KgError::Duplicate {
                line,
                kind: entry.kind,
                iri: entry.iri,
            });
        }
        let idx = self.entries.len();
        self.by_iri.insert(key, idx);
        let mut seen_exact = HashSet::new();
        let mut seen_lower = HashSet::new();
        for n in entry.names() {
            if seen_exact.insert(n.to_string()) {
                self.exact_index
                    .entry((entry.kind, n.to_string()))
                    .or_default()
                    .push(idx);
            }
            let lc = n.to_lowercase();
            if seen_lower.insert(lc.clone()) {
                self.fuzzy_names.push((idx, lc.clone(), lc.chars().count()));
                self.label_index
                    .entry((entry.kind, lc))
                    .or_default()
                    .push(idx);
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[KgEntry] {
        &self.entries
    }

    pub fn len(&self, kind: EntryKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn contains(&self, kind: EntryKind, iri: &str) -> bool {
        self.by_iri.contains_key(&(kind, iri.to_string()))
    }

    pub fn get(&self, kind: EntryKind, iri: &str) -> Option<&KgEntry> {
        self.by_iri
            .get(&(kind, iri.to_string()))
            .map(|&i| &self.entries[i])
    }

    /// Candidate IRIs for `surface`, best first (score desc, IRI asc).
    pub fn lookup(
        &self,
        kind: EntryKind,
        surface: &str,
        mode: MatchMode,
        fuzzy_threshold: f64,
    ) -> Vec<(String, f64)> {
        let surface = surface.trim();
        if surface.is_empty() {
            return Vec::new();
        }
        let mut hits: Vec<(String, f64)> = match mode {
            MatchMode::Exact => self.indexed(&self.exact_index, kind, surface.to_string()),
            MatchMode::CaseInsensitive => {
                self.indexed(&self.label_index, kind, surface.to_lowercase())
            }
            MatchMode::Fuzzy => self.fuzzy(kind, surface, fuzzy_threshold),
        };
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        hits
    }

    fn indexed(
        &self,
        index: &HashMap<(EntryKind, String), Vec<usize>>,
        kind: EntryKind,
        key: String,
    ) -> Vec<(String, f64)> {
        index
            .get(&(kind, key))
            .map(|ids| {
                ids.iter()
                    .map(|&i| (self.entries[i].iri.clone(), 1.0))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn fuzzy(&self, kind: EntryKind, surface: &str, threshold: f64) -> Vec<(String, f64)> {
        let needle = surface.to_lowercase();
        let len = needle.chars().count();
        let mut best: HashMap<usize, f64> = HashMap::new();
        for (idx, name, n) in &self.fuzzy_names {
            if self.entries[*idx].kind != kind {
                continue;
            }
            // The length difference alone bounds the similarity from above.
            let longest = len.max(*n).max(1) as f64;
            if 1.0 - len.abs_diff(*n) as f64 / longest < threshold {
                continue;
            }
            let s = similarity(&needle, name);
            let b = best.entry(*idx).or_insert(0.0);
            *b = b.max(s);
        }
        best.into_iter()
            .filter(|(_, s)| *s >= threshold)
            .map(|(i, s)| (self.entries[i].iri.clone(), s))
            .collect()
    }
}

/// Normalized Levenshtein similarity over characters: `1 - dist / max_len`.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / max_len as f64
}
