//! The annotation set exchanged between components, plus coreference
//! rewriting and literal normalization.

use std::collections::HashSet;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{is_decimal, split_sentences};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("span {start}..{end} ({surface:?}) is not valid against the document text")]
    InvalidSpan {
        start: usize,
        end: usize,
        surface: String,
    },
    #[error("mention {first:?} overlaps mention {second:?}")]
    Overlap { first: String, second: String },
    #[error("cluster representative {0:?} is also listed as a mention")]
    RepresentativeIsMention(String),
    #[error("annotation sets refer to different documents ({0:?} vs {1:?})")]
    DocumentMismatch(String, String),
}

/// A character range of a document, with the covered text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl Span {
    /// Builds a span by slicing `text`; offsets are clamped to the text.
    pub fn from_text(text: &str, start: usize, end: usize) -> Span {
        Span {
            start,
            end,
            surface: char_slice(text, start, end),
        }
    }

    /// Builds a span and checks the invariants against `text`.
    pub fn new(text: &str, start: usize, end: usize) -> Result<Span, AnnotationError> {
        let span = Span::from_text(text, start, end);
        span.validate(text)?;
        Ok(span)
    }

    pub fn validate(&self, text: &str) -> Result<(), AnnotationError> {
        let len = text.chars().count();
        if self.start < self.end
            && self.end <= len
            && char_slice(text, self.start, self.end) == self.surface
        {
            Ok(())
        } else {
            Err(AnnotationError::InvalidSpan {
                start: self.start,
                end: self.end,
                surface: self.surface.clone(),
            })
        }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

pub(crate) fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars()
        .skip(start)
        .take(end.saturating_sub(start))
        .collect()
}

/// One input text with its sentence bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub sentence_bounds: Vec<Span>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Document {
        let text = text.into();
        let sentence_bounds = split_sentences(&text);
        Document {
            id: id.into(),
            text,
            sentence_bounds,
        }
    }

    pub fn span(&self, start: usize, end: usize) -> Span {
        Span::from_text(&self.text, start, end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorefCluster {
    pub representative: Span,
    pub mentions: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextTriple {
    pub subject: Span,
    pub predicate: Span,
    pub object: Span,
    #[serde(default)]
    pub source_component: String,
}

impl TextTriple {
    pub fn new(subject: Span, predicate: Span, object: Span) -> TextTriple {
        TextTriple {
            subject,
            predicate,
            object,
            source_component: String::new(),
        }
    }

    fn key(&self) -> (Span, Span, Span) {
        (
            self.subject.clone(),
            self.predicate.clone(),
            self.object.clone(),
        )
    }

    pub fn spans(&self) -> [&Span; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityLink {
    pub span: Span,
    pub iri: String,
    #[serde(default = "full_score")]
    pub score: f64,
    #[serde(default)]
    pub source_component: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationLink {
    pub span: Span,
    pub iri: String,
    #[serde(default = "full_score")]
    pub score: f64,
    #[serde(default)]
    pub source_component: String,
}

fn full_score() -> f64 {
    1.0
}

/// A normalized literal value. Construction always normalizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct Literal(String);

impl Literal {
    pub fn new(raw: &str) -> Literal {
        normalize_literal(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<String> for Literal {
    fn from(raw: String) -> Self {
        normalize_literal(&raw)
    }
}

impl From<Literal> for String {
    fn from(lit: Literal) -> Self {
        lit.0
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Strips surrounding quotes and whitespace and canonicalizes decimal numbers
/// (no '+', no leading zeros except "0.x", no trailing fractional zeros).
pub fn normalize_literal(raw: &str) -> Literal {
    let mut s = raw.trim();
    while s.len() >= 2
        && ((s.starts_with('"') && s.ends_with('"')) || (s.starts_with('\'') && s.ends_with('\'')))
    {
        s = s[1..s.len() - 1].trim();
    }
    if is_decimal(s) {
        return Literal(canonical_decimal(s));
    }
    Literal(s.to_string())
}

fn canonical_decimal(s: &str) -> String {
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let int = int.trim_start_matches('0');
    let frac = frac.trim_end_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    let mut out = String::new();
    if negative && !(int == "0" && frac.is_empty()) {
        out.push('-');
    }
    out.push_str(int);
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

/// Object position of a KG triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Object {
    Iri(String),
    Literal(Literal),
}

impl Object {
    /// Reads an object written as a plain string: quoted strings and numbers
    /// are literals, `prefix:local` and `http(s)://` strings are IRIs, and
    /// anything else is a literal.
    pub fn parse(raw: &str) -> Object {
        let s = raw.trim();
        if s.starts_with('"') || is_decimal(s) || !looks_like_iri(s) {
            Object::Literal(normalize_literal(s))
        } else {
            Object::Iri(s.to_string())
        }
    }

    /// Inverse of [`Object::parse`]: literals are written quoted.
    pub fn to_plain(&self) -> String {
        match self {
            Object::Iri(iri) => iri.clone(),
            Object::Literal(lit) => format!("\"{lit}\""),
        }
    }
}

fn looks_like_iri(s: &str) -> bool {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return false;
    }
    if s.starts_with("http://") || s.starts_with("https://") {
        return true;
    }
    match s.split_once(':') {
        Some((prefix, local)) => {
            !prefix.is_empty()
                && !local.is_empty()
                && prefix
                    .chars()
                    .all(|c| c.is_alphanumeric() || c == '_' || c == '-')
        }
        None => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkedTriple {
    pub subject_iri: String,
    pub predicate_iri: String,
    pub object: Object,
}

impl LinkedTriple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Object) -> Self {
        LinkedTriple {
            subject_iri: subject.into(),
            predicate_iri: predicate.into(),
            object,
        }
    }
}

impl fmt::Display for LinkedTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.subject_iri,
            self.predicate_iri,
            self.object.to_plain()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub document: Document,
    #[serde(default)]
    pub clusters: Vec<CorefCluster>,
    #[serde(default)]
    pub text_triples: Vec<TextTriple>,
    #[serde(default)]
    pub entity_links: Vec<EntityLink>,
    #[serde(default)]
    pub relation_links: Vec<RelationLink>,
    #[serde(default)]
    pub linked_triples: Vec<LinkedTriple>,
}

impl AnnotationSet {
    pub fn new(document: Document) -> AnnotationSet {
        AnnotationSet {
            document,
            clusters: Vec::new(),
            text_triples: Vec::new(),
            entity_links: Vec::new(),
            relation_links: Vec::new(),
            linked_triples: Vec::new(),
        }
    }

    /// Total number of annotations of every kind.
    pub fn len(&self) -> usize {
        self.clusters.len()
            + self.text_triples.len()
            + self.entity_links.len()
            + self.relation_links.len()
            + self.linked_triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks every contained span against the document text.
    pub fn validate(&self) -> Result<(), AnnotationError> {
        let text = &self.document.text;
        for c in &self.clusters {
            c.representative.validate(text)?;
            for m in &c.mentions {
                m.validate(text)?;
            }
        }
        for t in &self.text_triples {
            for s in t.spans() {
                s.validate(text)?;
            }
        }
        for l in &self.entity_links {
            l.span.validate(text)?;
        }
        for l in &self.relation_links {
            l.span.validate(text)?;
        }
        Ok(())
    }
}

/// Maps every offset of an original text (0..=len) to the rewritten text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetMap(Vec<usize>);

impl OffsetMap {
    pub fn identity(len: usize) -> OffsetMap {
        OffsetMap((0..=len).collect())
    }

    /// New offset of `offset`; offsets past the end map past the end.
    pub fn map(&self, offset: usize) -> usize {
        match self.0.get(offset) {
            Some(&o) => o,
            None => {
                let last = *self.0.last().unwrap_or(&0);
                last + (offset + 1 - self.0.len())
            }
        }
    }

    pub fn map_span(&self, span: &Span, new_text: &str) -> Span {
        Span::from_text(new_text, self.map(span.start), self.map(span.end))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Rewrites every mention with its cluster's representative surface.
///
/// Offsets inside a replaced mention map to the start of the replacement; the
/// mention end maps to the replacement end.
pub fn apply_coref(
    doc: &Document,
    clusters: &[CorefCluster],
) -> Result<(Document, OffsetMap), AnnotationError> {
    let mut replacements: Vec<(&Span, &str)> = Vec::new();
    for c in clusters {
        c.representative.validate(&doc.text)?;
        for m in &c.mentions {
            m.validate(&doc.text)?;
            if *m == c.representative {
                return Err(AnnotationError::RepresentativeIsMention(m.surface.clone()));
            }
            replacements.push((m, c.representative.surface.as_str()));
        }
    }
    replacements.sort_by_key(|(m, _)| (m.start, m.end));
    for pair in replacements.windows(2) {
        if pair[0].0.overlaps(pair[1].0) {
            return Err(AnnotationError::Overlap {
                first: pair[0].0.surface.clone(),
                second: pair[1].0.surface.clone(),
            });
        }
    }

    let chars: Vec<char> = doc.text.chars().collect();
    let mut out = String::with_capacity(doc.text.len());
    let mut map = Vec::with_capacity(chars.len() + 1);
    let mut written = 0usize;
    let mut pos = 0usize;
    for (mention, rep) in replacements {
        while pos < mention.start {
            map.push(written);
            out.push(chars[pos]);
            written += 1;
            pos += 1;
        }
        while pos < mention.end {
            map.push(written);
            pos += 1;
        }
        out.push_str(rep);
        written += rep.chars().count();
    }
    while pos < chars.len() {
        map.push(written);
        out.push(chars[pos]);
        written += 1;
        pos += 1;
    }
    map.push(written);
    Ok((Document::new(doc.id.clone(), out), OffsetMap(map)))
}

fn push_unique<T: Clone, K: Eq + Hash>(
    out: &mut Vec<T>,
    seen: &mut HashSet<K>,
    items: &[T],
    key: impl Fn(&T) -> K,
) {
    for item in items {
        if seen.insert(key(item)) {
            out.push(item.clone());
        }
    }
}

fn union<T: Clone, K: Eq + Hash>(a: &[T], b: &[T], key: impl Fn(&T) -> K) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut seen = HashSet::new();
    push_unique(&mut out, &mut seen, a, &key);
    push_unique(&mut out, &mut seen, b, &key);
    out
}

/// Union of two annotation sets over the same document. `a`'s items come
/// first; duplicates (identical spans/IRIs) are dropped.
pub fn merge_annotations(
    a: &AnnotationSet,
    b: &AnnotationSet,
) -> Result<AnnotationSet, AnnotationError> {
    if a.document != b.document {
        return Err(AnnotationError::DocumentMismatch(
            a.document.id.clone(),
            b.document.id.clone(),
        ));
    }
    Ok(AnnotationSet {
        document: a.document.clone(),
        clusters: union(&a.clusters, &b.clusters, Clone::clone),
        text_triples: union(&a.text_triples, &b.text_triples, TextTriple::key),
        entity_links: union(&a.entity_links, &b.entity_links, |l| {
            (l.span.clone(), l.iri.clone())
        }),
        relation_links: union(&a.relation_links, &b.relation_links, |l| {
            (l.span.clone(), l.iri.clone())
        }),
        linked_triples: union(&a.linked_triples, &b.linked_triples, Clone::clone),
    })
}
