//! Entity, relation and joint linkers over the KG label index.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::Arc;

use crate::annotation::{AnnotationSet, EntityLink, RelationLink, Span};
use crate::components::{Component, ComponentError};
use crate::kg::{EntryKind, KnowledgeGraph, MatchMode, DEFAULT_FUZZY_THRESHOLD};
use crate::text::{is_literal_span, is_literal_surface, tokenize, Lexicons, Token};

/// Links every triple subject and (non-literal) object to its best KG entity.
#[derive(Debug, Clone)]
pub struct EntityLinker {
    pub mode: MatchMode,
    pub threshold: f64,
}

impl EntityLinker {
    pub fn new(mode: MatchMode) -> EntityLinker {
        EntityLinker {
            mode,
            threshold: DEFAULT_FUZZY_THRESHOLD,
        }
    }
}

impl Component for EntityLinker {
    fn annotate(
        &self,
        input: &AnnotationSet,
        kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let text = &input.document.text;
        let spans: BTreeSet<&Span> = input
            .text_triples
            .iter()
            .flat_map(|t| [&t.subject, &t.object])
            .filter(|s| !is_literal_span(text, s))
            .collect();
        let mut out = AnnotationSet::new(input.document.clone());
        for span in spans {
            if let Some((iri, score)) = kg
                .lookup(EntryKind::Entity, &span.surface, self.mode, self.threshold)
                .into_iter()
                .next()
            {
                out.entity_links.push(EntityLink {
                    span: span.clone(),
                    iri,
                    score,
                    source_component: String::new(),
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationMode {
    /// Case-insensitive exact match against property labels and aliases.
    Dictionary,
    /// Normalized edit-distance match.
    Fuzzy,
    /// Drops leading auxiliaries before the dictionary lookup, falling back
    /// to the full predicate.
    StripAuxiliaries,
}

#[derive(Debug, Clone)]
pub struct RelationLinker {
    pub mode: RelationMode,
    pub threshold: f64,
    lex: Arc<Lexicons>,
}

impl RelationLinker {
    pub fn new(mode: RelationMode, lex: Arc<Lexicons>) -> RelationLinker {
        RelationLinker {
            mode,
            threshold: DEFAULT_FUZZY_THRESHOLD,
            lex,
        }
    }

    fn best(&self, kg: &KnowledgeGraph, surface: &str) -> Option<(String, f64)> {
        let look = |s: &str, mode| {
            kg.lookup(EntryKind::Property, s, mode, self.threshold)
                .into_iter()
                .next()
        };
        match self.mode {
            RelationMode::Dictionary => look(surface, MatchMode::CaseInsensitive),
            RelationMode::Fuzzy => look(surface, MatchMode::Fuzzy),
            RelationMode::StripAuxiliaries => {
                let words: Vec<&str> = surface.split_whitespace().collect();
                let skip = words
                    .iter()
                    .take_while(|w| self.lex.auxiliaries.contains(&w.to_lowercase()))
                    .count();
                let stripped = words[skip..].join(" ");
                look(&stripped, MatchMode::CaseInsensitive)
                    .or_else(|| look(surface, MatchMode::CaseInsensitive))
            }
        }
    }
}

impl Component for RelationLinker {
    fn annotate(
        &self,
        input: &AnnotationSet,
        kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let spans: BTreeSet<&Span> = input.text_triples.iter().map(|t| &t.predicate).collect();
        let mut out = AnnotationSet::new(input.document.clone());
        for span in spans {
            if let Some((iri, score)) = self.best(kg, &span.surface) {
                out.relation_links.push(RelationLink {
                    span: span.clone(),
                    iri,
                    score,
                    source_component: String::new(),
                });
            }
        }
        Ok(out)
    }
}

/// One n-gram's best KG candidate.
#[derive(Debug, Clone)]
struct Candidate {
    span: Span,
    iri: String,
    score: f64,
    len: usize,
}

/// Higher score, then longer n-gram, then earlier, then smaller IRI.
fn preference(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.len.cmp(&a.len))
        .then(a.span.start.cmp(&b.span.start))
        .then_with(|| a.iri.cmp(&b.iri))
}

/// Joint entity and relation linker: scores every n-gram of every triple
/// field and picks the subject/relation/object combination with the highest
/// total score, subject and object being distinct entities.
#[derive(Debug, Clone)]
pub struct JointLinker {
    lex: Arc<Lexicons>,
    pub max_ngram: usize,
    pub threshold: f64,
}

pub const DEFAULT_MAX_NGRAM: usize = 7;

impl JointLinker {
    pub fn new(lex: Arc<Lexicons>) -> JointLinker {
        JointLinker {
            lex,
            max_ngram: DEFAULT_MAX_NGRAM,
            threshold: DEFAULT_FUZZY_THRESHOLD,
        }
    }

    fn candidates(
        &self,
        text: &str,
        field: &[&Token],
        kg: &KnowledgeGraph,
        kind: EntryKind,
    ) -> Vec<Candidate> {
        let mut out = Vec::new();
        for i in 0..field.len() {
            for j in i + 1..=field.len().min(i + self.max_ngram) {
                let gram = &field[i..j];
                if gram.iter().all(|t| self.lex.is_function_word(t)) {
                    continue;
                }
                let span = Span::from_text(text, gram[0].start, gram[j - i - 1].end);
                if kind == EntryKind::Entity && is_literal_surface(&span.surface) {
                    continue;
                }
                let mut hits = kg.lookup(kind, &span.surface, MatchMode::Fuzzy, self.threshold);
                if kind == EntryKind::Property {
                    hits.extend(kg.lookup(kind, &span.surface, MatchMode::CaseInsensitive, 0.0));
                    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                }
                if let Some((iri, score)) = hits.into_iter().next() {
                    out.push(Candidate {
                        span,
                        iri,
                        score,
                        len: j - i,
                    });
                }
            }
        }
        out.sort_by(preference);
        // Keep each IRI's best n-gram only.
        let mut seen = BTreeSet::new();
        out.retain(|c| seen.insert(c.iri.clone()));
        out
    }
}

/// Every candidate, then "no link".
fn options(c: &[Candidate]) -> Vec<Option<&Candidate>> {
    c.iter().map(Some).chain(std::iter::once(None)).collect()
}

fn field_tokens<'a>(tokens: &'a [Token], span: &Span) -> Vec<&'a Token> {
    tokens
        .iter()
        .filter(|t| t.start >= span.start && t.end <= span.end)
        .collect()
}

impl Component for JointLinker {
    fn annotate(
        &self,
        input: &AnnotationSet,
        kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let text = &input.document.text;
        let tokens = tokenize(text);
        let mut out = AnnotationSet::new(input.document.clone());
        for t in &input.text_triples {
            let subjects = self.candidates(
                text,
                &field_tokens(&tokens, &t.subject),
                kg,
                EntryKind::Entity,
            );
            let relations = self.candidates(
                text,
                &field_tokens(&tokens, &t.predicate),
                kg,
                EntryKind::Property,
            );
            let objects = if is_literal_span(text, &t.object) {
                Vec::new()
            } else {
                self.candidates(
                    text,
                    &field_tokens(&tokens, &t.object),
                    kg,
                    EntryKind::Entity,
                )
            };

            let score = |c: Option<&Candidate>| c.map_or(0.0, |c| c.score);
            let mut best: (f64, Option<&Candidate>, Option<&Candidate>) = (0.0, None, None);
            for s in options(&subjects) {
                for o in options(&objects) {
                    if let (Some(s), Some(o)) = (s, o) {
                        if s.iri == o.iri {
                            continue;
                        }
                    }
                    let total = score(s) + score(o);
                    if total > best.0 {
                        best = (total, s, o);
                    }
                }
            }
            for c in [best.1, best.2].into_iter().flatten() {
                out.entity_links.push(EntityLink {
                    span: c.span.clone(),
                    iri: c.iri.clone(),
                    score: c.score,
                    source_component: String::new(),
                });
            }
            if let Some(r) = relations.first() {
                out.relation_links.push(RelationLink {
                    span: r.span.clone(),
                    iri: r.iri.clone(),
                    score: r.score,
                    source_component: String::new(),
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{Document, TextTriple};
    use crate::fixtures;

    fn ann(text: &str, triples: &[(&str, &str, &str)]) -> AnnotationSet {
        let doc = Document::new("t", text);
        let mut a = AnnotationSet::new(doc.clone());
        let find = |needle: &str, from: usize| {
            let byte = text[from..].find(needle).unwrap() + from;
            let start = text[..byte].chars().count();
            (
                doc.span(start, start + needle.chars().count()),
                byte + needle.len(),
            )
        };
        for (s, p, o) in triples {
            let (s, after) = find(s, 0);
            let (p, after) = find(p, after);
            let (o, _) = find(o, after);
            a.text_triples.push(TextTriple::new(s, p, o));
        }
        a
    }

    fn entity_iris(c: &dyn Component, a: &AnnotationSet) -> Vec<String> {
        let kg = fixtures::dbpedia_kg();
        c.annotate(a, &kg)
            .unwrap()
            .entity_links
            .into_iter()
            .map(|l| l.iri)
            .collect()
    }

    #[test]
    fn entity_modes() {
        let a = ann(
            "rembrandt painted it in 1633",
            &[("rembrandt", "painted", "1633")],
        );
        assert!(entity_iris(&EntityLinker::new(MatchMode::Exact), &a).is_empty());
        assert_eq!(
            entity_iris(&EntityLinker::new(MatchMode::CaseInsensitive), &a),
            ["dbr:Rembrandt"]
        );
        let a = ann(
            "Rembrandt painted in 1633",
            &[("Rembrandt", "painted in", "1633")],
        );
        assert_eq!(
            entity_iris(&EntityLinker::new(MatchMode::Exact), &a),
            ["dbr:Rembrandt"]
        );
    }

    #[test]
    fn relation_modes() {
        let lex = Arc::new(Lexicons::default());
        let kg = fixtures::dbpedia_kg();
        let dict = RelationLinker::new(RelationMode::Dictionary, lex.clone());
        assert_eq!(dict.best(&kg, "painted").unwrap().0, "dbo:Artist");
        assert_eq!(dict.best(&kg, "was painted in").unwrap().0, "dbp:year");
        assert!(dict.best(&kg, "flurbed").is_none());
        let strip = RelationLinker::new(RelationMode::StripAuxiliaries, lex.clone());
        assert_eq!(strip.best(&kg, "was completed in").unwrap().0, "dbp:year");
        assert_eq!(strip.best(&kg, "is married to").unwrap().0, "dbo:spouse");
        let fuzzy = RelationLinker::new(RelationMode::Fuzzy, lex);
        assert_eq!(fuzzy.best(&kg, "paintd").unwrap().0, "dbo:Artist");
    }

    #[test]
    fn joint_links_golden_example() {
        let text = "Rembrandt painted The Storm on the Sea of Galilee.";
        let a = ann(
            text,
            &[("Rembrandt", "painted", "The Storm on the Sea of Galilee")],
        );
        let out = JointLinker::new(Arc::new(Lexicons::default()))
            .annotate(&a, &fixtures::dbpedia_kg())
            .unwrap();
        let iris: Vec<_> = out.entity_links.iter().map(|l| l.iri.as_str()).collect();
        assert_eq!(
            iris,
            ["dbr:Rembrandt", "dbr:The_Storm_on_the_Sea_of_Galilee"]
        );
        assert_eq!(out.relation_links[0].iri, "dbo:Artist");
    }

    #[test]
    fn joint_uses_alias_ngrams() {
        let text = "The wife of Obama is Michelle Obama.";
        let a = ann(text, &[("The wife of Obama", "is", "Michelle Obama")]);
        let out = JointLinker::new(Arc::new(Lexicons::default()))
            .annotate(&a, &fixtures::dbpedia_kg())
            .unwrap();
        let links: Vec<_> = out
            .entity_links
            .iter()
            .map(|l| (l.span.surface.as_str(), l.iri.as_str()))
            .collect();
        assert_eq!(
            links,
            [
                ("Obama", "dbr:Barack_Obama"),
                ("Michelle Obama", "dbr:Michelle_Obama")
            ]
        );
    }

    #[test]
    fn joint_ignores_unknown_vocabulary() {
        let a = ann("Zorb flurbed Quux.", &[("Zorb", "flurbed", "Quux")]);
        let out = JointLinker::new(Arc::new(Lexicons::default()))
            .annotate(&a, &fixtures::dbpedia_kg())
            .unwrap();
        assert!(out.entity_links.is_empty() && out.relation_links.is_empty());
    }
}
