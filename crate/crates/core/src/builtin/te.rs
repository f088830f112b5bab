//! Rule-based triple extractors.

use std::sync::Arc;

use crate::annotation::{AnnotationSet, TextTriple};
use crate::components::{Component, ComponentError};
use crate::kg::KnowledgeGraph;
use crate::text::{analyze, token_span, Lexicons, Token};

fn triple(text: &str, s: &[Token], p: &[Token], o: &[Token]) -> Option<TextTriple> {
    Some(TextTriple::new(
        token_span(text, s)?,
        token_span(text, p)?,
        token_span(text, o)?,
    ))
}

/// Subject-verb-object extraction around the first verb group of a sentence.
#[derive(Debug, Clone)]
pub struct SvoExtractor {
    lex: Arc<Lexicons>,
    /// After an auxiliary, absorb the verbs that follow ("was painted").
    pub extend_auxiliaries: bool,
    /// Absorb prepositions that follow the verb group ("painted in").
    pub extend_prepositions: bool,
}

impl SvoExtractor {
    pub fn new(lex: Arc<Lexicons>) -> SvoExtractor {
        SvoExtractor {
            lex,
            extend_auxiliaries: true,
            extend_prepositions: true,
        }
    }

    pub fn extract(&self, text: &str, tokens: &[Token]) -> Option<TextTriple> {
        let lex = &self.lex;
        let first = tokens.iter().position(|t| lex.is_verb(t))?;
        let mut last = first;
        if self.extend_auxiliaries && lex.is_auxiliary(&tokens[first]) {
            while last + 1 < tokens.len()
                && !tokens[last].has_trailing_punct()
                && lex.is_verb(&tokens[last + 1])
            {
                last += 1;
            }
        }
        if self.extend_prepositions {
            while last + 1 < tokens.len()
                && !tokens[last].has_trailing_punct()
                && lex.is_preposition(&tokens[last + 1])
            {
                last += 1;
            }
        }
        triple(
            text,
            &tokens[..first],
            &tokens[first..=last],
            &tokens[last + 1..],
        )
    }
}

impl Component for SvoExtractor {
    fn annotate(
        &self,
        input: &AnnotationSet,
        _kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let text = &input.document.text;
        let mut out = AnnotationSet::new(input.document.clone());
        out.text_triples = analyze(text)
            .iter()
            .filter_map(|s| self.extract(text, &s.tokens))
            .collect();
        Ok(out)
    }
}

/// Splits sentences into clauses at commas and "and", runs SVO per clause,
/// and optionally reads appositives of the form "X, son of Y".
#[derive(Debug, Clone)]
pub struct ClauseSplitExtractor {
    svo: SvoExtractor,
    pub appositives: bool,
}

/// Longest run of relational words allowed between the comma and "of".
const MAX_APPOSITIVE_WORDS: usize = 3;

impl ClauseSplitExtractor {
    pub fn new(lex: Arc<Lexicons>) -> ClauseSplitExtractor {
        ClauseSplitExtractor {
            svo: SvoExtractor::new(lex),
            appositives: true,
        }
    }

    fn lex(&self) -> &Lexicons {
        &self.svo.lex
    }

    /// Token index ranges of the clauses; the comma-bearing token closes a
    /// clause and a bare "and" is dropped.
    fn clauses(tokens: &[Token]) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, tok) in tokens.iter().enumerate() {
            if tok.text == "and" && tok.leading.is_empty() {
                if start < i {
                    out.push(start..i);
                }
                start = i + 1;
            } else if tok.ends_with_comma() {
                out.push(start..i + 1);
                start = i + 1;
            }
        }
        if start < tokens.len() {
            out.push(start..tokens.len());
        }
        out
    }

    pub fn extract(&self, text: &str, tokens: &[Token]) -> Vec<TextTriple> {
        let clauses = Self::clauses(tokens);
        let mut out: Vec<TextTriple> = clauses
            .iter()
            .filter_map(|r| self.svo.extract(text, &tokens[r.clone()]))
            .collect();
        if self.appositives {
            out.extend(self.appositive_triples(text, tokens, &clauses));
        }
        out
    }

    fn appositive_triples(
        &self,
        text: &str,
        tokens: &[Token],
        clauses: &[std::ops::Range<usize>],
    ) -> Vec<TextTriple> {
        let lex = self.lex();
        let phrases = lex.name_phrases(tokens);
        let mut out = Vec::new();
        for (c, tok) in tokens.iter().enumerate() {
            if !tok.ends_with_comma() {
                continue;
            }
            let Some(of) = (c + 2..=c + 1 + MAX_APPOSITIVE_WORDS)
                .take_while(|&k| k < tokens.len())
                .find(|&k| tokens[k].lower() == "of")
            else {
                continue;
            };
            let words = &tokens[c + 1..of];
            let plain =
                |t: &Token| t.starts_lowercase() && t.leading.is_empty() && !t.has_trailing_punct();
            if !words
                .iter()
                .all(|t| plain(t) && !lex.is_verb(t) && !lex.is_function_word(t))
                || tokens[of].has_trailing_punct()
                || of + 1 >= tokens.len()
            {
                continue;
            }
            let x = match phrases.iter().find(|r| r.end == c + 1) {
                Some(r) => r.clone(),
                None => {
                    let start = clauses
                        .iter()
                        .find(|r| r.contains(&c))
                        .map_or(0, |r| r.start);
                    start..c + 1
                }
            };
            let y = match phrases.iter().find(|r| r.start == of + 1) {
                Some(r) => r.clone(),
                None => {
                    let end = (of + 1..tokens.len())
                        .find(|&k| tokens[k].has_trailing_punct())
                        .unwrap_or(tokens.len() - 1);
                    of + 1..end + 1
                }
            };
            out.extend(triple(text, &tokens[x], &tokens[c + 1..=of], &tokens[y]));
        }
        out
    }
}

impl Component for ClauseSplitExtractor {
    fn annotate(
        &self,
        input: &AnnotationSet,
        _kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let text = &input.document.text;
        let mut out = AnnotationSet::new(input.document.clone());
        out.text_triples = analyze(text)
            .iter()
            .flat_map(|s| self.extract(text, &s.tokens))
            .collect();
        Ok(out)
    }
}

/// Matches `VERB WORD{0,max_gap} PREP`, shortest match first, scanning
/// left to right without overlaps.
#[derive(Debug, Clone)]
pub struct PatternExtractor {
    lex: Arc<Lexicons>,
    pub max_gap: usize,
}

pub const DEFAULT_MAX_GAP: usize = 4;
const FALLBACK_SUBJECT_TOKENS: usize = 3;

impl PatternExtractor {
    pub fn new(lex: Arc<Lexicons>, max_gap: usize) -> PatternExtractor {
        PatternExtractor { lex, max_gap }
    }

    /// Index of the preposition closing a match that starts at verb `v`.
    fn match_at(&self, tokens: &[Token], v: usize) -> Option<usize> {
        let lex = &self.lex;
        if !lex.is_verb(&tokens[v]) {
            return None;
        }
        for p in v + 1..tokens.len().min(v + self.max_gap + 2) {
            let prev = &tokens[p - 1];
            let tok = &tokens[p];
            if prev.has_trailing_punct() || !tok.leading.is_empty() {
                return None;
            }
            if lex.is_preposition(tok) {
                return Some(p);
            }
            if tok.is_capitalized() {
                return None;
            }
        }
        None
    }

    pub fn extract(&self, text: &str, tokens: &[Token]) -> Vec<TextTriple> {
        let lex = &self.lex;
        let phrases = lex.name_phrases(tokens);
        let mut out = Vec::new();
        let mut v = 0;
        while v < tokens.len() {
            let Some(p) = self.match_at(tokens, v) else {
                v += 1;
                continue;
            };
            let subject = match phrases.iter().rev().find(|r| r.end <= v) {
                Some(r) => r.clone(),
                None => v.saturating_sub(FALLBACK_SUBJECT_TOKENS)..v,
            };
            let object = match phrases.iter().find(|r| r.start == p + 1) {
                Some(r) => r.clone(),
                None => {
                    let mut end = p + 1;
                    while end < tokens.len()
                        && !lex.is_preposition(&tokens[end])
                        && !lex.is_verb(&tokens[end])
                        && (end == p + 1 || !tokens[end - 1].has_trailing_punct())
                    {
                        end += 1;
                    }
                    p + 1..end
                }
            };
            out.extend(triple(
                text,
                &tokens[subject],
                &tokens[v..=p],
                &tokens[object],
            ));
            v = p + 1;
        }
        out
    }
}

impl Component for PatternExtractor {
    fn annotate(
        &self,
        input: &AnnotationSet,
        _kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let text = &input.document.text;
        let mut out = AnnotationSet::new(input.document.clone());
        out.text_triples = analyze(text)
            .iter()
            .flat_map(|s| self.extract(text, &s.tokens))
            .collect();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Document;

    fn lex() -> Arc<Lexicons> {
        Arc::new(Lexicons::default())
    }

    fn run(c: &dyn Component, text: &str) -> Vec<[String; 3]> {
        let ann = AnnotationSet::new(Document::new("t", text));
        c.annotate(&ann, &KnowledgeGraph::empty("dbpedia"))
            .unwrap()
            .text_triples
            .into_iter()
            .map(|t| [t.subject.surface, t.predicate.surface, t.object.surface])
            .collect()
    }

    fn t(s: &str, p: &str, o: &str) -> [String; 3] {
        [s.to_string(), p.to_string(), o.to_string()]
    }

    #[test]
    fn svo_examples() {
        let svo = SvoExtractor::new(lex());
        assert_eq!(
            run(&svo, "Rembrandt painted The Storm on the Sea of Galilee."),
            vec![t("Rembrandt", "painted", "The Storm on the Sea of Galilee")]
        );
        assert_eq!(
            run(&svo, "The Storm on the Sea of Galilee was painted in 1633."),
            vec![t(
                "The Storm on the Sea of Galilee",
                "was painted in",
                "1633"
            )]
        );
        assert!(run(&svo, "").is_empty());
        assert!(run(&svo, "Anna smiled.").is_empty());
    }

    #[test]
    fn svo_variants() {
        let mut no_aux = SvoExtractor::new(lex());
        no_aux.extend_auxiliaries = false;
        assert_eq!(
            run(&no_aux, "The Night Watch was painted in 1642."),
            vec![t("The Night Watch", "was", "painted in 1642")]
        );
        let mut no_prep = SvoExtractor::new(lex());
        no_prep.extend_prepositions = false;
        assert_eq!(
            run(&no_prep, "The Night Watch was painted in 1642."),
            vec![t("The Night Watch", "was painted", "in 1642")]
        );
    }

    #[test]
    fn clause_split_examples() {
        let cs = ClauseSplitExtractor::new(lex());
        assert_eq!(
            run(&cs, "Durin, son of Thorin"),
            vec![t("Durin", "son of", "Thorin")]
        );
        assert!(run(&cs, "Anna sang, and Ben danced.").is_empty());
        assert_eq!(
            run(
                &cs,
                "Monet painted Water Lilies, and Munch painted The Scream."
            ),
            vec![
                t("Monet", "painted", "Water Lilies"),
                t("Munch", "painted", "The Scream")
            ]
        );
        let mut no_appos = ClauseSplitExtractor::new(lex());
        no_appos.appositives = false;
        assert!(run(&no_appos, "Durin, son of Thorin, was a king.").is_empty());
    }

    #[test]
    fn clause_split_equals_svo_without_split_points() {
        let svo = SvoExtractor::new(lex());
        let cs = ClauseSplitExtractor::new(lex());
        for s in [
            "Rembrandt painted The Storm on the Sea of Galilee.",
            "The Storm on the Sea of Galilee was painted in 1633.",
            "Wuhan has an average reproduction number of 2.68.",
        ] {
            assert_eq!(run(&svo, s), run(&cs, s));
        }
    }

    #[test]
    fn pattern_examples() {
        let pat = PatternExtractor::new(lex(), DEFAULT_MAX_GAP);
        assert_eq!(
            run(&pat, "The Storm on the Sea of Galilee was painted in 1633."),
            vec![t(
                "The Storm on the Sea of Galilee",
                "was painted in",
                "1633"
            )]
        );
        assert_eq!(
            run(&pat, "Anna works at TIB in Hannover."),
            vec![t("Anna", "works at", "TIB")]
        );
        assert!(run(&pat, "Rembrandt painted The Storm.").is_empty());
        assert_eq!(
            run(&pat, "Wuhan has an average reproduction number of 2.68."),
            vec![t("Wuhan", "has an average reproduction number of", "2.68")]
        );
        let short = PatternExtractor::new(lex(), 2);
        assert!(run(&short, "Wuhan has an average reproduction number of 2.68.").is_empty());
    }
}
