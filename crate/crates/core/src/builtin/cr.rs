//! Rule-based coreference resolvers.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::annotation::{AnnotationSet, CorefCluster, Span};
use crate::components::{Component, ComponentError};
use crate::kg::KnowledgeGraph;
use crate::text::{analyze, token_span, Lexicons};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorefMode {
    /// Emits nothing.
    Identity,
    /// Nearest preceding name phrase in the same or the previous sentence.
    Nearest,
    /// Last name phrase of the previous sentence only.
    PreviousSentence,
    /// Like `Nearest`, and also resolves demonstratives used as subjects
    /// (followed by a verb or ending the sentence).
    NearestWithDemonstratives,
}

#[derive(Debug, Clone)]
pub struct CorefResolver {
    mode: CorefMode,
    lex: Arc<Lexicons>,
}

impl CorefResolver {
    pub fn new(mode: CorefMode, lex: Arc<Lexicons>) -> CorefResolver {
        CorefResolver { mode, lex }
    }

    pub fn resolve(&self, text: &str) -> Vec<CorefCluster> {
        if self.mode == CorefMode::Identity {
            return Vec::new();
        }
        let sentences = analyze(text);
        let phrases: Vec<Vec<Span>> = sentences
            .iter()
            .map(|s| {
                self.lex
                    .name_phrases(&s.tokens)
                    .into_iter()
                    .filter_map(|r| token_span(text, &s.tokens[r]))
                    .collect()
            })
            .collect();

        let mut groups: BTreeMap<Span, Vec<Span>> = BTreeMap::new();
        for (k, sentence) in sentences.iter().enumerate() {
            let toks = &sentence.tokens;
            for (i, tok) in toks.iter().enumerate() {
                let is_mention = self.lex.is_pronoun(tok)
                    || (self.mode == CorefMode::NearestWithDemonstratives
                        && self.lex.is_demonstrative(tok)
                        && toks.get(i + 1).is_none_or(|next| self.lex.is_verb(next)));
                if !is_mention {
                    continue;
                }
                let previous = k.checked_sub(1).and_then(|p| phrases[p].last());
                let antecedent = match self.mode {
                    CorefMode::PreviousSentence => previous,
                    _ => phrases[k]
                        .iter()
                        .rev()
                        .find(|p| p.end <= tok.start)
                        .or(previous),
                };
                if let Some(rep) = antecedent {
                    let mention = Span::from_text(text, tok.start, tok.end);
                    groups.entry(rep.clone()).or_default().push(mention);
                }
            }
        }
        groups
            .into_iter()
            .map(|(representative, mentions)| CorefCluster {
                representative,
                mentions,
            })
            .collect()
    }
}

impl Component for CorefResolver {
    fn annotate(
        &self,
        input: &AnnotationSet,
        _kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let mut out = AnnotationSet::new(input.document.clone());
        out.clusters = self.resolve(&input.document.text);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(mode: CorefMode, text: &str) -> Vec<(String, Vec<String>)> {
        CorefResolver::new(mode, Arc::new(Lexicons::default()))
            .resolve(text)
            .into_iter()
            .map(|c| {
                (
                    c.representative.surface,
                    c.mentions.into_iter().map(|m| m.surface).collect(),
                )
            })
            .collect()
    }

    const REMBRANDT: &str = "Rembrandt painted The Storm on the Sea of Galilee. It was painted in 1633.";

    #[test]
    fn identity_emits_nothing() {
        assert!(resolve(CorefMode::Identity, REMBRANDT).is_empty());
        assert!(resolve(CorefMode::Identity, "").is_empty());
    }

    #[test]
    fn nearest_resolves_golden_example() {
        assert_eq!(
            resolve(CorefMode::Nearest, REMBRANDT),
            vec![(
                "The Storm on the Sea of Galilee".to_string(),
                vec!["It".to_string()]
            )]
        );
    }

    #[test]
    fn nearest_is_recency_based() {
        assert_eq!(
            resolve(CorefMode::Nearest, "Anna met Ben. She smiled."),
            vec![("Ben".to_string(), vec!["She".to_string()])]
        );
        assert!(resolve(CorefMode::Nearest, "cats have tails").is_empty());
    }

    #[test]
    fn same_sentence_antecedent_and_grouping() {
        let got = resolve(CorefMode::Nearest, "Rembrandt said he loved his wife.");
        assert_eq!(
            got,
            vec![(
                "Rembrandt".to_string(),
                vec!["he".to_string(), "his".to_string()]
            )]
        );
        // The previous-sentence variant ignores same-sentence antecedents.
        assert!(resolve(
            CorefMode::PreviousSentence,
            "Rembrandt said he loved his wife."
        )
        .is_empty());
    }

    #[test]
    fn antecedent_limited_to_previous_sentence() {
        let text = "Monet lived in Giverny. The garden grew. It was large.";
        assert!(resolve(CorefMode::Nearest, text).is_empty());
    }

    #[test]
    fn demonstratives_only_in_extended_mode() {
        let text = "Wuhan reported cases. This was surprising.";
        assert!(resolve(CorefMode::Nearest, text).is_empty());
        assert_eq!(
            resolve(CorefMode::NearestWithDemonstratives, text),
            vec![("Wuhan".to_string(), vec!["This".to_string()])]
        );
        assert!(resolve(
            CorefMode::NearestWithDemonstratives,
            "Wuhan grew. This city grew."
        )
        .is_empty());
    }
}
