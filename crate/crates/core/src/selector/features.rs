use serde::{Deserialize, Serialize};

use crate::text::{analyze, Lexicons};

/// Bumped whenever the feature list or a feature definition changes.
pub const FEATURE_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; 14] = [
    "token_count",
    "sentence_count",
    "comma_count",
    "conjunction_count",
    "pronoun_count",
    "demonstrative_count",
    "proper_noun_count",
    "capitalized_run_count",
    "max_capitalized_run_len",
    "acronym_count",
    "digit_token_count",
    "avg_token_len",
    "preposition_count",
    "lowercase_ratio",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.0[i])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn extract_features(text: &str) -> FeatureVector {
    extract_features_with(&Lexicons::default(), text)
}

pub fn extract_features_with(lex: &Lexicons, text: &str) -> FeatureVector {
    let sentences = analyze(text);
    let mut tokens = 0usize;
    let mut chars = 0usize;
    let mut lowercase = 0usize;
    let (mut conj, mut pron, mut demo, mut proper, mut runs, mut max_run) = (0, 0, 0, 0, 0, 0);
    let (mut acronyms, mut digits, mut preps) = (0, 0, 0);
    for s in &sentences {
        for (i, tok) in s.tokens.iter().enumerate() {
            tokens += 1;
            chars += tok.text.chars().count();
            lowercase += usize::from(tok.starts_lowercase());
            conj += usize::from(lex.is_conjunction(tok));
            pron += usize::from(lex.is_pronoun(tok));
            demo += usize::from(lex.is_demonstrative(tok));
            proper += usize::from(i > 0 && tok.is_capitalized());
            acronyms += usize::from(tok.is_acronym());
            digits += usize::from(tok.has_digit());
            preps += usize::from(lex.is_preposition(tok));
        }
        for r in lex.name_phrases(&s.tokens) {
            runs += 1;
            max_run = max_run.max(r.len());
        }
    }
    let per_token = |n: usize| {
        if tokens == 0 {
            0.0
        } else {
            n as f64 / tokens as f64
        }
    };
    FeatureVector([
        tokens as f64,
        sentences.len() as f64,
        text.matches(',').count() as f64,
        conj as f64,
        pron as f64,
        demo as f64,
        proper as f64,
        runs as f64,
        max_run as f64,
        acronyms as f64,
        digits as f64,
        per_token(chars),
        preps as f64,
        per_token(lowercase),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_example_counts() {
        let f = extract_features("Rembrandt painted The Storm on the Sea of Galilee.");
        assert_eq!(f.get("token_count"), Some(9.0));
        assert_eq!(f.get("comma_count"), Some(0.0));
        assert_eq!(f.get("demonstrative_count"), Some(0.0));
        assert_eq!(f.get("capitalized_run_count"), Some(2.0));
        assert_eq!(f.get("max_capitalized_run_len"), Some(7.0));
        assert_eq!(f.get("proper_noun_count"), Some(4.0));
    }

    #[test]
    fn empty_and_lowercase_text() {
        assert_eq!(extract_features("").0, [0.0; N_FEATURES]);
        let f = extract_features("cats have tails");
        assert_eq!(f.get("token_count"), Some(3.0));
        assert_eq!(f.get("proper_noun_count"), Some(0.0));
        assert_eq!(f.get("lowercase_ratio"), Some(1.0));
    }

    #[test]
    fn features_are_finite_and_non_negative() {
        for text in [
            "Durin, son of Thorin, was a king.",
            "NASA and ESA launched it in 1999!",
            "…",
            "a",
        ] {
            let f = extract_features(text);
            assert!(f.0.iter().all(|v| v.is_finite() && *v >= 0.0));
            assert!((0.0..=1.0).contains(&f.get("lowercase_ratio").unwrap()));
        }
    }
}
