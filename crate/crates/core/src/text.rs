//! Tokenization, sentence segmentation and the closed-class lexicons shared by
//! the builtin components and the selector features.
//!
//! All offsets are character (Unicode scalar value) offsets, never bytes.

use std::collections::HashSet;
use std::ops::Range;

use crate::annotation::Span;

const BUNDLED_VERBS: &str = include_str!("../../../fixtures/verbs.txt");

/// A whitespace-delimited token with leading/trailing punctuation stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    /// Punctuation removed from the front of the raw token.
    pub leading: String,
    /// Punctuation removed from the end of the raw token.
    pub trailing: String,
}

impl Token {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }

    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }

    pub fn starts_lowercase(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_lowercase)
    }

    pub fn has_trailing_punct(&self) -> bool {
        !self.trailing.is_empty()
    }

    pub fn ends_with_comma(&self) -> bool {
        self.trailing.contains(',')
    }

    pub fn has_digit(&self) -> bool {
        self.text.chars().any(|c| c.is_ascii_digit())
    }

    /// At least two letters, all of them uppercase.
    pub fn is_acronym(&self) -> bool {
        let letters: Vec<char> = self.text.chars().filter(|c| c.is_alphabetic()).collect();
        letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
    }
}

/// Splits `text` on Unicode whitespace and strips non-alphanumeric characters
/// from both ends of every raw token. Tokens made only of punctuation vanish.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_range(text, 0)
}

fn tokenize_range(text: &str, char_base: usize) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let raw_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let raw_end = i;
        let mut s = raw_start;
        let mut e = raw_end;
        while s < e && !chars[s].is_alphanumeric() {
            s += 1;
        }
        while e > s && !chars[e - 1].is_alphanumeric() {
            e -= 1;
        }
        if s == e {
            continue;
        }
        tokens.push(Token {
            text: chars[s..e].iter().collect(),
            start: char_base + s,
            end: char_base + e,
            leading: chars[raw_start..s].iter().collect(),
            trailing: chars[e..raw_end].iter().collect(),
        });
    }
    tokens
}

/// Sentence boundaries: a '.', '!' or '?' followed by whitespace and an
/// uppercase letter, or by nothing but whitespace. Abbreviations are not
/// special-cased. Each bound is trimmed of surrounding whitespace.
pub fn split_sentences(text: &str) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let at_end = j == chars.len();
            let boundary = at_end || (j > i + 1 && chars[j].is_uppercase());
            if boundary {
                push_trimmed(&chars, start, i + 1, &mut bounds);
                start = i + 1;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    push_trimmed(&chars, start, chars.len(), &mut bounds);
    bounds
}

fn push_trimmed(chars: &[char], mut s: usize, mut e: usize, out: &mut Vec<Span>) {
    while s < e && chars[s].is_whitespace() {
        s += 1;
    }
    while e > s && chars[e - 1].is_whitespace() {
        e -= 1;
    }
    if s < e {
        out.push(Span {
            start: s,
            end: e,
            surface: chars[s..e].iter().collect(),
        });
    }
}

/// A sentence together with its tokens (offsets relative to the whole text).
#[derive(Debug, Clone)]
pub struct Sentence {
    pub span: Span,
    pub tokens: Vec<Token>,
}

/// Segments and tokenizes `text`.
pub fn analyze(text: &str) -> Vec<Sentence> {
    split_sentences(text)
        .into_iter()
        .map(|span| {
            let tokens = tokenize_range(&span.surface, span.start);
            Sentence { span, tokens }
        })
        .collect()
}

/// Builds the span that runs from the first to the last token of `tokens`.
pub fn token_span(text: &str, tokens: &[Token]) -> Option<Span> {
    let first = tokens.first()?;
    let last = tokens.last()?;
    Some(Span::from_text(text, first.start, last.end))
}

/// Closed-class word lists plus the editable verb list.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub pronouns: HashSet<String>,
    pub demonstratives: HashSet<String>,
    pub auxiliaries: HashSet<String>,
    pub prepositions: HashSet<String>,
    pub inner_name_words: HashSet<String>,
    pub conjunctions: HashSet<String>,
    pub verbs: HashSet<String>,
}

fn set(words: &[&str]) -> HashSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for Lexicons {
    fn default() -> Self {
        Self::with_verbs(BUNDLED_VERBS)
    }
}

impl Lexicons {
    /// Lexicons with a verb list in the one-verb-per-line format.
    pub fn with_verbs(verb_list: &str) -> Self {
        let verbs = verb_list
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Lexicons {
            pronouns: set(&[
                "he", "she", "it", "they", "him", "her", "them", "his", "hers", "its", "their",
            ]),
            demonstratives: set(&["this", "that", "these", "those"]),
            auxiliaries: set(&[
                "is", "was", "are", "were", "has", "have", "had", "be", "been",
            ]),
            prepositions: set(&["in", "on", "of", "by", "from", "to", "at", "for", "with"]),
            inner_name_words: set(&["of", "the", "on", "de", "van", "der"]),
            conjunctions: set(&["and", "or"]),
            verbs,
        }
    }

    pub fn is_pronoun(&self, tok: &Token) -> bool {
        self.pronouns.contains(&tok.lower())
    }

    pub fn is_demonstrative(&self, tok: &Token) -> bool {
        self.demonstratives.contains(&tok.lower())
    }

    pub fn is_auxiliary(&self, tok: &Token) -> bool {
        self.auxiliaries.contains(&tok.lower())
    }

    pub fn is_preposition(&self, tok: &Token) -> bool {
        self.prepositions.contains(&tok.lower())
    }

    pub fn is_conjunction(&self, tok: &Token) -> bool {
        self.conjunctions.contains(&tok.lower())
    }

    /// Auxiliaries, listed verbs, and "-ed"/"-ing" forms. Capitalized tokens
    /// are never verbs so that name phrases are not split apart.
    pub fn is_verb(&self, tok: &Token) -> bool {
        if tok.is_capitalized() {
            return false;
        }
        let lc = tok.lower();
        let n = lc.chars().count();
        self.auxiliaries.contains(&lc)
            || self.verbs.contains(&lc)
            || (n > 3 && lc.ends_with("ed"))
            || (n > 4 && lc.ends_with("ing"))
    }

    /// Words that carry no entity content on their own.
    pub fn is_function_word(&self, tok: &Token) -> bool {
        let lc = tok.lower();
        self.pronouns.contains(&lc)
            || self.demonstratives.contains(&lc)
            || self.auxiliaries.contains(&lc)
            || self.prepositions.contains(&lc)
            || self.inner_name_words.contains(&lc)
            || self.conjunctions.contains(&lc)
            || lc == "a"
            || lc == "an"
    }

    fn is_name_word(&self, tok: &Token) -> bool {
        tok.is_capitalized() && !self.is_pronoun(tok) && !self.is_demonstrative(tok)
    }

    /// Maximal runs of capitalized tokens, allowing inner name words ("of",
    /// "the", "van", ...) between capitalized tokens. Runs stop after a token
    /// carrying trailing punctuation. Returned as token index ranges.
    pub fn name_phrases(&self, tokens: &[Token]) -> Vec<Range<usize>> {
        let mut phrases = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let tok = &tokens[i];
            let starts = self.is_name_word(tok)
                && !self.prepositions.contains(&tok.lower())
                && !self.is_conjunction(tok);
            if !starts {
                i += 1;
                continue;
            }
            let mut last_cap = i;
            let mut j = i;
            while !tokens[j].has_trailing_punct() && j + 1 < tokens.len() {
                let next = &tokens[j + 1];
                if !next.leading.is_empty() {
                    break;
                }
                if self.is_name_word(next) {
                    j += 1;
                    last_cap = j;
                } else if self.inner_name_words.contains(&next.lower()) {
                    j += 1;
                } else {
                    break;
                }
            }
            let lone_inner = last_cap == i && self.inner_name_words.contains(&tok.lower());
            if !lone_inner {
                phrases.push(i..last_cap + 1);
            }
            i = last_cap + 1;
        }
        phrases
    }
}

/// Whether a surface form should be treated as a literal rather than an
/// entity mention: a decimal number, a 4-digit year, or a quoted string.
pub fn is_literal_surface(surface: &str) -> bool {
    let s = surface.trim();
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        return true;
    }
    is_decimal(s) || (s.len() == 4 && s.chars().all(|c| c.is_ascii_digit()))
}

pub(crate) fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |p: &str| p.chars().all(|c| c.is_ascii_digit());
    match frac {
        None => !int.is_empty() && digits(int),
        Some(f) => digits(int) && digits(f) && !(int.is_empty() && f.is_empty()),
    }
}

/// Literal check that also looks at the characters right around the span, so
/// that quotes stripped by the tokenizer still count.
pub fn is_literal_span(text: &str, span: &Span) -> bool {
    if is_literal_surface(&span.surface) {
        return true;
    }
    let before = span.start.checked_sub(1).and_then(|i| text.chars().nth(i));
    let after = text.chars().nth(span.end);
    before == Some('"') && after == Some('"')
}
