//! Per-component F1 broken down by linguistic buckets of the input sentence.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::attribution::{output_keys, GoldStages};
use super::{count_matches, Counts, EvalError};
use crate::components::{Registry, Task};
use crate::dataset::Example;
use crate::kg::{EntryKind, KnowledgeGraph};
use crate::text::{analyze, tokenize, Lexicons, Token};

/// Splits predicate and label words at the word-count bucket boundary.
const SHORT_PHRASE_WORDS: usize = 2;
/// Word-count boundary for TE, from an average sentence length of 7.41 words.
const SHORT_SENTENCE_WORDS: usize = 7;
const ATOMIC_MAX_WORDS: usize = 5;

pub fn bucket_names(task: Task) -> &'static [&'static str] {
    match task {
        Task::Te => &[
            "wc<=7",
            "wc>7",
            "has_comma",
            "atomic",
            "nominal_relation",
            "lowercase_mentions",
        ],
        Task::Cr => &[
            "chain_len=1",
            "chain_len>=2",
            "clusters=1",
            "clusters>=2",
            "has_proper_noun",
            "has_acronym",
            "demonstrative",
        ],
        Task::El => &[
            "e=1",
            "e=2",
            "capitalized",
            "lowercase",
            "explicit",
            "implicit",
            "label_words<=2",
            "label_words>2",
        ],
        Task::Rl | Task::ElRl => &[
            "rel=1",
            "rel=2",
            "explicit",
            "implicit",
            "covered",
            "pred_words<=2",
            "pred_words>2",
        ],
    }
}

fn words(s: &str) -> usize {
    s.split_whitespace().count()
}

fn starts_lowercase(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_lowercase)
}

/// Whether `surface` is a label or alias of `iri`, ignoring case.
fn explicit(kg: &KnowledgeGraph, kind: EntryKind, iri: &str, surface: &str) -> bool {
    let surface = surface.trim().to_lowercase();
    kg.get(kind, iri)
        .is_some_and(|e| e.names().any(|n| n.to_lowercase() == surface))
}

/// "X, w of Y" with one to three lowercase words between comma and "of".
fn has_appositive(tokens: &[Token]) -> bool {
    tokens.iter().enumerate().any(|(c, t)| {
        t.ends_with_comma()
            && (c + 2..=c + 4).any(|k| {
                k + 1 < tokens.len()
                    && tokens[k].lower() == "of"
                    && tokens[c + 1..k]
                        .iter()
                        .all(|w| w.starts_lowercase() && !w.has_trailing_punct())
            })
    })
}

/// Buckets of `ex` for `task`; depends only on the sentence and its gold.
pub fn buckets_for(
    task: Task,
    ex: &Example,
    kg: &KnowledgeGraph,
    lex: &Lexicons,
) -> Vec<&'static str> {
    let names = bucket_names(task);
    let tokens = tokenize(&ex.text);
    let wc = tokens.len();
    let entity_links = ex.gold_entity_links.as_deref().unwrap_or(&[]);
    let relation_links = ex.gold_relation_links.as_deref().unwrap_or(&[]);
    let flags: Vec<bool> = match task {
        Task::Te => {
            let comma = ex.text.contains(',');
            let conj = tokens.iter().any(|t| lex.is_conjunction(t));
            let single = analyze(&ex.text).len() == 1;
            vec![
                wc <= SHORT_SENTENCE_WORDS,
                wc > SHORT_SENTENCE_WORDS,
                comma,
                single && !comma && !conj && wc <= ATOMIC_MAX_WORDS,
                has_appositive(&tokens),
                entity_links
                    .iter()
                    .any(|l| starts_lowercase(&l.span.surface)),
            ]
        }
        Task::Cr => {
            let clusters = ex.gold_clusters.as_deref().unwrap_or(&[]);
            let chain = clusters.iter().map(|c| c.mentions.len()).max().unwrap_or(0);
            let sentences = analyze(&ex.text);
            vec![
                chain == 1,
                chain >= 2,
                clusters.len() == 1,
                clusters.len() >= 2,
                sentences
                    .iter()
                    .any(|s| !lex.name_phrases(&s.tokens).is_empty()),
                tokens.iter().any(Token::is_acronym),
                tokens.iter().any(|t| lex.is_demonstrative(t)),
            ]
        }
        Task::El => {
            let iris: BTreeSet<&str> = entity_links.iter().map(|l| l.iri.as_str()).collect();
            let any = !entity_links.is_empty();
            let label_words = iris
                .iter()
                .filter_map(|i| kg.get(EntryKind::Entity, i))
                .map(|e| words(&e.label))
                .max()
                .unwrap_or(0);
            vec![
                iris.len() == 1,
                iris.len() == 2,
                any && entity_links
                    .iter()
                    .all(|l| !starts_lowercase(&l.span.surface)),
                entity_links
                    .iter()
                    .any(|l| starts_lowercase(&l.span.surface)),
                entity_links
                    .iter()
                    .any(|l| explicit(kg, EntryKind::Entity, &l.iri, &l.span.surface)),
                entity_links
                    .iter()
                    .any(|l| !explicit(kg, EntryKind::Entity, &l.iri, &l.span.surface)),
                any && label_words <= SHORT_PHRASE_WORDS,
                label_words > SHORT_PHRASE_WORDS,
            ]
        }
        Task::Rl | Task::ElRl => {
            let gold = ex.gold();
            let rels: BTreeSet<&str> = gold.iter().map(|t| t.predicate_iri.as_str()).collect();
            let sentence_words: BTreeSet<String> = tokens.iter().map(Token::lower).collect();
            let covered = rels.iter().any(|iri| {
                !relation_links.iter().any(|l| l.iri == *iri)
                    && kg.get(EntryKind::Property, iri).is_some_and(|e| {
                        tokenize(&e.label)
                            .iter()
                            .all(|t| !sentence_words.contains(&t.lower()))
                    })
            });
            let pred_words = relation_links
                .iter()
                .map(|l| words(&l.span.surface))
                .max()
                .unwrap_or(0);
            vec![
                rels.len() == 1,
                rels.len() == 2,
                relation_links
                    .iter()
                    .any(|l| explicit(kg, EntryKind::Property, &l.iri, &l.span.surface)),
                relation_links
                    .iter()
                    .any(|l| !explicit(kg, EntryKind::Property, &l.iri, &l.span.surface)),
                covered,
                !relation_links.is_empty() && pred_words <= SHORT_PHRASE_WORDS,
                pred_words > SHORT_PHRASE_WORDS,
            ]
        }
    };
    names
        .iter()
        .zip(flags)
        .filter(|(_, f)| *f)
        .map(|(n, _)| *n)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrobenchGrid {
    pub task: Task,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][column]`: micro F1 over the bucket's sentences.
    pub cells: Vec<Vec<f64>>,
    /// Sentences in each cell's bucket.
    pub support: Vec<Vec<usize>>,
}

impl MicrobenchGrid {
    pub fn cell(&self, row: &str, column: &str) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == column)?;
        Some(self.cells[r][c])
    }

    pub fn support_of(&self, row: &str, column: &str) -> Option<usize> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == column)?;
        Some(self.support[r][c])
    }

    fn csv_with(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let mut out = format!("component,{}\n", self.columns.join(","));
        for (r, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = (0..self.columns.len()).map(|c| cell(r, c)).collect();
            out.push_str(&format!("{row},{}\n", cells.join(",")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        self.csv_with(|r, c| format!("{:.4}", self.cells[r][c]))
    }

    pub fn support_csv(&self) -> String {
        self.csv_with(|r, c| self.support[r][c].to_string())
    }
}

/// Scores each component on the gold input of `task`, per bucket. Joint
/// linkers may appear in the EL and RL grids.
pub fn microbench(
    reg: &Registry,
    task: Task,
    components: &[String],
    dataset: &[Example],
    kg: &KnowledgeGraph,
    lex: &Lexicons,
) -> Result<MicrobenchGrid, EvalError> {
    if task == Task::ElRl {
        return Err(EvalError::Configuration(
            "micro-benchmarks are per task: use EL or RL for joint linkers".into(),
        ));
    }
    for id in components {
        let meta = reg
            .get(id)
            .ok_or_else(|| EvalError::Configuration(format!("unknown component {id:?}")))?;
        let fits =
            meta.task == task || (meta.task == Task::ElRl && matches!(task, Task::El | Task::Rl));
        if !fits {
            return Err(EvalError::Configuration(format!(
                "{id} is a {} component, not {task}",
                meta.task
            )));
        }
    }
    let columns = bucket_names(task);
    let golds: Vec<GoldStages> = dataset
        .iter()
        .map(GoldStages::from_example)
        .collect::<Result<_, _>>()?;
    let buckets: Vec<Vec<&str>> = dataset
        .iter()
        .map(|ex| buckets_for(task, ex, kg, lex))
        .collect();

    let mut cells = Vec::with_capacity(components.len());
    let mut support = Vec::with_capacity(components.len());
    for id in components {
        let mut counts = vec![Counts::default(); columns.len()];
        let mut sup = vec![0usize; columns.len()];
        let run_task = reg.get(id).map(|m| m.task).unwrap_or(task);
        for (gold, bs) in golds.iter().zip(&buckets) {
            if bs.is_empty() {
                continue;
            }
            let out = gold.run(reg, id, run_task, kg);
            let c = count_matches(&output_keys(&out, task), &gold.gold_keys(task));
            for (j, col) in columns.iter().enumerate() {
                if bs.contains(col) {
                    counts[j].add(c);
                    sup[j] += 1;
                }
            }
        }
        cells.push(counts.iter().map(|c| c.scores().f1).collect());
        support.push(sup);
    }
    Ok(MicrobenchGrid {
        task,
        rows: components.to_vec(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        cells,
        support,
    })
}
