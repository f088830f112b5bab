//! Triple scoring, pipeline and selector evaluation, error attribution and
//! micro-benchmark grids.

mod attribution;
mod microbench;

use std::collections::HashSet;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::LinkedTriple;
use crate::components::Registry;
use crate::dataset::Example;
use crate::kg::KnowledgeGraph;
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use crate::selector::{select_greedy, ComponentPredictor, PipelineClassifier};

pub use attribution::{attribute_errors, format_attribution, ErrorAttribution};
pub use microbench::{bucket_names, buckets_for, microbench, MicrobenchGrid};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("example {example:?} has no gold {stage} annotations")]
    MissingGold { stage: String, example: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub predicted: usize,
    pub gold: usize,
    pub correct: usize,
}

impl Counts {
    pub fn add(&mut self, other: Counts) {
        self.predicted += other.predicted;
        self.gold += other.gold;
        self.correct += other.correct;
    }

    pub fn scores(&self) -> Scores {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.correct, self.predicted);
        let recall = ratio(self.correct, self.gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Scores {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Set overlap counts; duplicates inside either side count once.
pub fn count_matches<T: Eq + Hash>(predicted: &[T], gold: &[T]) -> Counts {
    let p: HashSet<&T> = predicted.iter().collect();
    let g: HashSet<&T> = gold.iter().collect();
    Counts {
        predicted: p.len(),
        gold: g.len(),
        correct: p.intersection(&g).count(),
    }
}

/// Exact IRI / normalized-literal matching.
pub fn score_triples(predicted: &[LinkedTriple], gold: &[LinkedTriple]) -> Scores {
    count_matches(predicted, gold).scores()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// Always "micro": counts are summed over the corpus before P/R/F1.
    pub averaging: String,
    /// What was evaluated: a pipeline id, "model", "oracle" or "greedy".
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_sentence: Vec<SentenceScore>,
    pub counts: Counts,
    pub metadata: ReportMetadata,
}

/// Outcome of running one pipeline on one example.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub counts: Counts,
    pub predicted: Vec<LinkedTriple>,
    pub error: Option<String>,
}

impl RunOutcome {
    pub fn f1(&self) -> f64 {
        self.counts.scores().f1
    }
}

/// Runs `cfg` on `ex` and scores it. Failures score zero.
pub fn run_and_score(
    reg: &Registry,
    cfg: &PipelineConfig,
    ex: &Example,
    kg: &KnowledgeGraph,
) -> RunOutcome {
    let gold = ex.gold();
    match run_pipeline(reg, cfg, &ex.document(), kg) {
        Ok(res) => RunOutcome {
            counts: count_matches(&res.linked_triples, &gold),
            predicted: res.linked_triples,
            error: None,
        },
        Err(e) => RunOutcome {
            counts: Counts {
                predicted: 0,
                gold: gold.len(),
                correct: 0,
            },
            predicted: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Builds a micro-averaged report from per-example outcomes.
pub fn report_from(
    subject: &str,
    examples: &[Example],
    outcomes: &[(Option<String>, Counts, Option<String>)],
) -> EvalReport {
    let mut total = Counts::default();
    let mut per_sentence = Vec::with_capacity(examples.len());
    for (ex, (pipeline_id, counts, error)) in examples.iter().zip(outcomes) {
        total.add(*counts);
        let s = counts.scores();
        per_sentence.push(SentenceScore {
            id: ex.id.clone(),
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            pipeline_id: pipeline_id.clone(),
            error: error.clone(),
        });
    }
    let s = total.scores();
    EvalReport {
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
        per_sentence,
        counts: total,
        metadata: ReportMetadata {
            averaging: "micro".to_string(),
            subject: subject.to_string(),
        },
    }
}

pub fn evaluate_pipeline(
    reg: &Registry,
    cfg: &PipelineConfig,
    dataset: &[Example],
    kg: &KnowledgeGraph,
) -> EvalReport {
    let outcomes: Vec<_> = dataset
        .par_iter()
        .map(|ex| {
            let r = run_and_score(reg, cfg, ex, kg);
            (None, r.counts, r.error)
        })
        .collect();
    report_from(&cfg.id, dataset, &outcomes)
}

/// How `evaluate_selector` picks a pipeline per sentence.
pub enum Selection<'a> {
    Model(&'a dyn PipelineClassifier),
    /// Per-sentence argmax of gold F1 over the pool (earliest on ties).
    Oracle,
    Greedy(&'a ComponentPredictor),
}

pub fn evaluate_selector(
    reg: &Registry,
    selection: &Selection<'_>,
    pipelines: &[PipelineConfig],
    dataset: &[Example],
    kg: &KnowledgeGraph,
) -> Result<EvalReport, EvalError> {
    if pipelines.is_empty() {
        return Err(EvalError::Configuration("empty pipeline pool".into()));
    }
    if let Selection::Model(model) = selection {
        if let Some(missing) = model
            .classes()
            .iter()
            .find(|c| !pipelines.iter().any(|p| &p.id == *c))
        {
            return Err(EvalError::Configuration(format!(
                "model class {missing} is not in the pipeline pool"
            )));
        }
    }
    let subject = match selection {
        Selection::Model(_) => "model",
        Selection::Oracle => "oracle",
        Selection::Greedy(_) => "greedy",
    };
    let outcomes: Vec<_> = dataset
        .par_iter()
        .map(|ex| -> Result<_, EvalError> {
            let (cfg, outcome) = match selection {
                Selection::Model(model) => {
                    let id = model.predict(&ex.text);
                    let cfg = pipelines
                        .iter()
                        .find(|p| p.id == id)
                        .expect("checked above");
                    (cfg.clone(), run_and_score(reg, cfg, ex, kg))
                }
                Selection::Oracle => {
                    let mut best: Option<(PipelineConfig, RunOutcome)> = None;
                    for cfg in pipelines {
                        let r = run_and_score(reg, cfg, ex, kg);
                        if best.as_ref().is_none_or(|(_, b)| r.f1() > b.f1()) {
                            best = Some((cfg.clone(), r));
                        }
                    }
                    best.expect("pool is non-empty")
                }
                Selection::Greedy(pred) => {
                    let cfg = select_greedy(pred, &ex.text, reg, &kg.name)?;
                    let r = run_and_score(reg, &cfg, ex, kg);
                    (cfg, r)
                }
            };
            Ok((Some(cfg.id), outcome.counts, outcome.error))
        })
        .collect::<Result<_, _>>()?;
    Ok(report_from(subject, dataset, &outcomes))
}

/// Every pipeline run on every example, computed once and reused for
/// labeling, static baselines and oracle selection.
#[derive(Debug, Clone)]
pub struct RunMatrix {
    pub pipeline_ids: Vec<String>,
    /// `cells[example][pipeline]`.
    pub cells: Vec<Vec<RunOutcome>>,
}

impl RunMatrix {
    pub fn compute(
        reg: &Registry,
        pipelines: &[PipelineConfig],
        dataset: &[Example],
        kg: &KnowledgeGraph,
    ) -> RunMatrix {
        let cells = dataset
            .par_iter()
            .map(|ex| {
                pipelines
                    .par_iter()
                    .map(|cfg| run_and_score(reg, cfg, ex, kg))
                    .collect()
            })
            .collect();
        RunMatrix {
            pipeline_ids: pipelines.iter().map(|p| p.id.clone()).collect(),
            cells,
        }
    }

    /// Report for choosing pipeline `choices[i]` on example `i`.
    pub fn report_for(&self, subject: &str, dataset: &[Example], choices: &[usize]) -> EvalReport {
        let outcomes: Vec<_> = choices
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let cell = &self.cells[i][j];
                (
                    Some(self.pipeline_ids[j].clone()),
                    cell.counts,
                    cell.error.clone(),
                )
            })
            .collect();
        report_from(subject, dataset, &outcomes)
    }

    pub fn static_report(&self, dataset: &[Example], j: usize) -> EvalReport {
        let mut r = self.report_for(&self.pipeline_ids[j], dataset, &vec![j; self.cells.len()]);
        for s in &mut r.per_sentence {
            s.pipeline_id = None;
        }
        r
    }

    /// Index of the best static pipeline by micro F1 (earliest on ties).
    pub fn best_static(&self, dataset: &[Example]) -> Option<(usize, EvalReport)> {
        let mut best: Option<(usize, EvalReport)> = None;
        for j in 0..self.pipeline_ids.len() {
            let r = self.static_report(dataset, j);
            if best.as_ref().is_none_or(|(_, b)| r.f1 > b.f1) {
                best = Some((j, r));
            }
        }
        best
    }

    pub fn oracle_choices(&self) -> Vec<usize> {
        self.cells
            .iter()
            .map(|row| {
                let mut best = 0;
                for (j, c) in row.iter().enumerate() {
                    if c.f1() > row[best].f1() {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn index_of(&self, pipeline_id: &str) -> Option<usize> {
        self.pipeline_ids.iter().position(|p| p == pipeline_id)
    }
}
