//! Per-sentence pipeline selection: features, argmax-F1 labels, the softmax
//! classifier, the greedy per-component baseline and cross-validation.

mod cv;
mod features;
mod greedy;
pub mod softmax;

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::Registry;
use crate::dataset::Example;
use crate::evaluation::RunMatrix;
use crate::kg::KnowledgeGraph;
use crate::pipeline::{PipelineConfig, PipelineError};

pub use cv::{
    classification_scores, cross_validate, cross_validate_dataset, fold_indices, CvReport,
    FoldScores,
};
pub use features::{
    extract_features, extract_features_with, FeatureVector, FEATURE_NAMES, FEATURE_VERSION,
    N_FEATURES,
};
pub use greedy::{select_greedy, train_greedy_baseline, ComponentPredictor, ComponentRegressor};
pub use softmax::Hyperparams;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error("no training examples")]
    NoExamples,
    #[error("no pipelines to label with")]
    NoPipelines,
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("invalid cross-validation setup: {0}")]
    Folds(String),
    #[error("invalid selector model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("model I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub id: String,
    pub text: String,
    pub features: FeatureVector,
    /// Pipeline id with the highest F1 (earliest in pipeline order on ties).
    pub label: String,
    /// F1 of every pipeline, in pipeline order.
    pub per_pipeline_f1: IndexMap<String, f64>,
    /// Every pipeline scored zero.
    pub degenerate: bool,
}

/// Index of the first maximum.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Labels examples from an already computed run matrix.
pub fn label_from_matrix(matrix: &RunMatrix, dataset: &[Example]) -> Vec<TrainingExample> {
    dataset
        .iter()
        .zip(&matrix.cells)
        .map(|(ex, row)| {
            let per_pipeline_f1: IndexMap<String, f64> = matrix
                .pipeline_ids
                .iter()
                .zip(row)
                .map(|(id, cell)| (id.clone(), cell.f1()))
                .collect();
            let best = argmax(per_pipeline_f1.values().copied()).unwrap_or(0);
            TrainingExample {
                id: ex.id.clone(),
                text: ex.text.clone(),
                features: extract_features(&ex.text),
                label: matrix.pipeline_ids[best].clone(),
                degenerate: per_pipeline_f1.values().all(|f| *f == 0.0),
                per_pipeline_f1,
            }
        })
        .collect()
}

/// Runs every pipeline on every example and labels each example with its
/// best pipeline.
pub fn label_training_data(
    reg: &Registry,
    pipelines: &[PipelineConfig],
    dataset: &[Example],
    kg: &KnowledgeGraph,
) -> Result<Vec<TrainingExample>, SelectorError> {
    if pipelines.is_empty() {
        return Err(SelectorError::NoPipelines);
    }
    if dataset.is_empty() {
        return Err(SelectorError::NoExamples);
    }
    let matrix = RunMatrix::compute(reg, pipelines, dataset, kg);
    Ok(label_from_matrix(&matrix, dataset))
}

/// A text → pipeline id classifier.
pub trait PipelineClassifier: Send + Sync {
    fn classes(&self) -> &[String];
    fn predict(&self, text: &str) -> String;
}

/// Something that can fit a [`PipelineClassifier`] on labeled examples.
pub trait ClassifierTrainer: Sync {
    type Model: PipelineClassifier;
    fn fit(&self, examples: &[TrainingExample]) -> Result<Self::Model, SelectorError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorModel {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub hyperparams: Hyperparams,
    /// Trained on a single class; always predicts it.
    #[serde(default)]
    pub constant: bool,
}

impl SelectorModel {
    pub fn validate(&self) -> Result<(), SelectorError> {
        let bad = |m: String| Err(SelectorError::InvalidModel(m));
        if self.version != MODEL_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.feature_names != FEATURE_NAMES {
            return bad("feature names differ from this build's feature set".into());
        }
        if self.classes.is_empty() {
            return bad("no classes".into());
        }
        let d = self.feature_names.len();
        if self.weights.len() != self.classes.len()
            || self.bias.len() != self.classes.len()
            || self.weights.iter().any(|w| w.len() != d)
            || self.means.len() != d
            || self.stds.len() != d
        {
            return bad("dimensions are inconsistent".into());
        }
        if self.stds.iter().any(|s| !(*s > 0.0)) {
            return bad("stds must be positive".into());
        }
        Ok(())
    }

    pub fn scores(&self, features: &FeatureVector) -> Vec<f64> {
        let z = softmax::normalize(features.as_slice(), &self.means, &self.stds);
        softmax::logits(&self.weights, &self.bias, &z)
    }

    pub fn predict_features(&self, features: &FeatureVector) -> &str {
        let best = argmax(self.scores(features)).unwrap_or(0);
        &self.classes[best]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<SelectorModel, SelectorError> {
        let model: SelectorModel = serde_json::from_str(json)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SelectorError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SelectorModel, SelectorError> {
        SelectorModel::from_json(&std::fs::read_to_string(path)?)
    }
}

impl PipelineClassifier for SelectorModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, text: &str) -> String {
        self.predict_features(&extract_features(text)).to_string()
    }
}

pub fn select_pipeline(model: &SelectorModel, text: &str) -> String {
    model.predict(text)
}

/// Softmax regression on z-scored sentence features.
pub fn train_selector(
    examples: &[TrainingExample],
    hp: &Hyperparams,
) -> Result<SelectorModel, SelectorError> {
    hp.validate().map_err(SelectorError::Hyperparams)?;
    let examples: Vec<&TrainingExample> = examples
        .iter()
        .filter(|e| !(hp.exclude_degenerate && e.degenerate))
        .collect();
    let first = examples.first().ok_or(SelectorError::NoExamples)?;
    // Classes follow pipeline order.
    let mut classes: Vec<String> = first
        .per_pipeline_f1
        .keys()
        .filter(|id| examples.iter().any(|e| &e.label == *id))
        .cloned()
        .collect();
    for e in &examples {
        if !classes.contains(&e.label) {
            classes.push(e.label.clone());
        }
    }
    let x: Vec<Vec<f64>> = examples.iter().map(|e| e.features.0.to_vec()).collect();
    let (means, stds) = softmax::fit_normalizer(&x, N_FEATURES);
    let mut model = SelectorModel {
        version: MODEL_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        weights: vec![vec![0.0; N_FEATURES]; classes.len()],
        bias: vec![0.0; classes.len()],
        classes,
        means,
        stds,
        hyperparams: hp.clone(),
        constant: false,
    };
    if model.classes.len() == 1 {
        log::warn!("all training examples share one label; the selector is constant");
        model.constant = true;
        return Ok(model);
    }
    let xn: Vec<Vec<f64>> = x
        .iter()
        .map(|r| softmax::normalize(r, &model.means, &model.stds))
        .collect();
    let y: Vec<usize> = examples
        .iter()
        .map(|e| {
            model
                .classes
                .iter()
                .position(|c| *c == e.label)
                .expect("label is a class")
        })
        .collect();
    let (w, b, _) = softmax::fit(&xn, &y, model.classes.len(), hp);
    model.weights = w;
    model.bias = b;
    Ok(model)
}

#[derive(Debug, Clone, Default)]
pub struct SoftmaxTrainer {
    pub hyperparams: Hyperparams,
}

impl ClassifierTrainer for SoftmaxTrainer {
    type Model = SelectorModel;
    fn fit(&self, examples: &[TrainingExample]) -> Result<SelectorModel, SelectorError> {
        train_selector(examples, &self.hyperparams)
    }
}
