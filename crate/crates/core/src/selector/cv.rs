//! Seeded k-fold cross-validation of the pipeline classifier.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::softmax::Hyperparams;
use super::{
    label_training_data, ClassifierTrainer, PipelineClassifier, SelectorError, SoftmaxTrainer,
    TrainingExample,
};
use crate::components::Registry;
use crate::dataset::Example;
use crate::evaluation::Scores;
use crate::kg::KnowledgeGraph;
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScores {
    pub fold: usize,
    pub test_size: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldScores>,
    pub mean: Scores,
    /// Population standard deviation across folds.
    pub std: Scores,
}

/// Test indices of each fold: a seeded shuffle cut into `k` contiguous
/// chunks whose sizes differ by at most one.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, SelectorError> {
    if k < 2 {
        return Err(SelectorError::Folds(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if n < k {
        return Err(SelectorError::Folds(format!(
            "{n} examples cannot fill {k} folds"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Macro-averaged precision/recall/F1 over every class seen in either list.
/// Classes never predicted (or never true) contribute 0 to that metric.
pub fn classification_scores(truth: &[String], predicted: &[String]) -> Scores {
    let classes: BTreeSet<&String> = truth.iter().chain(predicted).collect();
    if classes.is_empty() {
        return Scores::default();
    }
    let mut sum = Scores::default();
    for c in &classes {
        let tp = truth
            .iter()
            .zip(predicted)
            .filter(|(t, p)| t == c && p == c)
            .count() as f64;
        let pred = predicted.iter().filter(|p| p == c).count() as f64;
        let actual = truth.iter().filter(|t| t == c).count() as f64;
        let p = if pred > 0.0 { tp / pred } else { 0.0 };
        let r = if actual > 0.0 { tp / actual } else { 0.0 };
        let f = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        sum.precision += p;
        sum.recall += r;
        sum.f1 += f;
    }
    let n = classes.len() as f64;
    Scores {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn cross_validate<T: ClassifierTrainer>(
    examples: &[TrainingExample],
    k: usize,
    seed: u64,
    trainer: &T,
) -> Result<CvReport, SelectorError> {
    let folds = fold_indices(examples.len(), k, seed)?;
    let mut scores = Vec::with_capacity(k);
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<TrainingExample> = (0..examples.len())
            .filter(|i| !test.contains(i))
            .map(|i| examples[i].clone())
            .collect();
        let model = trainer.fit(&train)?;
        let truth: Vec<String> = test.iter().map(|&i| examples[i].label.clone()).collect();
        let predicted: Vec<String> = test
            .iter()
            .map(|&i| model.predict(&examples[i].text))
            .collect();
        let s = classification_scores(&truth, &predicted);
        scores.push(FoldScores {
            fold: f,
            test_size: test.len(),
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        });
    }
    let (mp, sp) = mean_std(scores.iter().map(|s| s.precision));
    let (mr, sr) = mean_std(scores.iter().map(|s| s.recall));
    let (mf, sf) = mean_std(scores.iter().map(|s| s.f1));
    Ok(CvReport {
        k,
        seed,
        folds: scores,
        mean: Scores {
            precision: mp,
            recall: mr,
            f1: mf,
        },
        std: Scores {
            precision: sp,
            recall: sr,
            f1: sf,
        },
    })
}

/// Labels the dataset with every pipeline, then cross-validates the softmax
/// selector. Labels do not depend on the split, so labeling once is the same
/// as labeling each training fold.
pub fn cross_validate_dataset(
    reg: &Registry,
    pipelines: &[PipelineConfig],
    dataset: &[Example],
    kg: &KnowledgeGraph,
    k: usize,
    hp: &Hyperparams,
) -> Result<CvReport, SelectorError> {
    let examples = label_training_data(reg, pipelines, dataset, kg)?;
    let trainer = SoftmaxTrainer {
        hyperparams: hp.clone(),
    };
    cross_validate(&examples, k, hp.seed, &trainer)
}
