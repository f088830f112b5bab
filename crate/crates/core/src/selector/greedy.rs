//! Greedy baseline: one linear regressor per stage choice predicts the mean
//! F1 of the pipelines using that choice; selection takes the best choice of
//! each stage independently.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::features::{extract_features, N_FEATURES};
use super::softmax::{fit_normalizer, normalize};
use super::{argmax, SelectorError, TrainingExample};
use crate::components::{Registry, Task};
use crate::pipeline::{linking_options, PipelineConfig, PipelineError, Stage};

/// Ridge term keeping the normal equations well conditioned.
const RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRegressor {
    pub stage: Stage,
    /// A CR or TE component id, or a linking option (`el+rl` or a joint id).
    pub unit: String,
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPredictor {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub regressors: Vec<ComponentRegressor>,
}

fn units(cfg: &PipelineConfig) -> [(Stage, String); 3] {
    [
        (Stage::Cr, cfg.cr.clone()),
        (Stage::Te, cfg.te.join("+")),
        (Stage::Linking, cfg.linking.to_string()),
    ]
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-12 {
            continue;
        }
        for row in col + 1..n {
            let factor = a[row][col] / p;
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = if a[row][row].abs() < 1e-12 {
            0.0
        } else {
            (b[row] - s) / a[row][row]
        };
    }
    x
}

fn ridge(z: &[Vec<f64>], t: &[f64]) -> (Vec<f64>, f64) {
    let n = t.len().max(1) as f64;
    let mean = t.iter().sum::<f64>() / n;
    let mut a = vec![vec![0.0; N_FEATURES]; N_FEATURES];
    let mut b = vec![0.0; N_FEATURES];
    for (row, ti) in z.iter().zip(t) {
        for i in 0..N_FEATURES {
            b[i] += row[i] * (ti - mean);
            for j in 0..N_FEATURES {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    for (i, r) in a.iter_mut().enumerate() {
        r[i] += RIDGE * n;
    }
    (solve(a, b), mean)
}

pub fn train_greedy_baseline(
    examples: &[TrainingExample],
    pipelines: &[PipelineConfig],
) -> Result<ComponentPredictor, SelectorError> {
    if examples.is_empty() {
        return Err(SelectorError::NoExamples);
    }
    if pipelines.is_empty() {
        return Err(SelectorError::NoPipelines);
    }
    let mut order: Vec<(Stage, String)> = Vec::new();
    let mut members: HashMap<(Stage, String), Vec<&str>> = HashMap::new();
    for cfg in pipelines {
        for unit in units(cfg) {
            let entry = members.entry(unit.clone()).or_default();
            if entry.is_empty() {
                order.push(unit);
            }
            entry.push(&cfg.id);
        }
    }
    let x: Vec<Vec<f64>> = examples.iter().map(|e| e.features.0.to_vec()).collect();
    let (means, stds) = fit_normalizer(&x, N_FEATURES);
    let z: Vec<Vec<f64>> = x.iter().map(|r| normalize(r, &means, &stds)).collect();
    let regressors = order
        .into_iter()
        .map(|unit| {
            let ids = &members[&unit];
            let targets: Vec<f64> = examples
                .iter()
                .map(|e| {
                    let f1s: Vec<f64> = ids
                        .iter()
                        .filter_map(|id| e.per_pipeline_f1.get(*id).copied())
                        .collect();
                    if f1s.is_empty() {
                        0.0
                    } else {
                        f1s.iter().sum::<f64>() / f1s.len() as f64
                    }
                })
                .collect();
            let (weights, bias) = ridge(&z, &targets);
            ComponentRegressor {
                stage: unit.0,
                unit: unit.1,
                weights,
                bias,
            }
        })
        .collect();
    Ok(ComponentPredictor {
        means,
        stds,
        regressors,
    })
}

impl ComponentPredictor {
    /// Predicted F1 contribution of `unit` for a sentence, if it was trained.
    pub fn predict(&self, stage: Stage, unit: &str, text: &str) -> Option<f64> {
        let z = normalize(extract_features(text).as_slice(), &self.means, &self.stds);
        self.regressors
            .iter()
            .find(|r| r.stage == stage && r.unit == unit)
            .map(|r| r.bias + r.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>())
    }

    fn pick<T>(
        &self,
        stage: Stage,
        text: &str,
        options: &[T],
        name: impl Fn(&T) -> String,
    ) -> usize {
        let scores = options.iter().map(|o| {
            self.predict(stage, &name(o), text)
                .unwrap_or(f64::NEG_INFINITY)
        });
        argmax(scores).unwrap_or(0)
    }
}

/// Assembles a pipeline from the best predicted choice of each stage.
pub fn select_greedy(
    pred: &ComponentPredictor,
    text: &str,
    reg: &Registry,
    kg: &str,
) -> Result<PipelineConfig, PipelineError> {
    let empty = |stage| PipelineError::EmptyStage {
        stage,
        kg: kg.to_string(),
    };
    let crs = reg.list(Task::Cr, kg);
    if crs.is_empty() {
        return Err(empty(Stage::Cr));
    }
    let tes = reg.list(Task::Te, kg);
    if tes.is_empty() {
        return Err(empty(Stage::Te));
    }
    let links = linking_options(reg, kg);
    if links.is_empty() {
        return Err(empty(Stage::Linking));
    }
    let cr = &crs[pred.pick(Stage::Cr, text, &crs, |m| m.id.clone())].id;
    let te = &tes[pred.pick(Stage::Te, text, &tes, |m| m.id.clone())].id;
    let link = links[pred.pick(Stage::Linking, text, &links, |l| l.to_string())].clone();
    Ok(PipelineConfig::new(kg, cr, &[te], link))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::default_registry;
    use crate::pipeline::generate_pipelines;
    use crate::selector::extract_features;
    use indexmap::IndexMap;

    fn examples(
        pipelines: &[PipelineConfig],
        f1: impl Fn(usize, &PipelineConfig) -> f64,
    ) -> Vec<TrainingExample> {
        let texts = [
            "Anna met Ben.",
            "cats have tails",
            "Durin, son of Thorin, was a king.",
            "It was painted in 1633.",
        ];
        (0..20)
            .map(|i| {
                let text = texts[i % texts.len()];
                let per: IndexMap<String, f64> =
                    pipelines.iter().map(|p| (p.id.clone(), f1(i, p))).collect();
                TrainingExample {
                    id: i.to_string(),
                    text: text.into(),
                    features: extract_features(text),
                    label: pipelines[0].id.clone(),
                    per_pipeline_f1: per,
                    degenerate: false,
                }
            })
            .collect()
    }

    #[test]
    fn dominant_components_are_always_picked() {
        let reg = default_registry();
        let pipelines = generate_pipelines(&reg, "dbpedia").unwrap();
        let ex = examples(&pipelines, |i, p| {
            let base = (i % 3) as f64 * 0.1;
            base + if p.te[0] == "te_clause_split" {
                0.5
            } else {
                0.0
            } + if p.cr == "cr_pronoun_prev_sentence" {
                0.2
            } else {
                0.0
            }
        });
        let pred = train_greedy_baseline(&ex, &pipelines).unwrap();
        for text in ["Anna met Ben.", "cats have tails", "zzz"] {
            let cfg = select_greedy(&pred, text, &reg, "dbpedia").unwrap();
            assert_eq!(cfg.te, ["te_clause_split"]);
            assert_eq!(cfg.cr, "cr_pronoun_prev_sentence");
        }
    }

    #[test]
    fn single_pipeline_pool() {
        let mut reg = crate::components::Registry::new();
        let full = default_registry();
        for id in ["cr_identity", "te_svo", "elrl_joint"] {
            let meta = full.get(id).unwrap().clone();
            reg.register_builtin(meta, crate::builtin::JointLinker::new(Default::default()))
                .unwrap();
        }
        let pipelines = generate_pipelines(&reg, "dbpedia").unwrap();
        assert_eq!(pipelines.len(), 1);
        let ex = examples(&pipelines, |_, _| 0.5);
        let pred = train_greedy_baseline(&ex, &pipelines).unwrap();
        assert_eq!(
            select_greedy(&pred, "anything", &reg, "dbpedia").unwrap(),
            pipelines[0]
        );
    }

    #[test]
    fn solver_recovers_linear_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(a, vec![5.0, 10.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }
}
