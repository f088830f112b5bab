//! Stage-wise error attribution by gold substitution: each stage runs on the
//! gold outputs of the stages before it and is scored against its own gold.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{count_matches, Counts, EvalError};
use crate::annotation::{AnnotationSet, Document, TextTriple};
use crate::components::{Registry, Task};
use crate::dataset::Example;
use crate::kg::KnowledgeGraph;
use crate::pipeline::{LinkingOption, PipelineConfig};

pub const STAGES: [&str; 4] = ["CR", "TE", "EL", "RL"];
pub const POSITIONS: [&str; 3] = ["subject", "predicate", "object"];

/// Gold inputs and outputs of every stage for one example.
pub(crate) struct GoldStages {
    pub original: Document,
    pub resolved: Document,
    pub clusters: Vec<String>,
    pub text_triples: Vec<TextTriple>,
    pub entity_iris: Vec<String>,
    pub relation_iris: Vec<String>,
}

fn missing(stage: &str, ex: &Example) -> EvalError {
    EvalError::MissingGold {
        stage: stage.to_string(),
        example: ex.id.clone(),
    }
}

fn cluster_keys(set: &AnnotationSet) -> Vec<String> {
    set.clusters
        .iter()
        .flat_map(|c| {
            c.mentions
                .iter()
                .map(move |m| format!("{}:{}=>{}", m.start, m.end, c.representative.surface))
        })
        .collect()
}

pub(crate) fn triple_key(t: &TextTriple) -> String {
    format!(
        "{}\t{}\t{}",
        t.subject.surface, t.predicate.surface, t.object.surface
    )
}

impl GoldStages {
    pub fn from_example(ex: &Example) -> Result<GoldStages, EvalError> {
        let clusters = ex.gold_clusters.clone().ok_or_else(|| missing("CR", ex))?;
        let text_triples = ex
            .gold_text_triples
            .clone()
            .ok_or_else(|| missing("TE", ex))?;
        let entity_links = ex
            .gold_entity_links
            .as_ref()
            .ok_or_else(|| missing("EL", ex))?;
        let relation_links = ex
            .gold_relation_links
            .as_ref()
            .ok_or_else(|| missing("RL", ex))?;
        let original = ex.document();
        let resolved = ex
            .resolved_document()
            .map_err(|e| EvalError::Configuration(e.to_string()))?;
        let mut with_clusters = AnnotationSet::new(original.clone());
        with_clusters.clusters = clusters;
        Ok(GoldStages {
            clusters: cluster_keys(&with_clusters),
            original,
            resolved,
            text_triples,
            entity_iris: entity_links.iter().map(|l| l.iri.clone()).collect(),
            relation_iris: relation_links.iter().map(|l| l.iri.clone()).collect(),
        })
    }

    pub fn gold_keys(&self, task: Task) -> Vec<String> {
        match task {
            Task::Cr => self.clusters.clone(),
            Task::Te => self.text_triples.iter().map(triple_key).collect(),
            Task::El => self.entity_iris.clone(),
            Task::Rl | Task::ElRl => self.relation_iris.clone(),
        }
    }

    /// Runs one component on the gold input of `task` and returns its output
    /// as comparable keys. A failing component yields no output.
    pub fn run(
        &self,
        reg: &Registry,
        component: &str,
        task: Task,
        kg: &KnowledgeGraph,
    ) -> AnnotationSet {
        let input = match task {
            Task::Cr => AnnotationSet::new(self.original.clone()),
            Task::Te => AnnotationSet::new(self.resolved.clone()),
            _ => {
                let mut a = AnnotationSet::new(self.resolved.clone());
                a.text_triples = self.text_triples.clone();
                a
            }
        };
        match reg.invoke(component, &input, kg) {
            Ok(out) => out,
            Err(e) => {
                log::warn!("{component} failed during evaluation: {e}");
                input
            }
        }
    }
}

/// Keys a stage output is compared on.
pub(crate) fn output_keys(out: &AnnotationSet, task: Task) -> Vec<String> {
    match task {
        Task::Cr => cluster_keys(out),
        Task::Te => out.text_triples.iter().map(triple_key).collect(),
        Task::El => out.entity_links.iter().map(|l| l.iri.clone()).collect(),
        Task::Rl | Task::ElRl => out.relation_links.iter().map(|l| l.iri.clone()).collect(),
    }
}

/// Field-level mismatches between predicted and gold text triples: every
/// unmatched triple on either side is aligned with the counterpart sharing
/// the most fields, and each differing field counts once.
fn position_errors(predicted: &[TextTriple], gold: &[TextTriple]) -> [usize; 3] {
    let fields = |t: &TextTriple| {
        [
            t.subject.surface.clone(),
            t.predicate.surface.clone(),
            t.object.surface.clone(),
        ]
    };
    let p: Vec<[String; 3]> = predicted.iter().map(fields).collect();
    let g: Vec<[String; 3]> = gold.iter().map(fields).collect();
    let mut errors = [0usize; 3];
    for (side, other) in [(&p, &g), (&g, &p)] {
        for t in side.iter().filter(|t| !other.contains(t)) {
            let best = other
                .iter()
                .max_by_key(|o| (0..3).filter(|&i| o[i] == t[i]).count());
            for i in 0..3 {
                if best.is_none_or(|b| b[i] != t[i]) {
                    errors[i] += 1;
                }
            }
        }
    }
    errors
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorAttribution {
    pub pipeline_id: String,
    /// Share of the total error mass per stage (CR, TE, EL, RL).
    pub shares: IndexMap<String, f64>,
    /// Share of TE field mismatches per triple position.
    pub triple_position_shares: IndexMap<String, f64>,
    /// Micro F1 of each stage against its gold output; 1.0 when a stage had
    /// nothing to produce and produced nothing.
    pub stage_f1: IndexMap<String, f64>,
    pub method: String,
}

fn stage_f1(c: &Counts) -> f64 {
    if c.predicted == 0 && c.gold == 0 {
        1.0
    } else {
        c.scores().f1
    }
}

fn normalized(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|v| v / total).collect()
    }
}

pub fn attribute_errors(
    reg: &Registry,
    cfg: &PipelineConfig,
    dataset: &[Example],
    kg: &KnowledgeGraph,
) -> Result<ErrorAttribution, EvalError> {
    let golds: Vec<GoldStages> = dataset
        .iter()
        .map(GoldStages::from_example)
        .collect::<Result<_, _>>()?;
    let mut counts = [Counts::default(); 4];
    let mut positions = [0usize; 3];
    for gold in &golds {
        let cr = gold.run(reg, &cfg.cr, Task::Cr, kg);
        counts[0].add(count_matches(
            &output_keys(&cr, Task::Cr),
            &gold.gold_keys(Task::Cr),
        ));

        let mut te_triples: Vec<TextTriple> = Vec::new();
        for te in &cfg.te {
            for t in gold.run(reg, te, Task::Te, kg).text_triples {
                if !te_triples.iter().any(|x| triple_key(x) == triple_key(&t)) {
                    te_triples.push(t);
                }
            }
        }
        let te_keys: Vec<String> = te_triples.iter().map(triple_key).collect();
        counts[1].add(count_matches(&te_keys, &gold.gold_keys(Task::Te)));
        let pe = position_errors(&te_triples, &gold.text_triples);
        for i in 0..3 {
            positions[i] += pe[i];
        }

        let (el_out, rl_out) = match &cfg.linking {
            LinkingOption::Joint(id) => {
                let out = gold.run(reg, id, Task::ElRl, kg);
                (out.clone(), out)
            }
            LinkingOption::Pair { el, rl } => (
                gold.run(reg, el, Task::El, kg),
                gold.run(reg, rl, Task::Rl, kg),
            ),
        };
        counts[2].add(count_matches(
            &output_keys(&el_out, Task::El),
            &gold.gold_keys(Task::El),
        ));
        counts[3].add(count_matches(
            &output_keys(&rl_out, Task::Rl),
            &gold.gold_keys(Task::Rl),
        ));
    }
    let f1: Vec<f64> = counts.iter().map(stage_f1).collect();
    let mass: Vec<f64> = f1.iter().map(|f| 1.0 - f).collect();
    let shares = normalized(&mass);
    let pos = normalized(&positions.map(|p| p as f64));
    Ok(ErrorAttribution {
        pipeline_id: cfg.id.clone(),
        shares: STAGES.iter().map(|s| s.to_string()).zip(shares).collect(),
        triple_position_shares: POSITIONS.iter().map(|s| s.to_string()).zip(pos).collect(),
        stage_f1: STAGES.iter().map(|s| s.to_string()).zip(f1).collect(),
        method: "gold-substitution".to_string(),
    })
}

/// Renders shares as e.g. `CR 21.54%, TE 33.71%, EL 18.17%, RL 26.58%;
/// subjects 23.85%, predicates 40.17%, objects 35.98%`.
pub fn format_attribution(a: &ErrorAttribution) -> String {
    let pct = |v: f64| format!("{:.2}%", v * 100.0);
    let stages: Vec<String> = a
        .shares
        .iter()
        .map(|(k, v)| format!("{k} {}", pct(*v)))
        .collect();
    let positions: Vec<String> = a
        .triple_position_shares
        .iter()
        .map(|(k, v)| format!("{k}s {}", pct(*v)))
        .collect();
    format!("{}; {}", stages.join(", "), positions.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attribution(shares: [f64; 4], pos: [f64; 3]) -> ErrorAttribution {
        ErrorAttribution {
            pipeline_id: "p".into(),
            shares: STAGES.iter().map(|s| s.to_string()).zip(shares).collect(),
            triple_position_shares: POSITIONS.iter().map(|s| s.to_string()).zip(pos).collect(),
            stage_f1: IndexMap::new(),
            method: "gold-substitution".into(),
        }
    }

    #[test]
    fn normalization_identity() {
        let s = normalized(&[0.2, 0.3, 0.1, 0.4]);
        for (a, b) in s.iter().zip([0.2, 0.3, 0.1, 0.4]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(normalized(&[0.0; 4]), vec![0.0; 4]);
    }

    #[test]
    fn percent_format() {
        let a = attribution([0.2154, 0.3371, 0.1817, 0.2658], [0.2385, 0.4017, 0.3598]);
        assert_eq!(
            format_attribution(&a),
            "CR 21.54%, TE 33.71%, EL 18.17%, RL 26.58%; subjects 23.85%, predicates 40.17%, objects 35.98%"
        );
    }

    #[test]
    fn position_errors_align_best_counterpart() {
        let doc = Document::new("d", "Anna works at TIB in Hannover");
        let t = |s: (usize, usize), p: (usize, usize), o: (usize, usize)| {
            TextTriple::new(doc.span(s.0, s.1), doc.span(p.0, p.1), doc.span(o.0, o.1))
        };
        let gold = [t((0, 4), (5, 13), (14, 17))];
        let pred = [t((0, 4), (5, 10), (14, 17))];
        // One predicate mismatch seen from each side.
        assert_eq!(position_errors(&pred, &gold), [0, 2, 0]);
        assert_eq!(position_errors(&[], &gold), [1, 1, 1]);
        assert_eq!(position_errors(&gold, &gold), [0, 0, 0]);
    }
}
