//! Output shapes shared by the CLI and the HTTP service.

use serde::{Deserialize, Serialize};

use plumber_core::annotation::TextTriple;
use plumber_core::components::Registry;
use plumber_core::dataset::GoldTriple;
use plumber_core::kg::KnowledgeGraph;
use plumber_core::pipeline::{run_text, ExtractionResult, PipelineConfig, StageTrace};
use plumber_core::selector::{select_pipeline, SelectorModel};

use crate::CliError;

/// Extraction output of `run`, `extract`, `POST /extract` and
/// `POST /run/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub triples: Vec<GoldTriple>,
    pub pipeline_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_triples: Option<Vec<TextTriple>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_trace: Option<Vec<StageTrace>>,
}

impl Extraction {
    pub fn new(result: &ExtractionResult, cfg: &PipelineConfig, verbose: bool) -> Extraction {
        Extraction {
            triples: result
                .linked_triples
                .iter()
                .map(GoldTriple::from_linked)
                .collect(),
            pipeline_id: result.pipeline_id.clone(),
            pipeline: verbose.then(|| cfg.clone()),
            text_triples: verbose.then(|| result.annotations.text_triples.clone()),
            stage_trace: verbose.then(|| result.stage_trace.clone()),
        }
    }
}

/// Runs `cfg` on `text` and renders the result. Both the CLI and the
/// service go through here so their output matches byte for byte.
pub fn extract(
    reg: &Registry,
    cfg: &PipelineConfig,
    kg: &KnowledgeGraph,
    text: &str,
    verbose: bool,
) -> Result<Extraction, CliError> {
    let result = run_text(reg, cfg, text, kg)?;
    Ok(Extraction::new(&result, cfg, verbose))
}

/// Picks the pipeline for `text` with `model`, looking the id up with
/// `lookup`.
pub fn select_config(
    model: &SelectorModel,
    text: &str,
    lookup: impl FnOnce(&str) -> Option<PipelineConfig>,
) -> Result<PipelineConfig, CliError> {
    let id = select_pipeline(model, text);
    lookup(&id).ok_or_else(|| {
        CliError::Invalid(format!(
            "the selector chose pipeline {id} which is not in the pipeline pool"
        ))
    })
}

pub fn json<T: Serialize + ?Sized>(value: &T, pretty: bool) -> String {
    let s = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    };
    s.expect("output types serialize")
}

/// Left-aligned plain-text table.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = vec![line(header.to_vec())];
    for row in rows {
        out.push(line(row.iter().map(String::as_str).collect()));
    }
    out.join("\n")
}
