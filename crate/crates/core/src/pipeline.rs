//! Pipeline generation, the content-addressed pipeline pool, and the runner.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::RwLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::{
    apply_coref, merge_annotations, normalize_literal, AnnotationError, AnnotationSet, Document,
    LinkedTriple, Object, OffsetMap, Span,
};
use crate::components::{ComponentError, Registry, Task};
use crate::kg::KnowledgeGraph;
use crate::text::is_literal_span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "CR")]
    Cr,
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "linking")]
    Linking,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Cr => "CR",
            Stage::Te => "TE",
            Stage::Linking => "linking",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no {stage} component is registered for knowledge graph {kg:?}")]
    EmptyStage { stage: Stage, kg: String },
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("{stage} stage failed in component {component:?}: {source}")]
    Component {
        stage: Stage,
        component: String,
        #[source]
        source: ComponentError,
    },
    #[error("coreference output could not be applied: {0}")]
    Coref(#[from] AnnotationError),
    #[error("unknown pipeline {0:?}")]
    NotFound(String),
    #[error("pipeline pool I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("pipeline pool JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkingOption {
    Joint(String),
    Pair { el: String, rl: String },
}

impl LinkingOption {
    pub fn components(&self) -> Vec<&str> {
        match self {
            LinkingOption::Joint(id) => vec![id],
            LinkingOption::Pair { el, rl } => vec![el, rl],
        }
    }
}

impl fmt::Display for LinkingOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkingOption::Joint(id) => f.write_str(id),
            LinkingOption::Pair { el, rl } => write!(f, "{el}+{rl}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub id: String,
    pub kg: String,
    pub cr: String,
    pub te: Vec<String>,
    pub linking: LinkingOption,
}

#[derive(Serialize)]
struct Canonical<'a> {
    kg: &'a str,
    cr: &'a str,
    te: &'a [String],
    linking: &'a LinkingOption,
}

impl PipelineConfig {
    /// Builds a config with duplicate TE ids removed and the id computed.
    pub fn new(kg: &str, cr: &str, te: &[&str], linking: LinkingOption) -> PipelineConfig {
        let mut seen = HashSet::new();
        let te = te
            .iter()
            .filter(|t| seen.insert(**t))
            .map(|t| t.to_string())
            .collect();
        let mut cfg = PipelineConfig {
            id: String::new(),
            kg: kg.to_string(),
            cr: cr.to_string(),
            te,
            linking,
        };
        cfg.id = cfg.compute_id();
        cfg
    }

    /// First 16 hex characters of SHA-256 over the canonical JSON of
    /// `(kg, cr, te, linking)`.
    pub fn compute_id(&self) -> String {
        let canonical = Canonical {
            kg: &self.kg,
            cr: &self.cr,
            te: &self.te,
            linking: &self.linking,
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        format!("{digest:x}")[..16].to_string()
    }

    pub fn components(&self) -> Vec<&str> {
        let mut out = vec![self.cr.as_str()];
        out.extend(self.te.iter().map(String::as_str));
        out.extend(self.linking.components());
        out
    }

    /// Short human-readable form, e.g. `cr_identity | te_svo | elrl_joint`.
    pub fn describe(&self) -> String {
        format!("{} | {} | {}", self.cr, self.te.join("+"), self.linking)
    }

    /// Checks ids, stage tasks and KG support against the registry.
    pub fn validate(&self, reg: &Registry) -> Result<(), PipelineError> {
        if self.id != self.compute_id() {
            return Err(PipelineError::InvalidConfig(format!(
                "id {} does not match its content ({})",
                self.id,
                self.compute_id()
            )));
        }
        if self.te.is_empty() {
            return Err(PipelineError::InvalidConfig("te list is empty".into()));
        }
        let mut slots: Vec<(&str, Task)> = vec![(&self.cr, Task::Cr)];
        slots.extend(self.te.iter().map(|t| (t.as_str(), Task::Te)));
        match &self.linking {
            LinkingOption::Joint(id) => slots.push((id, Task::ElRl)),
            LinkingOption::Pair { el, rl } => {
                slots.push((el, Task::El));
                slots.push((rl, Task::Rl));
            }
        }
        for (id, task) in slots {
            let meta = reg
                .get(id)
                .ok_or_else(|| PipelineError::InvalidConfig(format!("unknown component {id:?}")))?;
            if meta.task != task {
                return Err(PipelineError::InvalidConfig(format!(
                    "{id:?} is a {} component, expected {task}",
                    meta.task
                )));
            }
            if !meta.supports(&self.kg) {
                return Err(PipelineError::InvalidConfig(format!(
                    "{id:?} does not support knowledge graph {:?}",
                    self.kg
                )));
            }
        }
        Ok(())
    }
}

/// Linking options for `kg`: EL/RL pairs (EL-major) followed by joint linkers.
pub fn linking_options(reg: &Registry, kg: &str) -> Vec<LinkingOption> {
    let mut out = Vec::new();
    for el in reg.list(Task::El, kg) {
        for rl in reg.list(Task::Rl, kg) {
            out.push(LinkingOption::Pair {
                el: el.id.clone(),
                rl: rl.id.clone(),
            });
        }
    }
    out.extend(
        reg.list(Task::ElRl, kg)
            .into_iter()
            .map(|m| LinkingOption::Joint(m.id.clone())),
    );
    out
}

/// Every CR × TE × linking combination for `kg`, CR-major, one TE each.
pub fn generate_pipelines(reg: &Registry, kg: &str) -> Result<Vec<PipelineConfig>, PipelineError> {
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
    let mut out = Vec::with_capacity(crs.len() * tes.len() * links.len());
    for cr in &crs {
        for te in &tes {
            for link in &links {
                out.push(PipelineConfig::new(kg, &cr.id, &[&te.id], link.clone()));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: String,
    pub components: Vec<String>,
    /// Items the stage added: clusters, text triples, links, linked triples.
    pub count: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub pipeline_id: String,
    /// The input document with the coreference clusters found on it.
    pub coref: AnnotationSet,
    /// Maps offsets of the input text to offsets of the resolved text.
    pub offset_map: OffsetMap,
    /// Annotations over the coreference-resolved document.
    pub annotations: AnnotationSet,
    pub linked_triples: Vec<LinkedTriple>,
    pub stage_trace: Vec<StageTrace>,
}

fn stage_err(stage: Stage, component: &str) -> impl FnOnce(ComponentError) -> PipelineError + '_ {
    move |source| PipelineError::Component {
        stage,
        component: component.to_string(),
        source,
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs `cfg` over raw text; the document id is "input".
pub fn run_text(
    reg: &Registry,
    cfg: &PipelineConfig,
    text: &str,
    kg: &KnowledgeGraph,
) -> Result<ExtractionResult, PipelineError> {
    run_pipeline(reg, cfg, &Document::new("input", text), kg)
}

pub fn run_pipeline(
    reg: &Registry,
    cfg: &PipelineConfig,
    doc: &Document,
    kg: &KnowledgeGraph,
) -> Result<ExtractionResult, PipelineError> {
    if cfg.kg != kg.name {
        return Err(PipelineError::InvalidConfig(format!(
            "pipeline is bound to {:?} but KG {:?} was given",
            cfg.kg, kg.name
        )));
    }
    if cfg.te.is_empty() {
        return Err(PipelineError::InvalidConfig("te list is empty".into()));
    }
    let mut trace = Vec::new();

    let t = Instant::now();
    let coref = reg
        .invoke(&cfg.cr, &AnnotationSet::new(doc.clone()), kg)
        .map_err(stage_err(Stage::Cr, &cfg.cr))?;
    let (resolved, offset_map) = apply_coref(doc, &coref.clusters)?;
    trace.push(StageTrace {
        stage: Stage::Cr.to_string(),
        components: vec![cfg.cr.clone()],
        count: coref.clusters.len(),
        elapsed_ms: ms(t),
    });

    let t = Instant::now();
    let base = AnnotationSet::new(resolved);
    let mut ann = base.clone();
    for te in &cfg.te {
        let out = reg
            .invoke(te, &base, kg)
            .map_err(stage_err(Stage::Te, te))?;
        ann = merge_annotations(&ann, &out)?;
    }
    trace.push(StageTrace {
        stage: Stage::Te.to_string(),
        components: cfg.te.clone(),
        count: ann.text_triples.len(),
        elapsed_ms: ms(t),
    });

    let t = Instant::now();
    for id in cfg.linking.components() {
        ann = reg
            .invoke(id, &ann, kg)
            .map_err(stage_err(Stage::Linking, id))?;
    }
    trace.push(StageTrace {
        stage: Stage::Linking.to_string(),
        components: cfg
            .linking
            .components()
            .into_iter()
            .map(String::from)
            .collect(),
        count: ann.entity_links.len() + ann.relation_links.len(),
        elapsed_ms: ms(t),
    });

    let t = Instant::now();
    let linked = assemble(&ann);
    ann.linked_triples = linked.clone();
    trace.push(StageTrace {
        stage: "assembly".to_string(),
        components: Vec::new(),
        count: linked.len(),
        elapsed_ms: ms(t),
    });

    Ok(ExtractionResult {
        pipeline_id: cfg.id.clone(),
        coref,
        offset_map,
        annotations: ann,
        linked_triples: linked,
        stage_trace: trace,
    })
}

/// The link for `span`: one on exactly that span if present, otherwise the
/// best link inside it (score, then length, then position).
fn link_for<'a>(
    span: &Span,
    links: impl Iterator<Item = (&'a Span, &'a str, f64)>,
) -> Option<&'a str> {
    links
        .filter(|(s, _, _)| span.contains(s))
        .max_by(|a, b| {
            (a.0 == span)
                .cmp(&(b.0 == span))
                .then(a.2.total_cmp(&b.2))
                .then((a.0.end - a.0.start).cmp(&(b.0.end - b.0.start)))
                .then(b.0.start.cmp(&a.0.start))
                .then(b.1.cmp(a.1))
        })
        .map(|(_, iri, _)| iri)
}

/// Turns text triples with linked subject, predicate and object (entity or
/// literal) into KG triples, dropping duplicates.
pub fn assemble(ann: &AnnotationSet) -> Vec<LinkedTriple> {
    let text = &ann.document.text;
    let entities = || {
        ann.entity_links
            .iter()
            .map(|l| (&l.span, l.iri.as_str(), l.score))
    };
    let relations = || {
        ann.relation_links
            .iter()
            .map(|l| (&l.span, l.iri.as_str(), l.score))
    };
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for t in &ann.text_triples {
        let Some(s) = link_for(&t.subject, entities()) else {
            continue;
        };
        let Some(p) = link_for(&t.predicate, relations()) else {
            continue;
        };
        let object = match link_for(&t.object, entities()) {
            Some(o) => Object::Iri(o.to_string()),
            None if is_literal_span(text, &t.object) => {
                Object::Literal(normalize_literal(&t.object.surface))
            }
            None => continue,
        };
        let triple = LinkedTriple::new(s, p, object);
        if seen.insert(triple.clone()) {
            out.push(triple);
        }
    }
    out
}

#[derive(Debug, Default)]
struct PoolInner {
    order: Vec<String>,
    by_id: HashMap<String, PipelineConfig>,
}

/// Content-addressed pipeline store. Reads may run concurrently; writes are
/// serialized.
#[derive(Debug, Default)]
pub struct PipelinePool {
    inner: RwLock<PoolInner>,
}

#[derive(Serialize, Deserialize)]
struct PoolFile {
    pipelines: Vec<PipelineConfig>,
}

impl PipelinePool {
    pub fn new() -> PipelinePool {
        PipelinePool::default()
    }

    pub fn from_configs(configs: impl IntoIterator<Item = PipelineConfig>) -> PipelinePool {
        let pool = PipelinePool::new();
        for cfg in configs {
            pool.put(cfg);
        }
        pool
    }

    /// Stores `cfg` under its content hash and returns that id.
    pub fn put(&self, mut cfg: PipelineConfig) -> String {
        cfg.id = cfg.compute_id();
        let id = cfg.id.clone();
        let mut inner = self.inner.write().unwrap_or_else(|e| e.into_inner());
        if !inner.by_id.contains_key(&id) {
            inner.order.push(id.clone());
            inner.by_id.insert(id.clone(), cfg);
        }
        id
    }

    pub fn get(&self, id: &str) -> Result<PipelineConfig, PipelineError> {
        let inner = self.inner.read().unwrap_or_else(|e| e.into_inner());
        inner
            .by_id
            .get(id)
            .cloned()
            .ok_or_else(|| PipelineError::NotFound(id.to_string()))
    }

    /// Ids of the pipelines bound to `kg`, in insertion order.
    pub fn list(&self, kg: &str) -> Vec<String> {
        let inner = self.inner.read().unwrap_or_else(|e| e.into_inner());
        inner
            .order
            .iter()
            .filter(|id| inner.by_id[*id].kg == kg)
            .cloned()
            .collect()
    }

    pub fn all(&self) -> Vec<PipelineConfig> {
        let inner = self.inner.read().unwrap_or_else(|e| e.into_inner());
        inner
            .order
            .iter()
            .map(|id| inner.by_id[id].clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.inner
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .order
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PoolFile {
            pipelines: self.all(),
        })
        .expect("pool serializes")
    }

    /// Parses `{"pipelines": [...]}`; every stored id must match its content.
    pub fn from_json(json: &str) -> Result<PipelinePool, PipelineError> {
        let file: PoolFile = serde_json::from_str(json)?;
        for cfg in &file.pipelines {
            if cfg.id != cfg.compute_id() {
                return Err(PipelineError::InvalidConfig(format!(
                    "stored id {} does not match its content",
                    cfg.id
                )));
            }
        }
        Ok(PipelinePool::from_configs(file.pipelines))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PipelinePool, PipelineError> {
        PipelinePool::from_json(&std::fs::read_to_string(path)?)
    }
}
