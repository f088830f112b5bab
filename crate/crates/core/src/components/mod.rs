//! The component pool: task interfaces, metadata, the registry, and dispatch
//! to builtin or remote (HTTP) components.
//!
//! The registry, not the component, decides what a component may change.
//! [`Registry::invoke`] keeps only the new items in the fields owned by the
//! component's task, stamps their provenance, validates them against the
//! document and the knowledge graph, and merges them into the input set.

mod remote;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{merge_annotations, AnnotationError, AnnotationSet};
use crate::kg::{EntryKind, KnowledgeGraph};

pub use remote::{
    fetch_meta, AnnotateRequest, AnnotateResponse, RemoteClient, DEFAULT_MAX_IN_FLIGHT,
};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ComponentError {
    #[error("component id {0:?} is already registered")]
    Duplicate(String),
    #[error("invalid component metadata: {0}")]
    Validation(String),
    #[error("unknown component {0:?}")]
    NotFound(String),
    #[error("component {component:?} does not support knowledge graph {kg:?}")]
    UnsupportedKg { component: String, kg: String },
    #[error("component {component:?} timed out after {timeout_ms} ms")]
    Timeout { component: String, timeout_ms: u64 },
    #[error("component {component:?} protocol error: {message}")]
    Protocol { component: String, message: String },
    #[error("component {component:?} failed: {message}")]
    Failed { component: String, message: String },
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "CR")]
    Cr,
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "EL")]
    El,
    #[serde(rename = "RL")]
    Rl,
    #[serde(rename = "EL_RL")]
    ElRl,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Cr, Task::Te, Task::El, Task::Rl, Task::ElRl];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Cr => "CR",
            Task::Te => "TE",
            Task::El => "EL",
            Task::Rl => "RL",
            Task::ElRl => "EL_RL",
        }
    }

    pub fn is_linking(self) -> bool {
        matches!(self, Task::El | Task::Rl | Task::ElRl)
    }

    fn owns_entity_links(self) -> bool {
        matches!(self, Task::El | Task::ElRl)
    }

    fn owns_relation_links(self) -> bool {
        matches!(self, Task::Rl | Task::ElRl)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "CR" => Ok(Task::Cr),
            "TE" => Ok(Task::Te),
            "EL" => Ok(Task::El),
            "RL" => Ok(Task::Rl),
            "EL_RL" | "ELRL" => Ok(Task::ElRl),
            _ => Err(format!(
                "unknown task {s:?} (expected CR, TE, EL, RL or EL_RL)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Builtin,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentMetadata {
    pub id: String,
    pub name: String,
    pub task: Task,
    #[serde(default)]
    pub supported_kgs: Vec<String>,
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

impl ComponentMetadata {
    pub fn builtin(id: &str, name: &str, task: Task, kgs: &[&str]) -> ComponentMetadata {
        ComponentMetadata {
            id: id.to_string(),
            name: name.to_string(),
            task,
            supported_kgs: kgs.iter().map(|k| k.to_string()).collect(),
            kind: ComponentKind::Builtin,
            endpoint: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    pub fn remote(id: &str, task: Task, kgs: &[&str], endpoint: &str) -> ComponentMetadata {
        ComponentMetadata {
            id: id.to_string(),
            name: id.to_string(),
            task,
            supported_kgs: kgs.iter().map(|k| k.to_string()).collect(),
            kind: ComponentKind::Remote,
            endpoint: Some(endpoint.to_string()),
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    /// CR and TE components with no declared KGs work for any KG.
    pub fn supports(&self, kg: &str) -> bool {
        self.supported_kgs.iter().any(|k| k == kg)
            || (self.supported_kgs.is_empty() && !self.task.is_linking())
    }

    pub fn validate(&self) -> Result<(), ComponentError> {
        if self.id.trim().is_empty() {
            return Err(ComponentError::Validation("id must be non-empty".into()));
        }
        if self.kind == ComponentKind::Remote
            && self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty())
        {
            return Err(ComponentError::Validation(format!(
                "remote component {:?} needs an endpoint",
                self.id
            )));
        }
        if self.task.is_linking() && self.supported_kgs.is_empty() {
            return Err(ComponentError::Validation(format!(
                "linking component {:?} must declare supported KGs",
                self.id
            )));
        }
        if self.timeout_ms == 0 {
            return Err(ComponentError::Validation(
                "timeout_ms must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// What a component computes. The registry handles provenance and
/// field ownership, so implementations may return either just their own
/// output over the input document or a full enriched copy.
pub trait Component: Send + Sync {
    fn annotate(
        &self,
        input: &AnnotationSet,
        kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError>;
}

#[derive(Clone)]
pub enum Handle {
    Builtin(Arc<dyn Component>),
    Remote(Arc<RemoteClient>),
}

impl fmt::Debug for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Handle::Builtin(_) => f.write_str("Builtin"),
            Handle::Remote(c) => write!(f, "Remote({})", c.endpoint()),
        }
    }
}

#[derive(Debug, Clone)]
struct Registered {
    meta: ComponentMetadata,
    handle: Handle,
}

/// Components in registration order. Registration takes `&mut self`;
/// share the registry behind an `Arc` (or a lock, if it must grow while
/// serving) once it is set up.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: Vec<Registered>,
    index: HashMap<String, usize>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn register(
        &mut self,
        meta: ComponentMetadata,
        handle: Handle,
    ) -> Result<String, ComponentError> {
        meta.validate()?;
        let kind_matches = matches!(
            (&handle, meta.kind),
            (Handle::Builtin(_), ComponentKind::Builtin)
                | (Handle::Remote(_), ComponentKind::Remote)
        );
        if !kind_matches {
            return Err(ComponentError::Validation(format!(
                "component {:?} declares kind {:?} but got a {handle:?} handle",
                meta.id, meta.kind
            )));
        }
        if self.index.contains_key(&meta.id) {
            return Err(ComponentError::Duplicate(meta.id));
        }
        let id = meta.id.clone();
        self.index.insert(id.clone(), self.entries.len());
        self.entries.push(Registered { meta, handle });
        Ok(id)
    }

    pub fn register_builtin(
        &mut self,
        meta: ComponentMetadata,
        component: impl Component + 'static,
    ) -> Result<String, ComponentError> {
        self.register(meta, Handle::Builtin(Arc::new(component)))
    }

    /// Registers a remote component after checking its `GET /meta` answer
    /// against the declared task and KGs.
    pub fn register_remote(&mut self, meta: ComponentMetadata) -> Result<String, ComponentError> {
        meta.validate()?;
        if self.index.contains_key(&meta.id) {
            return Err(ComponentError::Duplicate(meta.id));
        }
        let endpoint = meta.endpoint.clone().unwrap_or_default();
        let served = fetch_meta(&meta.id, &endpoint, meta.timeout_ms)?;
        if served.task != meta.task {
            return Err(ComponentError::Validation(format!(
                "{endpoint} serves task {} but {} was declared",
                served.task, meta.task
            )));
        }
        if let Some(kg) = meta
            .supported_kgs
            .iter()
            .find(|kg| !served.supported_kgs.contains(kg))
        {
            return Err(ComponentError::Validation(format!(
                "{endpoint} does not claim support for KG {kg:?}"
            )));
        }
        let client = RemoteClient::new(&meta.id, &endpoint, meta.timeout_ms);
        self.register(meta, Handle::Remote(Arc::new(client)))
    }

    pub fn get(&self, id: &str) -> Option<&ComponentMetadata> {
        self.index.get(id).map(|&i| &self.entries[i].meta)
    }

    pub fn all(&self) -> impl Iterator<Item = &ComponentMetadata> {
        self.entries.iter().map(|e| &e.meta)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Components for `task` that support `kg`, in registration order.
    pub fn list(&self, task: Task, kg: &str) -> Vec<&ComponentMetadata> {
        self.entries
            .iter()
            .map(|e| &e.meta)
            .filter(|m| m.task == task && m.supports(kg))
            .collect()
    }

    /// Runs a component and merges the fields its task owns into `ann`.
    pub fn invoke(
        &self,
        id: &str,
        ann: &AnnotationSet,
        kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let entry = self
            .index
            .get(id)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| ComponentError::NotFound(id.to_string()))?;
        let meta = &entry.meta;
        if meta.task.is_linking() && !meta.supports(&kg.name) {
            return Err(ComponentError::UnsupportedKg {
                component: id.to_string(),
                kg: kg.name.clone(),
            });
        }
        let output = match &entry.handle {
            Handle::Builtin(c) => c.annotate(ann, kg)?,
            Handle::Remote(c) => c.annotate(ann, kg)?,
        };
        let owned = project_owned(meta, ann, output, kg)?;
        Ok(merge_annotations(ann, &owned)?)
    }
}

fn protocol(meta: &ComponentMetadata, message: String) -> ComponentError {
    ComponentError::Protocol {
        component: meta.id.clone(),
        message,
    }
}

/// Keeps the task-owned fields of `output`, rebased on the input document.
fn project_owned(
    meta: &ComponentMetadata,
    input: &AnnotationSet,
    output: AnnotationSet,
    kg: &KnowledgeGraph,
) -> Result<AnnotationSet, ComponentError> {
    let mut owned = AnnotationSet::new(input.document.clone());
    let id = &meta.id;
    match meta.task {
        Task::Cr => owned.clusters = output.clusters,
        Task::Te => {
            owned.text_triples = output.text_triples;
            for t in &mut owned.text_triples {
                t.source_component = id.clone();
            }
        }
        Task::El | Task::Rl | Task::ElRl => {
            if meta.task.owns_entity_links() {
                owned.entity_links = output.entity_links;
            }
            if meta.task.owns_relation_links() {
                owned.relation_links = output.relation_links;
            }
            for l in &mut owned.entity_links {
                l.source_component = id.clone();
                check_link(meta, EntryKind::Entity, &l.iri, l.score, kg)?;
            }
            for l in &mut owned.relation_links {
                l.source_component = id.clone();
                check_link(meta, EntryKind::Property, &l.iri, l.score, kg)?;
            }
        }
    }
    owned
        .validate()
        .map_err(|e| protocol(meta, format!("output does not fit the input document: {e}")))?;
    Ok(owned)
}

fn check_link(
    meta: &ComponentMetadata,
    kind: EntryKind,
    iri: &str,
    score: f64,
    kg: &KnowledgeGraph,
) -> Result<(), ComponentError> {
    if !kg.contains(kind, iri) {
        return Err(protocol(
            meta,
            format!("{kind} IRI {iri} is not in knowledge graph {:?}", kg.name),
        ));
    }
    if !(0.0..=1.0).contains(&score) {
        return Err(protocol(meta, format!("link score {score} outside [0, 1]")));
    }
    Ok(())
}
