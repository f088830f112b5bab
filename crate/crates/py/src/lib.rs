//! Python bindings. Structured results (reports, metadata, traces) are
//! returned as plain dicts and lists.

use std::fmt::Display;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use plumber_core::builtin::default_registry;
use plumber_core::components::{ComponentMetadata, Task, DEFAULT_TIMEOUT_MS};
use plumber_core::dataset::{load_jsonl, Example, GoldTriple};
use plumber_core::evaluation::{self, Selection};
use plumber_core::fixtures::bundled_kg;
use plumber_core::kg::{self, EntryKind, MatchMode, DEFAULT_FUZZY_THRESHOLD};
use plumber_core::pipeline::{self as core_pipeline, LinkingOption, PipelineConfig};
use plumber_core::selector::{self, Hyperparams};
use plumber_core::text::Lexicons;

create_exception!(plumber, PlumberError, PyException);

fn err(e: impl Display) -> PyErr {
    PlumberError::new_err(e.to_string())
}

/// Serializes through Python's `json` module.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (s,))
}

fn parse_task(task: &str) -> PyResult<Task> {
    task.parse().map_err(err)
}

fn dataset(path: PathBuf) -> PyResult<Vec<Example>> {
    load_jsonl(path).map_err(err)
}

fn configs(pipelines: &[PyRef<'_, Pipeline>]) -> Vec<PipelineConfig> {
    pipelines.iter().map(|p| p.inner.clone()).collect()
}

/// Components available to pipelines. Starts with the bundled components.
#[pyclass(module = "plumber")]
struct Registry {
    inner: plumber_core::components::Registry,
}

#[pymethods]
impl Registry {
    #[new]
    fn new() -> Self {
        Registry {
            inner: default_registry(),
        }
    }

    /// Component metadata dicts, optionally filtered by task and KG.
    #[pyo3(signature = (task=None, kg=None))]
    fn components<'py>(
        &self,
        py: Python<'py>,
        task: Option<&str>,
        kg: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let task = task.map(parse_task).transpose()?;
        let metas: Vec<&ComponentMetadata> = self
            .inner
            .all()
            .filter(|m| task.is_none_or(|t| m.task == t))
            .filter(|m| kg.is_none_or(|k| m.supports(k)))
            .collect();
        to_py(py, &metas)
    }

    /// Registers an HTTP component after checking its `/meta` answer.
    #[pyo3(signature = (id, task, endpoint, supported_kgs=Vec::new(), timeout_ms=DEFAULT_TIMEOUT_MS))]
    fn register_remote(
        &mut self,
        py: Python<'_>,
        id: &str,
        task: &str,
        endpoint: &str,
        supported_kgs: Vec<String>,
        timeout_ms: u64,
    ) -> PyResult<String> {
        let kgs: Vec<&str> = supported_kgs.iter().map(String::as_str).collect();
        let mut meta = ComponentMetadata::remote(id, parse_task(task)?, &kgs, endpoint);
        meta.timeout_ms = timeout_ms;
        let reg = &mut self.inner;
        py.detach(|| reg.register_remote(meta)).map_err(err)
    }

    /// Every valid single-TE pipeline for `kg`.
    fn generate_pipelines(&self, kg: &str) -> PyResult<Vec<Pipeline>> {
        let configs = core_pipeline::generate_pipelines(&self.inner, kg).map_err(err)?;
        Ok(configs
            .into_iter()
            .map(|inner| Pipeline { inner })
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Labels and aliases of a knowledge graph.
#[pyclass(module = "plumber")]
struct KnowledgeGraph {
    inner: kg::KnowledgeGraph,
}

#[pymethods]
impl KnowledgeGraph {
    /// The bundled sample KG: "dbpedia" or "orkg".
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        bundled_kg(name)
            .map(|inner| KnowledgeGraph { inner })
            .ok_or_else(|| err(format!("no bundled KG named {name:?}")))
    }

    /// Loads a TSV file: kind, IRI, label, aliases.
    #[staticmethod]
    fn load(name: &str, path: PathBuf) -> PyResult<Self> {
        let inner = kg::KnowledgeGraph::load(name, path).map_err(err)?;
        Ok(KnowledgeGraph { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// `(iri, score)` candidates, best first. `kind` is "entity" or
    /// "property"; `mode` is "exact", "case_insensitive" or "fuzzy".
    #[pyo3(signature = (surface, kind="entity", mode="exact", threshold=DEFAULT_FUZZY_THRESHOLD))]
    fn lookup(
        &self,
        surface: &str,
        kind: &str,
        mode: &str,
        threshold: f64,
    ) -> PyResult<Vec<(String, f64)>> {
        let kind: EntryKind = serde_json::from_value(kind.into()).map_err(err)?;
        let mode: MatchMode = serde_json::from_value(mode.into()).map_err(err)?;
        Ok(self.inner.lookup(kind, surface, mode, threshold))
    }

    fn __len__(&self) -> usize {
        self.inner.entries().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "KnowledgeGraph({:?}, entries={})",
            self.inner.name,
            self.inner.entries().len()
        )
    }
}

/// One CR component, one or more TE components and a linking option, bound
/// to a KG.
#[pyclass(module = "plumber", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct Pipeline {
    inner: PipelineConfig,
}

#[pymethods]
impl Pipeline {
    /// Give either `joint`, or both `el` and `rl`.
    #[new]
    #[pyo3(signature = (kg, cr, te, el=None, rl=None, joint=None))]
    fn new(
        kg: &str,
        cr: &str,
        te: Vec<String>,
        el: Option<String>,
        rl: Option<String>,
        joint: Option<String>,
    ) -> PyResult<Self> {
        let linking = match (el, rl, joint) {
            (None, None, Some(j)) => LinkingOption::Joint(j),
            (Some(el), Some(rl), None) => LinkingOption::Pair { el, rl },
            _ => return Err(err("give either joint, or both el and rl")),
        };
        let te: Vec<&str> = te.iter().map(String::as_str).collect();
        Ok(Pipeline {
            inner: PipelineConfig::new(kg, cr, &te, linking),
        })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        let mut inner: PipelineConfig = serde_json::from_str(json).map_err(err)?;
        inner.id = inner.compute_id();
        Ok(Pipeline { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("pipeline serializes")
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn kg(&self) -> &str {
        &self.inner.kg
    }

    #[getter]
    fn cr(&self) -> &str {
        &self.inner.cr
    }

    #[getter]
    fn te(&self) -> Vec<String> {
        self.inner.te.clone()
    }

    /// Component ids in stage order.
    fn components(&self) -> Vec<String> {
        self.inner
            .components()
            .into_iter()
            .map(str::to_string)
            .collect()
    }

    /// Checks every component exists, supports the KG and fits its stage.
    fn validate(&self, registry: &Registry) -> PyResult<()> {
        self.inner.validate(&registry.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Pipeline({}: {})", self.inner.id, self.inner.describe())
    }
}

/// Runs a pipeline on `text`. Returns `{"pipeline_id", "triples",
/// "stage_trace"}` with triples as `(s, p, o)` tuples.
#[pyfunction]
fn run<'py>(
    py: Python<'py>,
    registry: &Registry,
    pipeline: &Pipeline,
    text: &str,
    kg: &KnowledgeGraph,
) -> PyResult<Bound<'py, PyAny>> {
    #[derive(Serialize)]
    struct Out {
        pipeline_id: String,
        triples: Vec<(String, String, String)>,
        stage_trace: Vec<core_pipeline::StageTrace>,
    }
    let result = py
        .detach(|| core_pipeline::run_text(&registry.inner, &pipeline.inner, text, &kg.inner))
        .map_err(err)?;
    let triples = result
        .linked_triples
        .iter()
        .map(|t| {
            let g = GoldTriple::from_linked(t);
            (g.s, g.p, g.o)
        })
        .collect();
    to_py(
        py,
        &Out {
            pipeline_id: result.pipeline_id,
            triples,
            stage_trace: result.stage_trace,
        },
    )
}

/// Softmax-regression pipeline selector.
#[pyclass(module = "plumber")]
struct SelectorModel {
    inner: selector::SelectorModel,
}

#[pymethods]
impl SelectorModel {
    /// Labels `dataset` (a JSONL path) with the best of `pipelines` per
    /// sentence and fits the selector.
    #[staticmethod]
    #[pyo3(signature = (registry, pipelines, dataset, kg, epochs=500, lr=0.1, l2=1e-3, seed=42, exclude_degenerate=false))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        registry: &Registry,
        pipelines: Vec<PyRef<'_, Pipeline>>,
        dataset: PathBuf,
        kg: &KnowledgeGraph,
        epochs: usize,
        lr: f64,
        l2: f64,
        seed: u64,
        exclude_degenerate: bool,
    ) -> PyResult<Self> {
        let examples = self::dataset(dataset)?;
        let pool = configs(&pipelines);
        let hp = Hyperparams {
            epochs,
            learning_rate: lr,
            l2,
            batch_size: None,
            seed,
            exclude_degenerate,
        };
        let inner = py
            .detach(|| {
                let labeled =
                    selector::label_training_data(&registry.inner, &pool, &examples, &kg.inner)?;
                selector::train_selector(&labeled, &hp)
            })
            .map_err(err)?;
        Ok(SelectorModel { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = selector::SelectorModel::load(path).map_err(err)?;
        Ok(SelectorModel { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    /// Id of the pipeline chosen for `text`.
    fn select(&self, text: &str) -> String {
        selector::select_pipeline(&self.inner, text)
    }

    /// Unnormalized class scores, in `classes` order.
    fn scores(&self, text: &str) -> Vec<f64> {
        self.inner.scores(&selector::extract_features(text))
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes.clone()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }
}

/// Sentence features used by the selector, by name.
#[pyfunction]
fn features(text: &str) -> Vec<(String, f64)> {
    let v = selector::extract_features(text);
    selector::FEATURE_NAMES
        .iter()
        .zip(v.0)
        .map(|(n, x)| (n.to_string(), x))
        .collect()
}

/// Micro P/R/F1 report of one pipeline on a JSONL dataset.
#[pyfunction]
fn evaluate_pipeline<'py>(
    py: Python<'py>,
    registry: &Registry,
    pipeline: &Pipeline,
    dataset: PathBuf,
    kg: &KnowledgeGraph,
) -> PyResult<Bound<'py, PyAny>> {
    let examples = self::dataset(dataset)?;
    let report = py.detach(|| {
        evaluation::evaluate_pipeline(&registry.inner, &pipeline.inner, &examples, &kg.inner)
    });
    to_py(py, &report)
}

/// Report of per-sentence selection over `pipelines`: with `model`, or the
/// gold-F1 oracle when `model` is None.
#[pyfunction]
#[pyo3(signature = (registry, pipelines, dataset, kg, model=None))]
fn evaluate_selection<'py>(
    py: Python<'py>,
    registry: &Registry,
    pipelines: Vec<PyRef<'py, Pipeline>>,
    dataset: PathBuf,
    kg: &KnowledgeGraph,
    model: Option<&SelectorModel>,
) -> PyResult<Bound<'py, PyAny>> {
    let examples = self::dataset(dataset)?;
    let pool = configs(&pipelines);
    let selection = match model {
        Some(m) => Selection::Model(&m.inner),
        None => Selection::Oracle,
    };
    let report = py
        .detach(|| {
            evaluation::evaluate_selector(&registry.inner, &selection, &pool, &examples, &kg.inner)
        })
        .map_err(err)?;
    to_py(py, &report)
}

/// Seeded k-fold cross-validation of the selector.
#[pyfunction]
#[pyo3(signature = (registry, pipelines, dataset, kg, k=10, epochs=500, lr=0.1, l2=1e-3, seed=42))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    registry: &Registry,
    pipelines: Vec<PyRef<'py, Pipeline>>,
    dataset: PathBuf,
    kg: &KnowledgeGraph,
    k: usize,
    epochs: usize,
    lr: f64,
    l2: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let examples = self::dataset(dataset)?;
    let pool = configs(&pipelines);
    let hp = Hyperparams {
        epochs,
        learning_rate: lr,
        l2,
        seed,
        ..Hyperparams::default()
    };
    let report = py
        .detach(|| {
            selector::cross_validate_dataset(&registry.inner, &pool, &examples, &kg.inner, k, &hp)
        })
        .map_err(err)?;
    to_py(py, &report)
}

/// Share of the error attributable to each stage. Needs gold intermediates.
#[pyfunction]
fn attribute_errors<'py>(
    py: Python<'py>,
    registry: &Registry,
    pipeline: &Pipeline,
    dataset: PathBuf,
    kg: &KnowledgeGraph,
) -> PyResult<Bound<'py, PyAny>> {
    let examples = self::dataset(dataset)?;
    let attribution = py
        .detach(|| {
            evaluation::attribute_errors(&registry.inner, &pipeline.inner, &examples, &kg.inner)
        })
        .map_err(err)?;
    to_py(py, &attribution)
}

/// Component × bucket F1 grid for one task, as CSV.
#[pyfunction]
#[pyo3(signature = (registry, task, dataset, kg, components=None))]
fn microbench(
    py: Python<'_>,
    registry: &Registry,
    task: &str,
    dataset: PathBuf,
    kg: &KnowledgeGraph,
    components: Option<Vec<String>>,
) -> PyResult<String> {
    let task = parse_task(task)?;
    let examples = self::dataset(dataset)?;
    let components = components.unwrap_or_else(|| {
        registry
            .inner
            .all()
            .filter(|m| {
                m.supports(&kg.inner.name)
                    && (m.task == task
                        || (m.task == Task::ElRl && matches!(task, Task::El | Task::Rl)))
            })
            .map(|m| m.id.clone())
            .collect()
    });
    let grid = py
        .detach(|| {
            evaluation::microbench(
                &registry.inner,
                task,
                &components,
                &examples,
                &kg.inner,
                &Lexicons::default(),
            )
        })
        .map_err(err)?;
    Ok(grid.to_csv())
}

#[pymodule]
fn plumber(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PlumberError", m.py().get_type::<PlumberError>())?;
    m.add_class::<Registry>()?;
    m.add_class::<KnowledgeGraph>()?;
    m.add_class::<Pipeline>()?;
    m.add_class::<SelectorModel>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_selection, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(attribute_errors, m)?)?;
    m.add_function(wrap_pyfunction!(microbench, m)?)?;
    Ok(())
}
