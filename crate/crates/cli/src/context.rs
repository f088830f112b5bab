//! Everything a command needs: the registry, the loaded KGs and the resolved
//! shared settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use plumber_core::builtin::register_builtins;
use plumber_core::components::Registry;
use plumber_core::dataset::{load_jsonl, Example};
use plumber_core::fixtures::bundled_kg;
use plumber_core::kg::KnowledgeGraph;
use plumber_core::pipeline::{generate_pipelines, PipelineConfig, PipelinePool};
use plumber_core::text::Lexicons;

use crate::config::{Preset, RunConfigFile};
use crate::CliError;

pub const DEFAULT_KG: &str = "dbpedia";
pub const DEFAULT_SEED: u64 = 42;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Target knowledge graph name.
    #[arg(long, global = true, value_name = "NAME")]
    pub kg: Option<String>,
    /// KG TSV file, loaded under the `--kg` name (default dbpedia).
    #[arg(long = "kg-file", global = true, value_name = "PATH")]
    pub kg_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
}

pub struct Context {
    pub registry: Registry,
    pub lexicons: Arc<Lexicons>,
    pub kgs: BTreeMap<String, KnowledgeGraph>,
    /// The `--kg` flag, if given.
    pub kg_flag: Option<String>,
    pub seed: u64,
    pub workers: usize,
    pub pretty: bool,
    pub model: Option<PathBuf>,
    pub pipelines: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Context {
    pub fn new(args: &GlobalArgs) -> Result<Context, CliError> {
        let file = match &args.config {
            Some(p) => RunConfigFile::load(p)?,
            None => RunConfigFile::default(),
        };
        let lexicons = Arc::new(Lexicons::default());
        let mut registry = Registry::new();
        if file.registry.preset == Preset::Default {
            register_builtins(&mut registry, lexicons.clone())?;
        }
        for spec in &file.registry.remote {
            registry.register_remote(spec.metadata())?;
        }

        let mut kgs = BTreeMap::new();
        for name in ["dbpedia", "orkg"] {
            if let Some(kg) = bundled_kg(name) {
                kgs.insert(name.to_string(), kg);
            }
        }
        for (name, path) in &file.kgs {
            kgs.insert(name.clone(), KnowledgeGraph::load(name.clone(), path)?);
        }
        if let Some(path) = &args.kg_file {
            let name = args.kg.clone().unwrap_or_else(|| DEFAULT_KG.to_string());
            kgs.insert(name.clone(), KnowledgeGraph::load(name, path)?);
        }

        let workers = args
            .workers
            .map(|w| w as usize)
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        // The global pool can only be configured once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();

        Ok(Context {
            registry,
            lexicons,
            kgs,
            kg_flag: args.kg.clone(),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            workers,
            pretty: args.pretty,
            model: file.model,
            pipelines: file.pipelines,
        })
    }

    pub fn kg_name(&self) -> &str {
        self.kg_flag.as_deref().unwrap_or(DEFAULT_KG)
    }

    pub fn kg(&self, name: &str) -> Result<&KnowledgeGraph, CliError> {
        self.kgs.get(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown KG {name:?}; pass --kg-file or add it to the config [kgs] table"
            ))
        })
    }

    /// The pipeline pool for `kg`: the `--pipelines` file (or the config's)
    /// restricted to `kg`, else every generated pipeline.
    pub fn pipelines(
        &self,
        flag: Option<&Path>,
        kg: &str,
    ) -> Result<Vec<PipelineConfig>, CliError> {
        match flag.or(self.pipelines.as_deref()) {
            Some(path) => {
                let pool = PipelinePool::load(path)?;
                let configs: Vec<PipelineConfig> =
                    pool.all().into_iter().filter(|c| c.kg == kg).collect();
                if configs.is_empty() {
                    return Err(CliError::Invalid(format!(
                        "{} has no pipelines for KG {kg:?}",
                        path.display()
                    )));
                }
                Ok(configs)
            }
            None => Ok(generate_pipelines(&self.registry, kg)?),
        }
    }

    /// Finds a pipeline by id in the pool file, or among the pipelines
    /// generated for every loaded KG.
    pub fn find_pipeline(&self, flag: Option<&Path>, id: &str) -> Result<PipelineConfig, CliError> {
        if let Some(path) = flag.or(self.pipelines.as_deref()) {
            return Ok(PipelinePool::load(path)?.get(id)?);
        }
        for kg in self.kgs.keys() {
            if let Ok(configs) = generate_pipelines(&self.registry, kg) {
                if let Some(cfg) = configs.into_iter().find(|c| c.id == id) {
                    return Ok(cfg);
                }
            }
        }
        Err(plumber_core::pipeline::PipelineError::NotFound(id.to_string()).into())
    }

    pub fn model_path(&self, flag: Option<&Path>) -> Result<PathBuf, CliError> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.model.clone())
            .ok_or_else(|| {
                CliError::Usage(
                    "no selector model: pass --model or set `model` in the config".into(),
                )
            })
    }

    /// Loads a dataset and determines its KG: `--kg` if given, else the KG
    /// named by the examples, which must all agree.
    pub fn dataset(&self, path: &Path) -> Result<(Vec<Example>, String), CliError> {
        if !path.exists() {
            return Err(io_err(path)(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "dataset not found",
            )));
        }
        let examples = load_jsonl(path)?;
        let kg = match (&self.kg_flag, examples.first()) {
            (Some(k), _) => k.clone(),
            (None, Some(e)) => e.kg.clone(),
            (None, None) => DEFAULT_KG.to_string(),
        };
        if let Some(e) = examples.iter().find(|e| e.kg != kg) {
            return Err(CliError::Invalid(format!(
                "example {:?} targets KG {:?} but the run uses {kg:?}",
                e.id, e.kg
            )));
        }
        Ok((examples, kg))
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(io_err(path))
}
