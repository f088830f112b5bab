//! The TOML run configuration.
//!
//! ```toml
//! seed = 42
//! workers = 4
//! model = "model.json"
//! pipelines = "pipelines.json"
//!
//! [kgs]
//! dbpedia = "fixtures/dbpedia-sample.tsv"
//!
//! [registry]
//! preset = "default"   # or "none"
//!
//! [[registry.remote]]
//! id = "te_openie"
//! task = "TE"
//! supported_kgs = ["dbpedia"]
//! endpoint = "http://localhost:9000"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use plumber_core::components::{ComponentMetadata, Task, DEFAULT_TIMEOUT_MS};

use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// The bundled reference components.
    #[default]
    Default,
    /// Remote components only.
    None,
}

/// A remote component declaration, in the config file or in
/// `POST /components`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSpec {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
    pub task: Task,
    #[serde(default)]
    pub supported_kgs: Vec<String>,
    pub endpoint: String,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
}

impl RemoteSpec {
    pub fn metadata(&self) -> ComponentMetadata {
        let kgs: Vec<&str> = self.supported_kgs.iter().map(String::as_str).collect();
        let mut meta = ComponentMetadata::remote(&self.id, self.task, &kgs, &self.endpoint);
        if let Some(name) = &self.name {
            meta.name = name.clone();
        }
        meta.timeout_ms = self.timeout_ms.unwrap_or(DEFAULT_TIMEOUT_MS);
        meta
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrySetup {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub remote: Vec<RemoteSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub kgs: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub registry: RegistrySetup,
    pub model: Option<PathBuf>,
    pub pipelines: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<RunConfigFile, CliError> {
        let err = |message: String| CliError::Config {
            path: path.to_path_buf(),
            message,
        };
        let raw = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut cfg: RunConfigFile = toml::from_str(&raw).map_err(|e| err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.kgs.values_mut().for_each(resolve);
        if let Some(p) = cfg.model.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.pipelines.as_mut() {
            resolve(p);
        }
        cfg.validate().map_err(err)?;
        Ok(cfg)
    }

    /// Referenced files must exist and the worker count must be positive.
    pub fn validate(&self) -> Result<(), String> {
        if self.workers == Some(0) {
            return Err("workers must be at least 1".into());
        }
        let paths = self
            .kgs
            .values()
            .chain(self.model.iter())
            .chain(self.pipelines.iter());
        for p in paths {
            if !p.exists() {
                return Err(format!("{} does not exist", p.display()));
            }
        }
        Ok(())
    }
}
