#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plumber_core::builtin::default_registry;
use plumber_core::dataset::load_jsonl;
use plumber_core::fixtures::dbpedia_kg;
use plumber_core::pipeline::{generate_pipelines, LinkingOption, PipelineConfig, PipelinePool};
use plumber_core::selector::{label_training_data, train_selector, Hyperparams};

pub const REMBRANDT_TEXT: &str =
    "Rembrandt painted The Storm on the Sea of Galilee. It was painted in 1633.";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn plumber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plumber"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// A small dbpedia pool: two CR, two TE and three linking options.
pub fn small_pool() -> Vec<PipelineConfig> {
    generate_pipelines(&default_registry(), "dbpedia")
        .unwrap()
        .into_iter()
        .filter(|c| ["cr_identity", "cr_pronoun_nearest"].contains(&c.cr.as_str()))
        .filter(|c| ["te_svo", "te_clause_split"].contains(&c.te[0].as_str()))
        .filter(|c| match &c.linking {
            LinkingOption::Pair { el, rl } => {
                rl == "rl_dictionary" && (el == "el_exact" || el == "el_case_insensitive")
            }
            LinkingOption::Joint(id) => id == "elrl_joint",
        })
        .collect()
}

pub fn write_small_pool(dir: &Path) -> PathBuf {
    let path = dir.join("pool.json");
    PipelinePool::from_configs(small_pool())
        .save(&path)
        .unwrap();
    path
}

/// Trains a selector over [`small_pool`] on the synthetic dataset.
pub fn write_model(dir: &Path) -> PathBuf {
    let dataset = load_jsonl(fixture("synthetic-dbpedia.jsonl")).unwrap();
    let labeled =
        label_training_data(&default_registry(), &small_pool(), &dataset, &dbpedia_kg()).unwrap();
    let model = train_selector(&labeled, &Hyperparams::default()).unwrap();
    let path = dir.join("model.json");
    model.save(&path).unwrap();
    path
}
