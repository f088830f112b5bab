//! Composable knowledge-graph information extraction pipelines: coreference
//! resolution, triple extraction and entity/relation linking components,
//! exhaustive pipeline generation, per-sentence pipeline selection and
//! evaluation tooling.

pub mod annotation;
pub mod builtin;
pub mod components;
pub mod dataset;
pub mod evaluation;
pub mod fixtures;
pub mod kg;
pub mod pipeline;
pub mod selector;
pub mod text;
