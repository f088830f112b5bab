mod common;

use plumber_core::builtin::default_registry;
use plumber_core::dataset::{parse_jsonl, to_jsonl};
use plumber_core::evaluation::{evaluate_pipeline, EvalError};
use plumber_core::fixtures::dbpedia_kg;
use plumber_core::pipeline::{LinkingOption, PipelineConfig};

use common::dataset;

#[test]
fn bundled_datasets_load_and_round_trip() {
    for name in [
        "synthetic-dbpedia.jsonl",
        "microbench-30.jsonl",
        "rembrandt.jsonl",
        "orkg-example.jsonl",
    ] {
        let rows = dataset(name);
        assert!(!rows.is_empty(), "{name}");
        assert_eq!(parse_jsonl(&to_jsonl(&rows)).unwrap(), rows, "{name}");
    }
    assert!(dataset("synthetic-dbpedia.jsonl").len() >= 200);
}

#[test]
fn microbench_fixture_has_every_gold_stage() {
    let rows = dataset("microbench-30.jsonl");
    assert_eq!(rows.len(), 30);
    for r in &rows {
        assert!(
            r.gold_clusters.is_some() && r.gold_text_triples.is_some(),
            "{}",
            r.id
        );
        assert!(
            r.gold_entity_links.is_some() && r.gold_relation_links.is_some(),
            "{}",
            r.id
        );
    }
}

#[test]
fn attribution_needs_gold_intermediates() {
    let reg = default_registry();
    let cfg = PipelineConfig::new(
        "dbpedia",
        "cr_identity",
        &["te_svo"],
        LinkingOption::Joint("elrl_joint".into()),
    );
    let err = plumber_core::evaluation::attribute_errors(
        &reg,
        &cfg,
        &dataset("synthetic-dbpedia.jsonl"),
        &dbpedia_kg(),
    )
    .unwrap_err();
    assert!(
        matches!(err, EvalError::MissingGold { ref stage, .. } if stage == "CR"),
        "{err}"
    );
}

#[test]
fn rembrandt_pipeline_scores_perfectly() {
    let reg = default_registry();
    let cfg = PipelineConfig::new(
        "dbpedia",
        "cr_pronoun_nearest",
        &["te_svo", "te_verb_prep_pattern"],
        LinkingOption::Joint("elrl_joint".into()),
    );
    let r = evaluate_pipeline(&reg, &cfg, &dataset("rembrandt.jsonl"), &dbpedia_kg());
    assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    assert_eq!(r.metadata.averaging, "micro");
}
