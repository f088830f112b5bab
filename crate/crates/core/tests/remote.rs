mod common;

use std::net::TcpListener;
use std::time::{Duration, Instant};

use plumber_core::annotation::{AnnotationSet, Document};
use plumber_core::builtin::default_registry;
use plumber_core::components::{ComponentError, ComponentMetadata, Registry, RemoteClient, Task};
use plumber_core::fixtures::dbpedia_kg;
use plumber_core::kg::KnowledgeGraph;
use plumber_core::pipeline::{run_text, LinkingOption, PipelineConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_annotation_set, EchoServer};

fn te_meta(endpoint: &str) -> ComponentMetadata {
    ComponentMetadata::remote("te_echo", Task::Te, &["dbpedia"], endpoint)
}

#[test]
fn slow_component_times_out() {
    let echo = EchoServer::start(te_meta("x"), Duration::from_millis(600));
    let client = RemoteClient::new("te_echo", &echo.endpoint, 150);
    let set = AnnotationSet::new(Document::new("d", "Anna works at TIB."));
    let started = Instant::now();
    let err = client
        .annotate(&set, &KnowledgeGraph::empty("dbpedia"))
        .unwrap_err();
    assert!(
        matches!(
            err,
            ComponentError::Timeout {
                timeout_ms: 150,
                ..
            }
        ),
        "{err}"
    );
    assert!(started.elapsed() < Duration::from_millis(600));
}

#[test]
fn refused_connection_is_reported_after_retry() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let client = RemoteClient::new("te_gone", &format!("http://127.0.0.1:{port}"), 500);
    let set = AnnotationSet::new(Document::new("d", "text"));
    let err = client
        .annotate(&set, &KnowledgeGraph::empty("dbpedia"))
        .unwrap_err();
    assert!(matches!(err, ComponentError::Failed { .. }), "{err}");

    let mut reg = Registry::new();
    assert!(reg
        .register_remote(te_meta(&format!("http://127.0.0.1:{port}")))
        .is_err());
    assert!(reg.is_empty());
}

#[test]
fn remote_te_runs_inside_a_pipeline() {
    let echo = EchoServer::start(te_meta("x"), Duration::ZERO);
    let mut reg = default_registry();
    reg.register_remote(te_meta(&echo.endpoint)).unwrap();
    assert_eq!(reg.list(Task::Te, "dbpedia").len(), 9);
    assert_eq!(reg.list(Task::Te, "orkg").len(), 3);

    // The echo adds no triples, so only the builtin extractor contributes.
    let link = LinkingOption::Pair {
        el: "el_exact".into(),
        rl: "rl_dictionary".into(),
    };
    let with_echo = PipelineConfig::new(
        "dbpedia",
        "cr_identity",
        &["te_svo", "te_echo"],
        link.clone(),
    );
    with_echo.validate(&reg).unwrap();
    let plain = PipelineConfig::new("dbpedia", "cr_identity", &["te_svo"], link);
    let kg = dbpedia_kg();
    let text = "Rembrandt painted The Night Watch.";
    let a = run_text(&reg, &with_echo, text, &kg).unwrap();
    let b = run_text(&reg, &plain, text, &kg).unwrap();
    assert_eq!(a.linked_triples, b.linked_triples);
    assert_eq!(a.linked_triples.len(), 1);
}

#[test]
fn concurrent_calls_share_one_client() {
    let echo = EchoServer::start(te_meta("x"), Duration::from_millis(20));
    let client = RemoteClient::with_max_in_flight("te_echo", &echo.endpoint, 5_000, 2);
    let kg = KnowledgeGraph::empty("dbpedia");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sets: Vec<AnnotationSet> = (0..8).map(|i| random_annotation_set(&mut rng, i)).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = sets
            .iter()
            .map(|set| s.spawn(|| client.annotate(set, &kg).unwrap()))
            .collect();
        for (h, set) in handles.into_iter().zip(&sets) {
            assert_eq!(&h.join().unwrap(), set);
        }
    });
}
