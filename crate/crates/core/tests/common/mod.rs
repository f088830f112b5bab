#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use plumber_core::annotation::{
    AnnotationSet, CorefCluster, Document, EntityLink, LinkedTriple, Object, RelationLink, Span,
    TextTriple,
};
use plumber_core::components::{AnnotateRequest, AnnotateResponse, ComponentMetadata};
use plumber_core::dataset::{load_jsonl, Example};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn dataset(name: &str) -> Vec<Example> {
    load_jsonl(fixture(name)).expect("bundled dataset loads")
}

/// A loopback HTTP component that serves `meta` on `GET /meta` and answers
/// `POST /annotate` with the annotations it was sent, after a JSON decode and
/// re-encode. `delay` is slept before every annotate response.
pub struct EchoServer {
    server: Arc<tiny_http::Server>,
    thread: Option<JoinHandle<()>>,
    pub endpoint: String,
}

impl EchoServer {
    pub fn start(meta: ComponentMetadata, delay: Duration) -> EchoServer {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind loopback"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let s = Arc::clone(&server);
        let thread = std::thread::spawn(move || {
            for mut req in s.incoming_requests() {
                let json = tiny_http::Header::from_bytes(
                    "Content-Type",
                    "application/json; charset=utf-8",
                )
                .unwrap();
                let (status, body) = match (req.method(), req.url()) {
                    (tiny_http::Method::Get, "/meta") => {
                        (200, serde_json::to_string(&meta).unwrap())
                    }
                    (tiny_http::Method::Post, "/annotate") => {
                        let mut raw = String::new();
                        req.as_reader().read_to_string(&mut raw).unwrap();
                        match serde_json::from_str::<AnnotateRequest>(&raw) {
                            Ok(r) => {
                                std::thread::sleep(delay);
                                let resp = AnnotateResponse {
                                    annotations: r.annotations,
                                };
                                (200, serde_json::to_string(&resp).unwrap())
                            }
                            Err(e) => (400, format!("{{\"error\":{:?}}}", e.to_string())),
                        }
                    }
                    _ => (404, "{}".to_string()),
                };
                let _ = req.respond(
                    tiny_http::Response::from_string(body)
                        .with_status_code(status)
                        .with_header(json),
                );
            }
        });
        EchoServer {
            server,
            thread: Some(thread),
            endpoint: format!("http://127.0.0.1:{port}"),
        }
    }
}

impl Drop for EchoServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

const WORDS: &[&str] = &[
    "Rembrandt",
    "painted",
    "the",
    "storm",
    "It",
    "was",
    "in",
    "1633",
    "Zürich",
    "naïve",
    "café",
    "and",
    "of",
    "Wuhan",
    "has",
    "2.68",
    "\"quoted\"",
    "line\nbreak",
    "tab\there",
    "emoji🎨",
];
const IRIS: &[&str] = &[
    "dbr:Rembrandt",
    "dbo:Artist",
    "dbp:year",
    "orkg:R48100",
    "ex:ünï",
];

fn random_span(rng: &mut ChaCha8Rng, text: &str) -> Span {
    let len = text.chars().count();
    let start = rng.random_range(0..len);
    let end = rng.random_range(start + 1..=len);
    Span::from_text(text, start, end)
}

/// A random, valid annotation set exercising every field, non-ASCII text
/// and awkward floating-point scores.
pub fn random_annotation_set(rng: &mut ChaCha8Rng, id: usize) -> AnnotationSet {
    let n = rng.random_range(1..25);
    let text: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let text = text.join(" ");
    let mut set = AnnotationSet::new(Document::new(format!("doc-{id}"), text.clone()));
    for _ in 0..rng.random_range(0..3) {
        set.clusters.push(CorefCluster {
            representative: random_span(rng, &text),
            mentions: (0..rng.random_range(0..3))
                .map(|_| random_span(rng, &text))
                .collect(),
        });
    }
    for _ in 0..rng.random_range(0..4) {
        let mut t = TextTriple::new(
            random_span(rng, &text),
            random_span(rng, &text),
            random_span(rng, &text),
        );
        t.source_component = "te_random".into();
        set.text_triples.push(t);
    }
    for _ in 0..rng.random_range(0..4) {
        set.entity_links.push(EntityLink {
            span: random_span(rng, &text),
            iri: IRIS.choose(rng).unwrap().to_string(),
            score: rng.random::<f64>(),
            source_component: "el_random".into(),
        });
    }
    for _ in 0..rng.random_range(0..3) {
        set.relation_links.push(RelationLink {
            span: random_span(rng, &text),
            iri: IRIS.choose(rng).unwrap().to_string(),
            score: rng.random_range(0.0..=1.0),
            source_component: "rl_random".into(),
        });
    }
    for i in 0..rng.random_range(0..3) {
        let object = if rng.random_bool(0.5) {
            Object::Iri(IRIS.choose(rng).unwrap().to_string())
        } else {
            Object::parse(&format!("\"{}.{i}0\"", rng.random_range(0..5000)))
        };
        set.linked_triples.push(LinkedTriple::new(
            *IRIS.choose(rng).unwrap(),
            "dbo:Artist",
            object,
        ));
    }
    set
}
