//! HTTP client for remote components.
//!
//! Wire protocol: `GET {endpoint}/meta` returns the component's metadata;
//! `POST {endpoint}/annotate` takes `{"kg": name, "annotations": set}` and
//! returns `{"annotations": set}`.

use std::io;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ComponentError, ComponentMetadata};
use crate::annotation::AnnotationSet;
use crate::kg::KnowledgeGraph;

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotateRequest {
    pub kg: String,
    pub annotations: AnnotationSet,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotateResponse {
    pub annotations: AnnotationSet,
}

#[derive(Debug)]
struct InFlight {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.current.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.current.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteClient {
    id: String,
    endpoint: String,
    timeout_ms: u64,
    agent: ureq::Agent,
    in_flight: InFlight,
}

enum Failure {
    Connect(String),
    Timeout,
    Other(String),
}

fn agent(timeout_ms: u64) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into()
}

fn classify(err: ureq::Error) -> Failure {
    match err {
        ureq::Error::Timeout(_) => Failure::Timeout,
        ureq::Error::Io(e) if e.kind() == io::ErrorKind::TimedOut => Failure::Timeout,
        ureq::Error::Io(e)
            if matches!(
                e.kind(),
                io::ErrorKind::ConnectionRefused
                    | io::ErrorKind::ConnectionReset
                    | io::ErrorKind::ConnectionAborted
                    | io::ErrorKind::NotConnected
            ) =>
        {
            Failure::Connect(e.to_string())
        }
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
            Failure::Connect(err.to_string())
        }
        other => Failure::Other(other.to_string()),
    }
}

fn base(endpoint: &str) -> &str {
    endpoint.trim_end_matches('/')
}

/// Sends one request, retrying once if the connection could not be made.
/// Timeouts are not retried.
fn send_with_retry(
    id: &str,
    timeout_ms: u64,
    mut send: impl FnMut() -> Result<(u16, String), ureq::Error>,
) -> Result<String, ComponentError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let failure = match send() {
            Ok((status, body)) if (200..300).contains(&status) => return Ok(body),
            Ok((status, body)) => Failure::Other(format!("HTTP {status}: {}", body.trim())),
            Err(e) => classify(e),
        };
        match failure {
            Failure::Connect(_) if attempts < 2 => continue,
            Failure::Connect(msg) | Failure::Other(msg) => {
                return Err(ComponentError::Failed {
                    component: id.to_string(),
                    message: msg,
                })
            }
            Failure::Timeout => {
                return Err(ComponentError::Timeout {
                    component: id.to_string(),
                    timeout_ms,
                })
            }
        }
    }
}

fn read(resp: ureq::http::Response<ureq::Body>) -> Result<(u16, String), ureq::Error> {
    let status = resp.status().as_u16();
    let body = resp.into_body().read_to_string()?;
    Ok((status, body))
}

/// Fetches `GET {endpoint}/meta`.
pub fn fetch_meta(
    id: &str,
    endpoint: &str,
    timeout_ms: u64,
) -> Result<ComponentMetadata, ComponentError> {
    let agent = agent(timeout_ms);
    let url = format!("{}/meta", base(endpoint));
    let body = send_with_retry(id, timeout_ms, || read(agent.get(&url).call()?))?;
    serde_json::from_str(&body).map_err(|e| ComponentError::Protocol {
        component: id.to_string(),
        message: format!("bad /meta response: {e}"),
    })
}

impl RemoteClient {
    pub fn new(id: &str, endpoint: &str, timeout_ms: u64) -> RemoteClient {
        RemoteClient::with_max_in_flight(id, endpoint, timeout_ms, DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_max_in_flight(
        id: &str,
        endpoint: &str,
        timeout_ms: u64,
        max_in_flight: usize,
    ) -> RemoteClient {
        RemoteClient {
            id: id.to_string(),
            endpoint: base(endpoint).to_string(),
            timeout_ms,
            agent: agent(timeout_ms),
            in_flight: InFlight {
                max: max_in_flight.max(1),
                current: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn annotate(
        &self,
        ann: &AnnotationSet,
        kg: &KnowledgeGraph,
    ) -> Result<AnnotationSet, ComponentError> {
        let request = AnnotateRequest {
            kg: kg.name.clone(),
            annotations: ann.clone(),
        };
        let payload = serde_json::to_string(&request).map_err(|e| ComponentError::Failed {
            component: self.id.clone(),
            message: e.to_string(),
        })?;
        let url = format!("{}/annotate", self.endpoint);
        let _permit = self.in_flight.acquire();
        let body = send_with_retry(&self.id, self.timeout_ms, || {
            read(
                self.agent
                    .post(&url)
                    .header("Content-Type", "application/json; charset=utf-8")
                    .send(payload.as_str())?,
            )
        })?;
        let resp: AnnotateResponse =
            serde_json::from_str(&body).map_err(|e| ComponentError::Protocol {
                component: self.id.clone(),
                message: format!("bad /annotate response: {e}"),
            })?;
        if resp.annotations.document != ann.document {
            return Err(ComponentError::Protocol {
                component: self.id.clone(),
                message: "response document differs from the request document".into(),
            });
        }
        Ok(resp.annotations)
    }
}
