//! The HTTP service.
//!
//! | method | path                 | body                                   |
//! |--------|----------------------|----------------------------------------|
//! | POST   | `/extract`           | `{"text", "kg"?, "verbose"?}`          |
//! | POST   | `/run/{pipeline_id}` | `{"text", "verbose"?}`                 |
//! | GET    | `/pipelines?kg=`     |                                        |
//! | GET    | `/components?task=&kg=` |                                     |
//! | POST   | `/components`        | a remote component declaration         |
//! | GET    | `/health`            |                                        |
//!
//! Errors come back as `{"error": "..."}` with status 400, 404, 405, 409 or
//! 500.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use plumber_core::components::{ComponentError, Registry, Task};
use plumber_core::kg::KnowledgeGraph;
use plumber_core::pipeline::{generate_pipelines, PipelineError, PipelinePool};
use plumber_core::selector::SelectorModel;

use crate::config::RemoteSpec;
use crate::context::Context;
use crate::output::{extract, json as render, select_config};
use crate::CliError;

const POLL: Duration = Duration::from_millis(100);

/// Shared state of the service. Extraction only takes read locks.
pub struct Service {
    registry: RwLock<Registry>,
    kgs: BTreeMap<String, KnowledgeGraph>,
    default_kg: String,
    model: Option<SelectorModel>,
    pool: PipelinePool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractRequest {
    text: String,
    #[serde(default)]
    kg: Option<String>,
    #[serde(default)]
    verbose: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    text: String,
    #[serde(default)]
    verbose: bool,
}

/// A handler failure with its HTTP status.
struct HttpError(u16, String);

impl From<CliError> for HttpError {
    fn from(e: CliError) -> Self {
        let status = match &e {
            CliError::Usage(_) | CliError::Invalid(_) => 400,
            CliError::Pipeline(PipelineError::NotFound(_)) => 404,
            CliError::Pipeline(PipelineError::InvalidConfig(_)) => 400,
            _ => 500,
        };
        HttpError(status, e.to_string())
    }
}

fn bad_request(message: impl Into<String>) -> HttpError {
    HttpError(400, message.into())
}

fn parse_body<'a, T: Deserialize<'a>>(body: &'a [u8]) -> Result<T, HttpError> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("invalid request body: {e}")))
}

impl Service {
    /// Builds the service from a command context. The pool comes from
    /// `pipelines` (or the config's pool file), else it is generated for
    /// every loaded KG.
    pub fn new(
        ctx: Context,
        model: Option<&Path>,
        pipelines: Option<&Path>,
    ) -> Result<Service, CliError> {
        let model_path = model.map(Path::to_path_buf).or_else(|| ctx.model.clone());
        let model = match model_path {
            Some(p) => Some(SelectorModel::load(p)?),
            None => None,
        };
        let pool = match pipelines.or(ctx.pipelines.as_deref()) {
            Some(path) => PipelinePool::load(path)?,
            None => {
                let pool = PipelinePool::new();
                for kg in ctx.kgs.keys() {
                    match generate_pipelines(&ctx.registry, kg) {
                        Ok(configs) => configs.into_iter().for_each(|c| {
                            pool.put(c);
                        }),
                        Err(e) => log::warn!("no pipelines for KG {kg:?}: {e}"),
                    }
                }
                pool
            }
        };
        Ok(Service {
            default_kg: ctx.kg_name().to_string(),
            registry: RwLock::new(ctx.registry),
            kgs: ctx.kgs,
            model,
            pool,
        })
    }

    fn kg(&self, name: &str) -> Result<&KnowledgeGraph, HttpError> {
        self.kgs
            .get(name)
            .ok_or_else(|| HttpError(404, format!("unknown KG {name:?}")))
    }

    fn registry(&self) -> std::sync::RwLockReadGuard<'_, Registry> {
        self.registry.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Routes one request and returns the status and JSON body.
    pub fn handle(&self, method: &str, url: &str, body: &[u8]) -> (u16, String) {
        match self.route(method, url, body) {
            Ok((status, body)) => (status, body),
            Err(HttpError(status, message)) => {
                (status, render(&json!({ "error": message }), false))
            }
        }
    }

    fn route(&self, method: &str, url: &str, body: &[u8]) -> Result<(u16, String), HttpError> {
        let (path, query) = url.split_once('?').unwrap_or((url, ""));
        let params: BTreeMap<String, String> = url::form_urlencoded::parse(query.as_bytes())
            .into_owned()
            .collect();
        let path = path.trim_end_matches('/');
        match (method, path) {
            ("GET", "/health") => Ok((
                200,
                render(
                    &json!({
                        "status": "ok",
                        "components": self.registry().len(),
                        "pipelines": self.pool.len(),
                        "model": self.model.is_some(),
                    }),
                    false,
                ),
            )),
            ("GET", "/pipelines") => {
                let kg = params
                    .get("kg")
                    .cloned()
                    .unwrap_or_else(|| self.default_kg.clone());
                self.kg(&kg)?;
                let ids = self.pool.list(&kg);
                Ok((200, render(&json!({ "kg": kg, "pipelines": ids }), false)))
            }
            ("GET", "/components") => {
                let task: Option<Task> = match params.get("task") {
                    Some(t) => Some(t.parse().map_err(bad_request)?),
                    None => None,
                };
                let reg = self.registry();
                let metas: Vec<_> = reg
                    .all()
                    .filter(|m| task.is_none_or(|t| m.task == t))
                    .filter(|m| params.get("kg").is_none_or(|kg| m.supports(kg)))
                    .collect();
                Ok((200, render(&metas, false)))
            }
            ("POST", "/components") => self.register(parse_body(body)?),
            ("POST", "/extract") => {
                let req: ExtractRequest = parse_body(body)?;
                let model = self.model.as_ref().ok_or_else(|| {
                    bad_request("the service was started without a selector model")
                })?;
                let kg_name = req.kg.unwrap_or_else(|| self.default_kg.clone());
                let kg = self.kg(&kg_name)?;
                let cfg = select_config(model, &req.text, |id| {
                    self.pool.get(id).ok().filter(|c| c.kg == kg_name)
                })?;
                let out = extract(&self.registry(), &cfg, kg, &req.text, req.verbose)?;
                Ok((200, render(&out, false)))
            }
            ("POST", p) if p.starts_with("/run/") => {
                let id = &p["/run/".len()..];
                let req: RunRequest = parse_body(body)?;
                let cfg = self.pool.get(id).map_err(CliError::from)?;
                let kg = self.kg(&cfg.kg)?;
                let out = extract(&self.registry(), &cfg, kg, &req.text, req.verbose)?;
                Ok((200, render(&out, false)))
            }
            (_, "/health" | "/pipelines" | "/components" | "/extract") => {
                Err(HttpError(405, format!("{method} is not allowed on {path}")))
            }
            _ => Err(HttpError(404, format!("no route for {method} {path}"))),
        }
    }

    /// Registers a remote component and adds the pipelines it makes possible.
    fn register(&self, spec: RemoteSpec) -> Result<(u16, String), HttpError> {
        let meta = spec.metadata();
        let mut reg = self.registry.write().unwrap_or_else(|e| e.into_inner());
        reg.register_remote(meta.clone()).map_err(|e| match e {
            ComponentError::Duplicate(_) => HttpError(409, e.to_string()),
            other => bad_request(other.to_string()),
        })?;
        let before = self.pool.len();
        for kg in self.kgs.keys().filter(|kg| meta.supports(kg)) {
            if let Ok(configs) = generate_pipelines(&reg, kg) {
                configs.into_iter().for_each(|c| {
                    self.pool.put(c);
                });
            }
        }
        let added = self.pool.len() - before;
        Ok((
            201,
            render(
                &json!({ "component": meta, "pipelines_added": added }),
                false,
            ),
        ))
    }
}

/// A running server; dropping it does not stop it, call [`Running::stop`].
pub struct Running {
    pub addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl Running {
    pub fn shutdown_flag(&self) -> Arc<AtomicBool> {
        self.shutdown.clone()
    }

    /// Blocks until the shutdown flag is set and every worker has finished
    /// its current request.
    pub fn join(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }

    pub fn stop(self) {
        self.shutdown.store(true, Ordering::SeqCst);
        self.join();
    }
}

/// Binds `addr` and serves requests on `workers` threads.
pub fn start(service: Arc<Service>, addr: &str, workers: usize) -> Result<Running, CliError> {
    let server = tiny_http::Server::http(addr)
        .map_err(|e| CliError::Server(format!("cannot bind {addr}: {e}")))?;
    let local = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| CliError::Server(format!("{addr} is not an IP address")))?;
    let server = Arc::new(server);
    let shutdown = Arc::new(AtomicBool::new(false));
    let threads = (0..workers.max(1))
        .map(|_| {
            let server = server.clone();
            let service = service.clone();
            let shutdown = shutdown.clone();
            std::thread::spawn(move || {
                while !shutdown.load(Ordering::SeqCst) {
                    match server.recv_timeout(POLL) {
                        Ok(Some(request)) => respond(&service, request),
                        Ok(None) => {}
                        Err(e) => log::error!("receiving request: {e}"),
                    }
                }
            })
        })
        .collect();
    Ok(Running {
        addr: local,
        shutdown,
        threads,
    })
}

fn respond(service: &Service, mut request: tiny_http::Request) {
    let mut body = Vec::new();
    let (status, payload) = match request.as_reader().read_to_end(&mut body) {
        Ok(_) => service.handle(request.method().as_str(), request.url(), &body),
        Err(e) => (400, render(&json!({ "error": e.to_string() }), false)),
    };
    log::info!("{} {} {status}", request.method(), request.url());
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json; charset=utf-8")
        .expect("static header is valid");
    let response = tiny_http::Response::from_string(payload)
        .with_status_code(status)
        .with_header(header);
    if let Err(e) = request.respond(response) {
        log::warn!("writing response: {e}");
    }
}

/// `plumber serve`: runs until SIGINT or SIGTERM.
pub fn serve(
    ctx: Context,
    host: &str,
    port: u16,
    model: Option<&Path>,
    pipelines: Option<&Path>,
) -> Result<(), CliError> {
    let workers = ctx.workers;
    let service = Arc::new(Service::new(ctx, model, pipelines)?);
    let running = start(service, &format!("{host}:{port}"), workers)?;
    let flag = running.shutdown_flag();
    ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst))
        .map_err(|e| CliError::Server(format!("installing the signal handler: {e}")))?;
    eprintln!("listening on http://{}", running.addr);
    running.join();
    eprintln!("shut down");
    Ok(())
}
