//! HTTP query service.
//!
//! | Method | Path                      | Result                              |
//! |--------|---------------------------|-------------------------------------|
//! | GET    | `/api/health`             | 200 once the database is loaded     |
//! | POST   | `/api/query`              | ranked JSON; body is a PNG/PGM mask |
//! | GET    | `/api/models/{id}`        | metadata and silhouette polyline    |
//! | GET    | `/api/models/{id}/render` | descriptor PNG                      |
//! | POST   | `/api/decisions`          | appends to the decision log         |
//!
//! `/api/query` takes `alpha`, `sigma_gain`, `tau`, `se_radius`, `samples`,
//! `top_k` and `threshold` as query-string parameters.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::thread;
use std::time::SystemTime;

use image::ImageReader;
use log::{error, info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::database::Database;
use crate::error::{Error, Result};
use crate::format::{RankedDoc, SilhouetteDoc};
use crate::io::{mask_from_gray, OBJECT_THRESHOLD};
use crate::options::QueryOptions;
use crate::render;

const MAX_BODY: u64 = 32 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
    Other,
}

/// A transport-independent request.
#[derive(Debug, Clone)]
pub struct Request {
    pub method: Method,
    /// Path without the query string.
    pub path: String,
    pub query: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Request {
    pub fn new(method: Method, url: &str, body: Vec<u8>) -> Self {
        let (path, qs) = url.split_once('?').unwrap_or((url, ""));
        Self {
            method,
            path: path.to_string(),
            query: form_urlencoded::parse(qs.as_bytes()).into_owned().collect(),
            body,
        }
    }

    fn param(&self, name: &str) -> Option<&str> {
        self.query
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, Response> {
        match self.param(name) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Response::error(400, &format!("bad value for {name}: {v:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Response {
    fn json(status: u16, value: &serde_json::Value) -> Self {
        Self::json_text(status, serde_json::to_string_pretty(value).expect("json value") + "\n")
    }

    fn json_text(status: u16, text: String) -> Self {
        Self {
            status,
            content_type: "application/json",
            body: text.into_bytes(),
        }
    }

    fn error(status: u16, message: &str) -> Self {
        Self::json(status, &json!({ "error": message }))
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.body).unwrap_or("")
    }
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub query_id: String,
    pub model_id: String,
    pub timestamp: String,
    pub note: String,
    pub idempotency_key: String,
}

#[derive(Debug, Deserialize)]
struct DecisionRequest {
    query_id: String,
    model_id: String,
    #[serde(default)]
    note: String,
    idempotency_key: Option<String>,
}

/// Append-only JSON-lines log with a single writer.
pub struct DecisionLog {
    path: PathBuf,
    inner: Mutex<LogState>,
}

struct LogState {
    file: File,
    keys: HashSet<String>,
}

impl DecisionLog {
    /// Opens (creating if needed) the log and indexes existing keys.
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(Error::io(dir))?;
        }
        let mut keys = HashSet::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(Error::io(path))?);
            for line in reader.lines() {
                let line = line.map_err(Error::io(path))?;
                match serde_json::from_str::<Decision>(&line) {
                    Ok(d) => {
                        keys.insert(d.idempotency_key);
                    }
                    Err(e) if !line.trim().is_empty() => {
                        warn!("{}: unreadable decision line: {e}", path.display())
                    }
                    Err(_) => {}
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(Error::io(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: Mutex::new(LogState { file, keys }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends unless the idempotency key was seen before; returns whether
    /// a line was written.
    pub fn append(&self, decision: &Decision) -> Result<bool> {
        let mut state = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        if state.keys.contains(&decision.idempotency_key) {
            return Ok(false);
        }
        let mut line = serde_json::to_string(decision).expect("decision serializes");
        line.push('\n');
        state
            .file
            .write_all(line.as_bytes())
            .and_then(|_| state.file.flush())
            .map_err(Error::io(&self.path))?;
        state.keys.insert(decision.idempotency_key.clone());
        Ok(true)
    }
}

enum DbState {
    Loading,
    Ready(Arc<Database>),
    Failed(String),
}

/// Request handler; cheap to share between worker threads.
pub struct Service {
    db: RwLock<DbState>,
    log: DecisionLog,
}

impl Service {
    pub fn new(log: DecisionLog) -> Self {
        Self {
            db: RwLock::new(DbState::Loading),
            log,
        }
    }

    pub fn set_database(&self, db: Database) {
        *self.db.write().unwrap_or_else(|p| p.into_inner()) = DbState::Ready(Arc::new(db));
    }

    pub fn set_failed(&self, message: String) {
        *self.db.write().unwrap_or_else(|p| p.into_inner()) = DbState::Failed(message);
    }

    fn database(&self) -> Result<Arc<Database>, Response> {
        match &*self.db.read().unwrap_or_else(|p| p.into_inner()) {
            DbState::Ready(db) => Ok(Arc::clone(db)),
            DbState::Loading => Err(Response::error(503, "database is loading")),
            DbState::Failed(msg) => Err(Response::error(503, &format!("database failed to load: {msg}"))),
        }
    }

    pub fn handle(&self, req: &Request) -> Response {
        let segments: Vec<&str> = req.path.trim_matches('/').split('/').collect();
        let result = match (req.method, segments.as_slice()) {
            (Method::Get, ["api", "health"]) => self.health(),
            (Method::Post, ["api", "query"]) => self.query(req),
            (Method::Get, ["api", "models", id]) => self.model(id),
            (Method::Get, ["api", "models", id, "render"]) => self.render(id, req),
            (Method::Post, ["api", "decisions"]) => self.decision(req),
            (_, ["api", "health" | "query" | "decisions"])
            | (_, ["api", "models", _])
            | (_, ["api", "models", _, "render"]) => Err(Response::error(405, "method not allowed")),
            _ => Err(Response::error(404, "not found")),
        };
        result.unwrap_or_else(|r| r)
    }

    fn health(&self) -> Result<Response, Response> {
        let db = self.database()?;
        Ok(Response::json(200, &json!({ "status": "ok", "models": db.len() })))
    }

    fn query(&self, req: &Request) -> Result<Response, Response> {
        let db = self.database()?;
        let options = QueryOptions {
            alpha: req.parsed("alpha")?,
            sigma_gain: req.parsed("sigma_gain")?,
            tau: req.parsed("tau")?,
            se_radius: req.parsed("se_radius")?,
            samples: req.parsed("samples")?,
            top_k: req.parsed("top_k")?,
        };
        let threshold: u8 = req.parsed("threshold")?.unwrap_or(OBJECT_THRESHOLD);
        let params = options.resolve(&db).map_err(|e| Response::error(400, &e.to_string()))?;
        let img = ImageReader::new(std::io::Cursor::new(&req.body))
            .with_guessed_format()
            .map_err(|e| Response::error(400, &e.to_string()))?
            .decode()
            .map_err(|e| Response::error(400, &format!("cannot decode upload: {e}")))?;
        let mask = mask_from_gray(&img.to_luma8(), threshold)
            .map_err(|e| Response::error(400, &e.to_string()))?;
        match db.query(&mask, &params) {
            Ok(list) => {
                let doc = RankedDoc::new(&db, &mask, &params, options.top_k(), &list);
                Ok(Response::json_text(200, doc.to_json()))
            }
            Err(e @ (Error::Core(_) | Error::InvalidArgument(_))) => {
                Err(Response::error(400, &e.to_string()))
            }
            Err(e) => {
                error!("query failed: {e}");
                Err(Response::error(500, &e.to_string()))
            }
        }
    }

    fn model(&self, id: &str) -> Result<Response, Response> {
        let db = self.database()?;
        let record = db
            .get(id)
            .ok_or_else(|| Response::error(404, &format!("unknown model {id:?}")))?;
        let silhouette = SilhouetteDoc::from(&record.silhouette);
        Ok(Response::json(
            200,
            &json!({
                "id": record.meta.id,
                "display_name": record.meta.display_name,
                "class_name": record.meta.class_name,
                "source_path": record.meta.source_path,
                "descriptor_points": record.descriptor.point_count(),
                "polyline": silhouette.points,
                "bow_index": silhouette.bow_index,
                "stern_index": silhouette.stern_index,
            }),
        ))
    }

    /// `?mode=ccss` (default) plots the descriptor, `?mode=silhouette` the
    /// outline.
    fn render(&self, id: &str, req: &Request) -> Result<Response, Response> {
        let db = self.database()?;
        let record = db
            .get(id)
            .ok_or_else(|| Response::error(404, &format!("unknown model {id:?}")))?;
        let plot = match req.param("mode").unwrap_or("ccss") {
            "ccss" => render::plot_ccss(&record.descriptor),
            "silhouette" => render::plot_silhouette(&record.silhouette),
            other => return Err(Response::error(400, &format!("unknown mode {other:?}"))),
        };
        let body = plot.to_png().map_err(|e| Response::error(500, &e.to_string()))?;
        Ok(Response {
            status: 200,
            content_type: "image/png",
            body,
        })
    }

    fn decision(&self, req: &Request) -> Result<Response, Response> {
        let db = self.database()?;
        let r: DecisionRequest = serde_json::from_slice(&req.body)
            .map_err(|e| Response::error(400, &format!("bad decision: {e}")))?;
        if r.query_id.is_empty() {
            return Err(Response::error(400, "query_id is required"));
        }
        if db.get(&r.model_id).is_none() {
            return Err(Response::error(404, &format!("unknown model {:?}", r.model_id)));
        }
        let timestamp = humantime::format_rfc3339_millis(SystemTime::now()).to_string();
        let decision = Decision {
            idempotency_key: r
                .idempotency_key
                .unwrap_or_else(|| format!("{}:{}", r.query_id, r.model_id)),
            query_id: r.query_id,
            model_id: r.model_id,
            timestamp,
            note: r.note,
        };
        match self.log.append(&decision) {
            Ok(true) => Ok(Response::json(201, &json!({ "recorded": true, "decision": decision }))),
            Ok(false) => Ok(Response::json(
                200,
                &json!({ "recorded": false, "idempotency_key": decision.idempotency_key }),
            )),
            Err(e) => {
                error!("decision log: {e}");
                Err(Response::error(500, &e.to_string()))
            }
        }
    }
}

/// A bound HTTP server.
pub struct Server {
    http: Arc<tiny_http::Server>,
    service: Arc<Service>,
}

impl Server {
    pub fn bind(addr: &str, service: Arc<Service>) -> Result<Self> {
        let http = tiny_http::Server::http(addr)
            .map_err(|e| Error::InvalidArgument(format!("cannot listen on {addr}: {e}")))?;
        Ok(Self {
            http: Arc::new(http),
            service,
        })
    }

    pub fn local_port(&self) -> Option<u16> {
        self.http.server_addr().to_ip().map(|a| a.port())
    }

    /// Serves requests on `workers` threads until [`ServerHandle::shutdown`].
    pub fn run(&self, workers: usize) {
        let handles: Vec<_> = (0..workers.max(1))
            .map(|_| {
                let http = Arc::clone(&self.http);
                let service = Arc::clone(&self.service);
                thread::spawn(move || {
                    for request in http.incoming_requests() {
                        respond(&service, request);
                    }
                })
            })
            .collect();
        for h in handles {
            let _ = h.join();
        }
    }

    pub fn handle(&self) -> ServerHandle {
        ServerHandle(Arc::clone(&self.http))
    }
}

/// Stops a running [`Server`] from another thread.
#[derive(Clone)]
pub struct ServerHandle(Arc<tiny_http::Server>);

impl ServerHandle {
    pub fn shutdown(&self) {
        // Each worker blocks in its own receive call.
        for _ in 0..64 {
            self.0.unblock();
        }
    }
}

fn respond(service: &Service, mut request: tiny_http::Request) {
    let method = match request.method() {
        tiny_http::Method::Get => Method::Get,
        tiny_http::Method::Post => Method::Post,
        _ => Method::Other,
    };
    let url = request.url().to_string();
    let mut body = Vec::new();
    let read = request
        .as_reader()
        .take(MAX_BODY + 1)
        .read_to_end(&mut body);
    let response = match read {
        Err(e) => Response::error(400, &format!("cannot read body: {e}")),
        Ok(_) if body.len() as u64 > MAX_BODY => Response::error(413, "body too large"),
        Ok(_) => service.handle(&Request::new(method, &url, body)),
    };
    info!("{:?} {url} -> {}", method, response.status);
    let header = tiny_http::Header::from_bytes("Content-Type", response.content_type)
        .expect("static header");
    let out = tiny_http::Response::from_data(response.body)
        .with_status_code(response.status)
        .with_header(header);
    if let Err(e) = request.respond(out) {
        warn!("cannot send response: {e}");
    }
}

/// Loads `db_dir` in the background and serves on `addr` until killed.
pub fn serve(db_dir: PathBuf, addr: &str, log_path: &Path, workers: usize) -> Result<()> {
    let service = Arc::new(Service::new(DecisionLog::open(log_path)?));
    let server = Server::bind(addr, Arc::clone(&service))?;
    info!("listening on {addr}; decision log {}", log_path.display());
    let loader = Arc::clone(&service);
    thread::spawn(move || match Database::load(&db_dir) {
        Ok(db) => {
            info!("loaded {} models from {}", db.len(), db_dir.display());
            loader.set_database(db);
        }
        Err(e) => {
            error!("cannot load {}: {e}", db_dir.display());
            loader.set_failed(e.to_string());
        }
    });
    server.run(workers);
    Ok(())
}
