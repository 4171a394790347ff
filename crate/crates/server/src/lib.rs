//! HTTP front end for the question answering engine.
//!
//! Trees are the `.ged` files of one directory, identified by file stem.
//! Each file is parsed once in the background at startup; the tabulated
//! dataset and engine for a (tree, design) pair are built on first use and
//! then shared read-only by every request.
//!
//! Endpoints: `GET /health`, `GET /trees`, `POST /ask`. Every body is JSON and
//! carries `"version": 1`.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use genagg::graph::{load_graph, KnowledgeGraph};
use genagg::qa::{Answer, AskOptions, Engine, DEFAULT_BUDGET, DEFAULT_K};
use genagg::tabulator::Design;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const API_VERSION: u32 = 1;
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub trees: PathBuf,
    pub design: Design,
    pub budget: usize,
    pub k: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            listen: DEFAULT_LISTEN.parse().expect("valid default address"),
            trees: PathBuf::from("trees"),
            design: Design::SixNF,
            budget: DEFAULT_BUDGET,
            k: DEFAULT_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub id: String,
    pub person_count: usize,
    /// People with no recorded parents, the natural degree sources.
    pub roots: Vec<String>,
    pub designs: Vec<Design>,
}

/// A file in the tree directory that could not be read as GEDCOM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeEntry {
    Loaded(TreeSummary),
    Failed(TreeFailure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreesResponse {
    pub version: u32,
    pub trees: Vec<TreeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Health {
    Loading,
    Ready { trees: usize },
    Degraded { trees: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub version: u32,
    #[serde(flatten)]
    pub health: Health,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AskRequest {
    pub tree_id: String,
    pub question: String,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    /// Person the degree is measured from.
    #[serde(default)]
    pub source: Option<String>,
    /// Overrides the server's default design.
    #[serde(default)]
    pub design: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub version: u32,
    pub tree_id: String,
    pub design: Design,
    pub answer: Answer,
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown tree {0:?}")]
    UnknownTree(String),
    #[error("{0}")]
    Validation(String),
    #[error("bad request body: {0}")]
    Body(#[from] JsonRejection),
    #[error("trees are still loading")]
    Loading,
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub version: u32,
    pub error: ErrorBody,
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownTree(_) => StatusCode::NOT_FOUND,
            ApiError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Body(r) => r.status(),
            ApiError::Loading => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ApiError::UnknownTree(_) => "not_found",
            ApiError::Validation(_) | ApiError::Body(_) => "validation",
            ApiError::Loading => "loading",
            ApiError::Internal(_) => "internal",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorResponse {
            version: API_VERSION,
            error: ErrorBody {
                kind: self.kind().into(),
                message: self.to_string(),
            },
        };
        (self.status(), Json(body)).into_response()
    }
}

struct Tree {
    graph: KnowledgeGraph,
    summary: TreeSummary,
}

#[derive(Default)]
struct Catalog {
    loaded: bool,
    trees: BTreeMap<String, Arc<Tree>>,
    failures: BTreeMap<String, String>,
    /// Set when the directory itself could not be read.
    directory_error: Option<String>,
}

type EngineSlot = Arc<OnceLock<Result<Arc<Engine>, String>>>;

/// Shared server state. Cheap to clone behind an `Arc`.
pub struct AppState {
    config: ServerConfig,
    catalog: RwLock<Catalog>,
    engines: Mutex<HashMap<(String, Design), EngineSlot>>,
}

impl AppState {
    /// State with nothing loaded yet; `/health` reports `loading` until
    /// [`AppState::load`] finishes.
    pub fn new(config: ServerConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            catalog: RwLock::default(),
            engines: Mutex::default(),
        })
    }

    /// Parses every `.ged` file in the configured directory. Blocking.
    pub fn load(&self) {
        let catalog = scan(&self.config.trees);
        for (id, e) in &catalog.failures {
            log::warn!("tree {id}: {e}");
        }
        log::info!("loaded {} trees from {}", catalog.trees.len(), self.config.trees.display());
        *self.catalog.write().expect("catalog lock") = catalog;
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn health(&self) -> Health {
        let catalog = self.catalog.read().expect("catalog lock");
        if !catalog.loaded {
            return Health::Loading;
        }
        let trees = catalog.trees.len();
        if let Some(e) = &catalog.directory_error {
            return Health::Degraded {
                trees,
                message: e.clone(),
            };
        }
        if catalog.failures.is_empty() {
            return Health::Ready { trees };
        }
        let names: Vec<&str> = catalog.failures.keys().map(String::as_str).collect();
        Health::Degraded {
            trees,
            message: format!("{} tree(s) failed to load: {}", names.len(), names.join(", ")),
        }
    }

    /// Loaded trees and failures, ordered by id.
    pub fn list_trees(&self) -> Vec<TreeEntry> {
        let catalog = self.catalog.read().expect("catalog lock");
        let mut out: BTreeMap<&str, TreeEntry> = BTreeMap::new();
        for (id, t) in &catalog.trees {
            out.insert(id, TreeEntry::Loaded(t.summary.clone()));
        }
        for (id, e) in &catalog.failures {
            out.insert(
                id,
                TreeEntry::Failed(TreeFailure {
                    id: id.clone(),
                    error: e.clone(),
                }),
            );
        }
        out.into_values().collect()
    }

    /// The engine for a tree and design, built on first use. Blocking.
    pub fn engine(&self, tree_id: &str, design: Design) -> Result<Arc<Engine>, ApiError> {
        let tree = {
            let catalog = self.catalog.read().expect("catalog lock");
            if !catalog.loaded {
                return Err(ApiError::Loading);
            }
            if let Some(e) = catalog.failures.get(tree_id) {
                return Err(ApiError::Validation(format!("tree {tree_id:?} failed to load: {e}")));
            }
            catalog
                .trees
                .get(tree_id)
                .cloned()
                .ok_or_else(|| ApiError::UnknownTree(tree_id.to_owned()))?
        };
        let slot = self
            .engines
            .lock()
            .expect("engine cache lock")
            .entry((tree_id.to_owned(), design))
            .or_default()
            .clone();
        slot.get_or_init(|| {
            log::info!("tabulating {tree_id} as {design}");
            Engine::new(tree.graph.clone(), design)
                .map(Arc::new)
                .map_err(|e| e.to_string())
        })
        .clone()
        .map_err(ApiError::Internal)
    }

    /// Validates the request and answers it. Blocking.
    pub fn ask(&self, req: &AskRequest) -> Result<AskResponse, ApiError> {
        if req.question.trim().is_empty() {
            return Err(ApiError::Validation("question is empty".into()));
        }
        if req.k == Some(0) {
            return Err(ApiError::Validation("k must be at least 1".into()));
        }
        let design = match &req.design {
            Some(d) => d.parse().map_err(|e| ApiError::Validation(format!("{e}")))?,
            None => self.config.design,
        };
        let engine = self.engine(&req.tree_id, design)?;
        let opts = AskOptions {
            degree: req.degree,
            k: req.k.unwrap_or(self.config.k),
            budget: self.config.budget,
            source: req.source.clone(),
            tables: None,
        };
        Ok(AskResponse {
            version: API_VERSION,
            tree_id: req.tree_id.clone(),
            design,
            answer: engine.answer(&req.question, &opts),
        })
    }
}

fn summarize(id: &str, graph: &KnowledgeGraph) -> TreeSummary {
    TreeSummary {
        id: id.to_owned(),
        person_count: graph.person_count(),
        roots: graph.roots().into_iter().map(str::to_owned).collect(),
        designs: Design::ALL.to_vec(),
    }
}

fn scan(dir: &Path) -> Catalog {
    let mut catalog = Catalog {
        loaded: true,
        ..Default::default()
    };
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) => {
            catalog.directory_error = Some(format!("cannot read {}: {e}", dir.display()));
            return catalog;
        }
    };
    for entry in entries.flatten() {
        let path = entry.path();
        let is_gedcom = path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("ged"));
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if !is_gedcom || !path.is_file() {
            continue;
        }
        let loaded = std::fs::read(&path)
            .map_err(|e| e.to_string())
            .and_then(|bytes| load_graph(&bytes).map_err(|e| e.to_string()));
        match loaded {
            Ok((graph, _)) if graph.is_empty() => {
                catalog.failures.insert(id.to_owned(), "no individuals".into());
            }
            Ok((graph, _)) => {
                let summary = summarize(id, &graph);
                catalog.trees.insert(id.to_owned(), Arc::new(Tree { graph, summary }));
            }
            Err(e) => {
                catalog.failures.insert(id.to_owned(), e);
            }
        }
    }
    catalog
}

async fn health(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        version: API_VERSION,
        health: state.health(),
    })
}

async fn trees(State(state): State<Arc<AppState>>) -> Json<TreesResponse> {
    Json(TreesResponse {
        version: API_VERSION,
        trees: state.list_trees(),
    })
}

async fn ask(
    State(state): State<Arc<AppState>>,
    body: Result<Json<AskRequest>, JsonRejection>,
) -> Result<Json<AskResponse>, ApiError> {
    let Json(req) = body?;
    // Tabulation and answering are CPU-bound.
    tokio::task::spawn_blocking(move || state.ask(&req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map(Json)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/trees", get(trees))
        .route("/ask", post(ask))
        .with_state(state)
}

/// Binds, starts loading trees in the background and serves until the
/// process ends.
pub async fn serve(config: ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let state = AppState::new(config);
    let loader = state.clone();
    tokio::task::spawn_blocking(move || loader.load());
    axum::serve(listener, router(state)).await
}
