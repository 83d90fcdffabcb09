//! HTTP JSON API over a trained tag model.
//!
//! | route          | purpose                                               |
//! |----------------|-------------------------------------------------------|
//! | `GET /model`   | attribute and tag names, tag prevalence, limits       |
//! | `POST /solve`  | top-k designs from any solver, as the library returns |
//! | `POST /score`  | exact score, per-tag breakdown and rank of one design |
//!
//! Solves run on the blocking pool. Errors are JSON objects with a `kind` and a
//! `message`; 400 marks malformed requests, 422 parameters outside a cap, and 503
//! a missing model or an exhausted time budget.

pub mod api;
pub mod error;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tagmax_core::oracle::{rank_of_with, NaiveConfig, DEFAULT_NAIVE_CAP};
use tagmax_core::{solve, Budget, Model, Product, Scorer, SolveOptions};
use tower_http::cors::{Any, CorsLayer};

pub use api::{ModelInfo, ScoreRequest, ScoreResponse, SolveRequest, TagSpec};
pub use error::ApiError;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Largest attribute count for exhaustive solving and ranking.
    pub naive_cap: usize,
    /// Wall-clock budget per request; `None` means unlimited.
    pub timeout: Option<Duration>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            naive_cap: DEFAULT_NAIVE_CAP,
            timeout: Some(Duration::from_secs(30)),
        }
    }
}

/// Shared state: the configuration and the model once it is loaded.
#[derive(Clone, Default)]
pub struct AppState {
    model: Arc<RwLock<Option<Arc<Model>>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            model: Arc::default(),
            config: Arc::new(config),
        }
    }

    pub fn with_model(model: Model, config: ServiceConfig) -> Self {
        let state = Self::new(config);
        state.set_model(model);
        state
    }

    pub fn set_model(&self, model: Model) {
        *self.model.write().expect("model lock poisoned") = Some(Arc::new(model));
    }

    fn model(&self) -> Result<Arc<Model>, ApiError> {
        self.model
            .read()
            .expect("model lock poisoned")
            .clone()
            .ok_or_else(ApiError::no_model)
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/model", get(model_info))
        .route("/solve", post(solve_handler))
        .route("/score", post(score_handler))
        .fallback(not_found)
        .layer(cors)
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, state).await
}

pub async fn serve_on(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request("malformed_request", e.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn model_info(State(state): State<AppState>) -> Result<Json<ModelInfo>, ApiError> {
    let model = state.model()?;
    Ok(Json(ModelInfo::new(&model, state.config.naive_cap)))
}

async fn solve_handler(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let model = state.model()?;
    let req: SolveRequest = parse_body(&body)?;
    let query = req.query(&model)?;
    let config = req.config(state.config.naive_cap);
    let options = SolveOptions {
        trace: req.trace,
        budget: Budget::from_timeout(state.config.timeout),
    };
    let top = blocking(move || Ok(solve(&model, &query, &config, &options)?)).await?;
    Ok(Json(top).into_response())
}

async fn score_handler(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<ScoreResponse>, ApiError> {
    let model = state.model()?;
    let req: ScoreRequest = parse_body(&body)?;
    let query = req.query(&model)?;
    let bits: Product = req
        .bits
        .parse()
        .map_err(|e: tagmax_core::Error| ApiError::bad_request("invalid_bits", e.to_string()))?;
    if bits.len() != model.m() {
        return Err(ApiError::bad_request(
            "invalid_bits",
            format!("expected {} bits, got {}", model.m(), bits.len()),
        ));
    }
    let cap = state.config.naive_cap;
    let budget = Budget::from_timeout(state.config.timeout);
    blocking(move || {
        let product = Scorer::new(&model, &query)?.ranked(bits);
        let rank = if model.m() <= cap {
            Some(rank_of_with(
                &model,
                &query,
                &bits,
                &NaiveConfig { cap },
                &budget,
            )?)
        } else {
            None
        };
        Ok(Json(ScoreResponse {
            product,
            rank,
            space: 2f64.powi(model.m() as i32),
        }))
    })
    .await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}
