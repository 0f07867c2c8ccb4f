//! HTTP/JSON matchplay advisor: live sessions, recommended targets, Q-value
//! heat maps and what-if queries over solved equilibrium tables.
//!
//! Routes are documented in `api.schema.json` at the crate root.

pub mod catalog;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use darts_core::{OutcomeLabel, Target};

pub use catalog::{Advice, Aim, Catalog};
pub use session::{DartRecord, MatchEvent, MatchSession, PlayState};

/// Heat maps are downsampled to at most this many cells per side unless a
/// factor is requested.
pub const HEATMAP_MAX_SIDE: usize = 64;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, what)
    }

    fn conflict(what: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, what)
    }

    fn unprocessable(what: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::unprocessable(r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Session {
    pairing: usize,
    swapped: bool,
    players: [String; 2],
    game: MatchSession,
}

pub struct AppState {
    catalog: Arc<Catalog>,
    sessions: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(catalog: Catalog) -> Arc<Self> {
        Arc::new(AppState { catalog: Arc::new(catalog), sessions: Mutex::default(), next_id: AtomicU64::new(1) })
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        id.parse::<u64>()
            .ok()
            .and_then(|k| self.sessions.lock().unwrap().get(&k).cloned())
            .ok_or_else(|| ApiError::not_found(format!("unknown session '{id}'")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateSession {
    pub solution_a: String,
    pub solution_b: String,
    #[serde(default = "one")]
    pub legs: u32,
    /// Leg start score; defaults to the solution's.
    pub start: Option<u32>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub id: String,
    pub players: [String; 2],
    pub solution: String,
    pub legs: u32,
    pub start: u32,
    pub leg: u32,
    pub legs_won: [u32; 2],
    pub winner: Option<usize>,
    pub state: PlayState,
    pub history: Vec<DartRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DartInput {
    pub label: Option<String>,
    pub point: Option<Target>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DartResponse {
    pub session: SessionView,
    pub events: Vec<MatchEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Recommendation {
    pub state: PlayState,
    pub equilibrium: Aim,
    /// Equilibrium probability that the thrower wins the leg.
    pub win_probability: f64,
    pub non_strategic: Aim,
}

#[derive(Debug, Deserialize)]
pub struct HeatmapQuery {
    pub downsample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeatmapView {
    pub state: PlayState,
    /// Thrower's value under its non-strategic policy against the
    /// equilibrium opponent.
    pub baseline: f64,
    pub max_delta: f64,
    pub argmax: Aim,
    pub downsample: usize,
    pub width: usize,
    pub height: usize,
    /// Cell centres in millimetres, columns then rows.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Row-major `height x width` gains over the baseline; each cell holds
    /// the largest gain among the grid targets it covers, `null` if none.
    pub delta: Vec<Option<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlayerInfo {
    pub id: String,
    pub content_hash: String,
    pub cell_size: f64,
    pub targets: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionInfo {
    pub id: String,
    pub player_a: String,
    pub player_b: String,
    pub start: u32,
    pub rel_tol: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionCatalog {
    pub players: Vec<PlayerInfo>,
    pub solutions: Vec<SolutionInfo>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/board", get(board))
        .route("/solutions", get(solutions))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/recommendation", get(recommendation))
        .route("/sessions/{id}/heatmap", get(heatmap))
        .route("/sessions/{id}/dart", post(dart))
        .route("/sessions/{id}/whatif", post(whatif))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(catalog: Catalog, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(catalog))).await
}

fn view(id: &str, cat: &Catalog, s: &Session) -> SessionView {
    let g = &s.game;
    SessionView {
        id: id.to_string(),
        players: s.players.clone(),
        solution: cat.pairings[s.pairing].id.clone(),
        legs: g.legs,
        start: g.start,
        leg: g.leg,
        legs_won: g.legs_won,
        winner: g.winner,
        state: g.play_state(),
        history: g.history.clone(),
    }
}

/// The recommendation at `state`, or 422 if the solution does not cover it.
pub fn recommend(cat: &Catalog, pairing: usize, swapped: bool, state: PlayState) -> ApiResult<Recommendation> {
    let bad = || ApiError::unprocessable(format!("state {state:?} is not covered by the solution"));
    if state.to_throw > 1 {
        return Err(bad());
    }
    let advice = cat.advise(pairing, state.to_solution(swapped)).ok_or_else(bad)?;
    Ok(Recommendation {
        state,
        equilibrium: advice.equilibrium,
        win_probability: advice.win_probability,
        non_strategic: advice.non_strategic,
    })
}

async fn board(State(app): State<Arc<AppState>>) -> Json<darts_core::BoardGeometry> {
    Json(app.catalog.geometry.clone())
}

async fn solutions(State(app): State<Arc<AppState>>) -> Json<SolutionCatalog> {
    let cat = &app.catalog;
    Json(SolutionCatalog {
        players: cat
            .players
            .iter()
            .map(|p| PlayerInfo {
                id: p.id.clone(),
                content_hash: p.hash.clone(),
                cell_size: p.hits.grid().cell_size(),
                targets: p.hits.len(),
            })
            .collect(),
        solutions: cat
            .pairings
            .iter()
            .map(|p| SolutionInfo {
                id: p.id.clone(),
                player_a: cat.players[p.players[0]].id.clone(),
                player_b: cat.players[p.players[1]].id.clone(),
                start: p.sol.start(),
                rel_tol: p.sol.rel_tol,
            })
            .collect(),
    })
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let Json(req) = body?;
    let cat = &app.catalog;
    let player = |id: &str| cat.player(id).ok_or_else(|| ApiError::not_found(format!("unknown solution '{id}'")));
    let (a, b) = (player(&req.solution_a)?, player(&req.solution_b)?);
    let (pairing, swapped) = cat.find_pairing(a, b).ok_or_else(|| {
        ApiError::not_found(format!("no equilibrium solution for '{}' vs '{}'", req.solution_a, req.solution_b))
    })?;
    if req.legs % 2 == 0 || req.legs > 1001 {
        return Err(ApiError::unprocessable("legs must be odd and at most 1001"));
    }
    let solved = cat.pairings[pairing].sol.start();
    let start = req.start.unwrap_or(solved);
    if !(2..=solved).contains(&start) {
        return Err(ApiError::unprocessable(format!("start must lie in 2..={solved}")));
    }
    let session = Session {
        pairing,
        swapped,
        players: [req.solution_a, req.solution_b],
        game: MatchSession::new(req.legs, start),
    };
    let id = app.next_id.fetch_add(1, Ordering::Relaxed);
    let out = view(&id.to_string(), cat, &session);
    app.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(out)))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let s = app.session(&id)?;
    let s = s.lock().unwrap();
    Ok(Json(view(&id, &app.catalog, &s)))
}

fn live(s: &Session) -> ApiResult<PlayState> {
    if s.game.is_over() {
        return Err(ApiError::conflict("match is complete"));
    }
    Ok(s.game.play_state())
}

async fn recommendation(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Recommendation>> {
    let s = app.session(&id)?;
    let s = s.lock().unwrap();
    recommend(&app.catalog, s.pairing, s.swapped, live(&s)?).map(Json)
}

async fn whatif(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<PlayState>, JsonRejection>,
) -> ApiResult<Json<Recommendation>> {
    let s = app.session(&id)?;
    let Json(state) = body?;
    let (pairing, swapped) = {
        let s = s.lock().unwrap();
        (s.pairing, s.swapped)
    };
    recommend(&app.catalog, pairing, swapped, state).map(Json)
}

async fn dart(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<DartInput>, JsonRejection>,
) -> ApiResult<Json<DartResponse>> {
    let s = app.session(&id)?;
    let Json(input) = body?;
    let (label, point) = match (input.label, input.point) {
        (Some(l), None) => {
            let label = l.parse::<OutcomeLabel>().map_err(|e| ApiError::unprocessable(e.to_string()))?;
            (label, None)
        }
        (None, Some(p)) if p.x.is_finite() && p.y.is_finite() => (app.catalog.geometry.classify_target(p), Some(p)),
        (None, Some(_)) => return Err(ApiError::unprocessable("landing point must be finite")),
        _ => return Err(ApiError::unprocessable("give exactly one of 'label' or 'point'")),
    };
    let mut s = s.lock().unwrap();
    let events = s.game.apply(label, point).map_err(|_| ApiError::conflict("match is complete"))?;
    Ok(Json(DartResponse { session: view(&id, &app.catalog, &s), events }))
}

async fn heatmap(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HeatmapQuery>,
) -> ApiResult<Json<HeatmapView>> {
    let s = app.session(&id)?;
    let (pairing, swapped, state) = {
        let s = s.lock().unwrap();
        (s.pairing, s.swapped, live(&s)?)
    };
    if q.downsample == Some(0) {
        return Err(ApiError::unprocessable("downsample must be positive"));
    }
    let cat = app.catalog.clone();
    tokio::task::spawn_blocking(move || build_heatmap(&cat, pairing, swapped, state, q.downsample))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map(Json)
}

fn build_heatmap(
    cat: &Catalog,
    pairing: usize,
    swapped: bool,
    state: PlayState,
    downsample: Option<usize>,
) -> ApiResult<HeatmapView> {
    let ss = state.to_solution(swapped);
    let h = cat.heatmap(pairing, ss).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let hits = cat.hits(pairing, ss.thrower);
    let cell = hits.grid().cell_size();
    let ij: Vec<(i64, i64)> =
        h.targets.iter().map(|t| ((t.x / cell).round() as i64, (t.y / cell).round() as i64)).collect();
    let (x0, x1) = (ij.iter().map(|p| p.0).min().unwrap(), ij.iter().map(|p| p.0).max().unwrap());
    let (y0, y1) = (ij.iter().map(|p| p.1).min().unwrap(), ij.iter().map(|p| p.1).max().unwrap());
    let side = (x1 - x0 + 1).max(y1 - y0 + 1) as usize;
    let k = downsample.unwrap_or_else(|| side.div_ceil(HEATMAP_MAX_SIDE));
    let width = ((x1 - x0) as usize) / k + 1;
    let height = ((y1 - y0) as usize) / k + 1;
    let mut delta: Vec<Option<f64>> = vec![None; width * height];
    for (&(i, j), &d) in ij.iter().zip(&h.delta) {
        let c = ((j - y0) as usize / k) * width + (i - x0) as usize / k;
        delta[c] = Some(delta[c].map_or(d, |v: f64| v.max(d)));
    }
    let centre = |lo: i64, n: usize, hi: i64| -> Vec<f64> {
        (0..n)
            .map(|c| {
                let a = lo + (c * k) as i64;
                let b = (a + k as i64 - 1).min(hi);
                (a + b) as f64 * 0.5 * cell
            })
            .collect()
    };
    let best = h.argmax();
    let target = h.targets[best];
    Ok(HeatmapView {
        state,
        baseline: h.baseline,
        max_delta: h.max_delta(),
        argmax: Aim { action: best, target, label: cat.geometry.classify_target(target) },
        downsample: k,
        width,
        height,
        x: centre(x0, width, x1),
        y: centre(y0, height, y1),
        delta,
    })
}
