//! HTTP JSON service over a [`StateStore`], versioned under `/v1/`.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/v1/query` | query spec, optional `cursor` and `page_size` |
//! | POST | `/v1/heatmap` | query spec plus `side` and `resolution` |
//! | GET | `/v1/rounds/{match_id}/{round_number}/frames` | |
//! | GET | `/v1/rounds/{match_id}/{round_number}/events` | |
//! | GET | `/v1/rounds/{match_id}/{round_number}/winprob` | |
//! | GET | `/v1/maps`, `/v1/maps/{map}/mesh`, `/v1/teams`, `/v1/health` | |
//!
//! The served dataset can be replaced with [`AppState::swap`]; each request
//! works against the dataset that was current when it started.

mod error;
mod payload;

use std::collections::HashMap;
use std::future::Future;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::de::DeserializeOwned;
use stateseek_core::model::MAX_PLAYERS_PER_SIDE;
use stateseek_core::store::{QueryMode, QuerySpec};
use stateseek_core::summarize::heatmap;
use stateseek_core::winprob::{round_series, WinProbModel, WinSeries};
use stateseek_core::{Hit, Side, StateStore};

pub use error::ApiError;
pub use payload::*;

/// A store with its optional win-probability model and per-round series cache.
pub struct Dataset {
    store: StateStore,
    model: Option<WinProbModel>,
    series: Mutex<HashMap<usize, Arc<WinSeries>>>,
}

const SERIES_CACHE_LIMIT: usize = 50_000;

impl Dataset {
    pub fn new(store: StateStore, model: Option<WinProbModel>) -> Self {
        Self {
            store,
            model,
            series: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &StateStore {
        &self.store
    }

    pub fn model(&self) -> Option<&WinProbModel> {
        self.model.as_ref()
    }

    /// Win series of a round, computed on first use.
    pub fn series(&self, round_index: usize) -> Option<Arc<WinSeries>> {
        let model = self.model.as_ref()?;
        if let Some(s) = self.series.lock().unwrap().get(&round_index) {
            return Some(s.clone());
        }
        let s = Arc::new(round_series(model, self.store.round_record(round_index)));
        let mut cache = self.series.lock().unwrap();
        if cache.len() >= SERIES_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(round_index, s.clone());
        Some(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub default_page_size: usize,
    pub max_page_size: usize,
    /// Largest accepted heatmap side length.
    pub max_resolution: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            default_page_size: 20,
            max_page_size: 500,
            max_resolution: 1024,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    current: Arc<RwLock<Arc<Dataset>>>,
    settings: Settings,
}

impl AppState {
    pub fn new(dataset: Dataset) -> Self {
        Self::with_settings(dataset, Settings::default())
    }

    pub fn with_settings(dataset: Dataset, settings: Settings) -> Self {
        Self {
            current: Arc::new(RwLock::new(Arc::new(dataset))),
            settings,
        }
    }

    pub fn dataset(&self) -> Arc<Dataset> {
        self.current.read().unwrap().clone()
    }

    /// Replaces the served dataset. In-flight requests finish on the old one.
    pub fn swap(&self, dataset: Dataset) {
        *self.current.write().unwrap() = Arc::new(dataset);
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/query", post(query))
        .route("/v1/heatmap", post(heatmap_route))
        .route("/v1/rounds/:match_id/:round_number/frames", get(frames))
        .route("/v1/rounds/:match_id/:round_number/events", get(events))
        .route("/v1/rounds/:match_id/:round_number/winprob", get(winprob))
        .route("/v1/maps", get(maps))
        .route("/v1/maps/:map/mesh", get(mesh))
        .route("/v1/teams", get(teams))
        .route("/v1/health", get(health))
        .fallback(|| async { ApiError::not_found("not_found", "no such endpoint") })
        .with_state(state)
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

fn check_sketch(spec: &QuerySpec) -> Result<(), ApiError> {
    if spec.mode == QueryMode::Full {
        for side in Side::BOTH {
            let n = spec.count(side);
            if n > MAX_PLAYERS_PER_SIDE {
                return Err(ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "impossible_sketch",
                    format!("{n} {side} players sketched; at most {MAX_PLAYERS_PER_SIDE} per side"),
                ));
            }
        }
    }
    Ok(())
}

/// Runs CPU-bound work off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn fingerprint(spec: &QuerySpec) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    serde_json::to_string(spec).expect("spec serializes").hash(&mut h);
    h.finish()
}

fn encode_cursor(offset: usize, fp: u64) -> String {
    URL_SAFE_NO_PAD.encode(format!("1:{offset}:{fp:016x}"))
}

fn decode_cursor(cursor: &str, fp: u64) -> Result<usize, ApiError> {
    let bad = || {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_cursor",
            "cursor is not valid for this query",
        )
    };
    let raw = URL_SAFE_NO_PAD.decode(cursor).map_err(|_| bad())?;
    let text = String::from_utf8(raw).map_err(|_| bad())?;
    let mut parts = text.split(':');
    let (Some("1"), Some(offset), Some(f), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(bad());
    };
    if u64::from_str_radix(f, 16).ok() != Some(fp) {
        return Err(bad());
    }
    offset.parse().map_err(|_| bad())
}

async fn query(State(app): State<AppState>, body: Bytes) -> Result<Json<QueryPage>, ApiError> {
    let req: QueryRequest = parse_body(&body)?;
    check_sketch(&req.spec)?;
    let page_size = req.page_size.unwrap_or(app.settings.default_page_size);
    if page_size == 0 || page_size > app.settings.max_page_size {
        return Err(ApiError::malformed(format!(
            "page_size must be within 1..={}",
            app.settings.max_page_size
        )));
    }
    let fp = fingerprint(&req.spec);
    let offset = match &req.cursor {
        Some(c) => decode_cursor(c, fp)?,
        None => 0,
    };
    let data = app.dataset();
    blocking(move || {
        let hits = data.store.query(&req.spec)?;
        let total = hits.len();
        tracing::debug!(map = %req.spec.map, mode = ?req.spec.mode, total, offset, "query");
        let end = (offset + page_size).min(total);
        let cards = hits
            .get(offset.min(total)..end)
            .unwrap_or(&[])
            .iter()
            .map(|h| card(&data, h))
            .collect();
        Ok(Json(QueryPage {
            total,
            offset,
            cards,
            next_cursor: (end < total).then(|| encode_cursor(end, fp)),
        }))
    })
    .await
}

fn card(data: &Dataset, hit: &Hit) -> ResultCard {
    let store = &data.store;
    let round_index = store.round_index(hit.id);
    let meta = &store.rounds()[round_index];
    let state_ref = store.state_ref(hit.id);
    ResultCard {
        state_id: hit.id.0,
        state_t: state_ref.t,
        match_id: state_ref.match_id.to_string(),
        round_number: state_ref.round_number,
        map: meta.map.to_string(),
        date: meta.date,
        competition_name: meta.competition_name.clone(),
        ct_team: meta.ct_team.clone(),
        t_team: meta.t_team.clone(),
        round_score: RoundScore {
            ct: meta.score_ct,
            t: meta.score_t,
        },
        ct_buy: meta.ct_buy,
        t_buy: meta.t_buy,
        end_reason: meta.end_reason,
        winner: meta.winner,
        bomb_plant_t: meta.bomb_plant_t,
        token: store.token(hit.id).render(),
        token_distance: hit.token_distance,
        state_distance: hit.state_distance.filter(|d| d.is_finite()),
        win_series: data
            .series(round_index)
            .map(|s| s.points.clone())
            .unwrap_or_default(),
    }
}

async fn heatmap_route(State(app): State<AppState>, body: Bytes) -> Result<Json<HeatmapResponse>, ApiError> {
    let req: HeatmapRequest = parse_body(&body)?;
    check_sketch(&req.spec)?;
    let (nx, ny) = req.resolution;
    let max = app.settings.max_resolution;
    if nx == 0 || ny == 0 || nx > max || ny > max {
        return Err(ApiError::malformed(format!(
            "resolution must be within 1..={max} per axis"
        )));
    }
    let data = app.dataset();
    blocking(move || {
        let ids: Vec<_> = data.store.query(&req.spec)?.into_iter().map(|h| h.id).collect();
        let grid = heatmap(&data.store, &req.spec.map, &ids, req.side, req.resolution)?;
        Ok(Json(HeatmapResponse {
            state_count: ids.len(),
            grid,
        }))
    })
    .await
}

fn find_round(data: &Dataset, match_id: &str, round_number: u32) -> Result<usize, ApiError> {
    data.store.find_round(match_id, round_number).ok_or_else(|| {
        ApiError::not_found(
            "unknown_round",
            format!("no round {round_number} in match {match_id:?}"),
        )
    })
}

async fn frames(
    State(app): State<AppState>,
    Path((match_id, round_number)): Path<(String, u32)>,
) -> Result<Json<FramesPayload>, ApiError> {
    let data = app.dataset();
    let idx = find_round(&data, &match_id, round_number)?;
    let r = data.store.round_record(idx);
    Ok(Json(FramesPayload {
        match_id,
        round_number,
        map: data.store.rounds()[idx].map.to_string(),
        frames: r
            .frames
            .iter()
            .map(|f| FramePayload {
                t: f.t,
                bomb_planted: f.bomb_planted,
                players: f.players.clone(),
            })
            .collect(),
    }))
}

async fn events(
    State(app): State<AppState>,
    Path((match_id, round_number)): Path<(String, u32)>,
) -> Result<Json<EventsPayload>, ApiError> {
    let data = app.dataset();
    let r = data
        .store
        .round_record(find_round(&data, &match_id, round_number)?);
    Ok(Json(EventsPayload {
        match_id,
        round_number,
        kills: r.kills.clone(),
        grenades: r.grenades.clone(),
        damages: r.damages.clone(),
        bomb_plants: r.bomb_plants.clone(),
    }))
}

async fn winprob(
    State(app): State<AppState>,
    Path((match_id, round_number)): Path<(String, u32)>,
) -> Result<Json<WinProbPayload>, ApiError> {
    let data = app.dataset();
    let idx = find_round(&data, &match_id, round_number)?;
    let series = data.series(idx).ok_or_else(|| {
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "model_unavailable",
            "no win-probability model loaded",
        )
    })?;
    Ok(Json(WinProbPayload {
        match_id,
        round_number,
        points: series.points.clone(),
        bomb_plant_t: series.bomb_plant_t,
    }))
}

async fn maps(State(app): State<AppState>) -> Json<MapsPayload> {
    let data = app.dataset();
    let store = &data.store;
    let maps = store
        .map_names()
        .into_iter()
        .filter_map(|name| {
            let idx = store.map_index(name)?;
            let mesh = idx.mesh();
            Some(MapSummary {
                name: name.to_string(),
                place_count: mesh.place_count(),
                places: (0..mesh.place_count() as u32)
                    .filter_map(|i| mesh.place(i).map(|p| p.name.clone()))
                    .collect(),
                state_count: idx.state_count(),
                distinct_tokens: idx.distinct_tokens(),
                bounds: mesh.extent().map(Into::into),
            })
        })
        .collect();
    Json(MapsPayload { maps })
}

async fn mesh(
    State(app): State<AppState>,
    Path(map): Path<String>,
) -> Result<Json<stateseek_core::navmesh::MeshDocument>, ApiError> {
    let data = app.dataset();
    let mesh = data
        .store
        .mesh(&map)
        .ok_or_else(|| ApiError::not_found("unknown_map", format!("unknown map {map:?}")))?;
    Ok(Json(mesh.to_document()))
}

async fn teams(State(app): State<AppState>) -> Json<TeamsPayload> {
    Json(TeamsPayload {
        teams: app.dataset().store.teams().to_vec(),
    })
}

async fn health(State(app): State<AppState>) -> Json<HealthPayload> {
    let data = app.dataset();
    Json(HealthPayload {
        status: "ok",
        states: data.store.len(),
        matches: data.store.matches().len(),
        rounds: data.store.round_count(),
        model_loaded: data.model.is_some(),
    })
}
