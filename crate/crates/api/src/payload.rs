//! Request and response documents.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use stateseek_core::model::{BuyType, EndReason, EventRecord, PlayerSnapshot, Side};
use stateseek_core::store::QuerySpec;
use stateseek_core::summarize::{Bounds, HeatmapGrid};
use stateseek_core::winprob::SeriesPoint;

#[derive(Debug, Clone, Deserialize)]
pub struct QueryRequest {
    #[serde(flatten)]
    pub spec: QuerySpec,
    /// Opaque cursor from a previous page of the same query.
    #[serde(default)]
    pub cursor: Option<String>,
    #[serde(default)]
    pub page_size: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RoundScore {
    pub ct: u32,
    pub t: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultCard {
    /// Position in the served snapshot; not stable across re-ingests.
    pub state_id: u32,
    pub match_id: String,
    pub round_number: u32,
    pub state_t: f64,
    pub map: String,
    pub date: NaiveDate,
    pub competition_name: String,
    pub ct_team: String,
    pub t_team: String,
    /// Score at the start of the round.
    pub round_score: RoundScore,
    pub ct_buy: BuyType,
    pub t_buy: BuyType,
    pub end_reason: EndReason,
    pub winner: Side,
    pub bomb_plant_t: Option<f64>,
    pub token: String,
    pub token_distance: u32,
    /// Absent when the result set was too large to rank, or the state has no
    /// alive player on a sketched side.
    pub state_distance: Option<f64>,
    pub win_series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QueryPage {
    pub total: usize,
    pub offset: usize,
    pub cards: Vec<ResultCard>,
    pub next_cursor: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct HeatmapRequest {
    #[serde(flatten)]
    pub spec: QuerySpec,
    pub side: Side,
    #[serde(default = "default_resolution")]
    pub resolution: (usize, usize),
}

fn default_resolution() -> (usize, usize) {
    (64, 64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapResponse {
    pub state_count: usize,
    #[serde(flatten)]
    pub grid: HeatmapGrid,
}

#[derive(Debug, Clone, Serialize)]
pub struct FramePayload {
    pub t: f64,
    pub bomb_planted: bool,
    pub players: Vec<PlayerSnapshot>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FramesPayload {
    pub match_id: String,
    pub round_number: u32,
    pub map: String,
    pub frames: Vec<FramePayload>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventsPayload {
    pub match_id: String,
    pub round_number: u32,
    pub kills: Vec<EventRecord>,
    pub grenades: Vec<EventRecord>,
    pub damages: Vec<EventRecord>,
    pub bomb_plants: Vec<EventRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WinProbPayload {
    pub match_id: String,
    pub round_number: u32,
    pub points: Vec<SeriesPoint>,
    pub bomb_plant_t: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSummary {
    pub name: String,
    pub place_count: usize,
    /// Place names in token order.
    pub places: Vec<String>,
    pub state_count: usize,
    pub distinct_tokens: usize,
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapsPayload {
    pub maps: Vec<MapSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeamsPayload {
    pub teams: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HealthPayload {
    pub status: &'static str,
    pub states: usize,
    pub matches: usize,
    pub rounds: usize,
    pub model_loaded: bool,
}
