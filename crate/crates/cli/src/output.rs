//! Query result rows, table rendering and heatmap images.

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use stateseek_core::summarize::HeatmapGrid;
use stateseek_core::{Hit, StateStore};

/// One result, identical in table and JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rank: usize,
    pub state_id: u32,
    pub match_id: String,
    pub round: u32,
    pub t: f64,
    pub token: String,
    pub token_distance: u32,
    pub state_distance: Option<f64>,
    pub date: String,
    pub competition: String,
    pub ct_team: String,
    pub t_team: String,
    pub score_ct: u32,
    pub score_t: u32,
    pub ct_buy: String,
    pub t_buy: String,
    pub end_reason: String,
    pub winner: String,
}

impl ResultRow {
    pub fn new(store: &StateStore, rank: usize, hit: &Hit) -> Self {
        let meta = store.round_meta(hit.id);
        let r = store.state_ref(hit.id);
        Self {
            rank,
            state_id: hit.id.0,
            match_id: r.match_id.to_string(),
            round: r.round_number,
            t: r.t,
            token: store.token(hit.id).render(),
            token_distance: hit.token_distance,
            state_distance: hit.state_distance.filter(|d| d.is_finite()),
            date: meta.date.to_string(),
            competition: meta.competition_name.clone(),
            ct_team: meta.ct_team.clone(),
            t_team: meta.t_team.clone(),
            score_ct: meta.score_ct,
            score_t: meta.score_t,
            ct_buy: meta.ct_buy.to_string(),
            t_buy: meta.t_buy.to_string(),
            end_reason: meta.end_reason.to_string(),
            winner: meta.winner.to_string(),
        }
    }

    fn cells(&self) -> [String; 18] {
        [
            self.rank.to_string(),
            self.state_id.to_string(),
            self.match_id.clone(),
            self.round.to_string(),
            self.t.to_string(),
            self.token.clone(),
            self.token_distance.to_string(),
            self.state_distance
                .map(|d| d.to_string())
                .unwrap_or_else(|| "-".into()),
            self.date.clone(),
            self.competition.clone(),
            self.ct_team.clone(),
            self.t_team.clone(),
            self.score_ct.to_string(),
            self.score_t.to_string(),
            self.ct_buy.clone(),
            self.t_buy.clone(),
            self.end_reason.clone(),
            self.winner.clone(),
        ]
    }
}

pub const COLUMNS: [&str; 18] = [
    "rank",
    "state_id",
    "match_id",
    "round",
    "t",
    "token",
    "token_distance",
    "state_distance",
    "date",
    "competition",
    "ct_team",
    "t_team",
    "score_ct",
    "score_t",
    "ct_buy",
    "t_buy",
    "end_reason",
    "winner",
];

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryOutput {
    pub total: usize,
    pub results: Vec<ResultRow>,
}

/// Tab-separated, header first. Floats print with shortest round-trip form.
pub fn table(rows: &[ResultRow]) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.cells().join("\t"));
        out.push('\n');
    }
    out
}

/// One pixel per cell; image row 0 is the grid's top (largest y).
pub fn heatmap_png(grid: &HeatmapGrid) -> RgbImage {
    let (nx, ny) = grid.resolution;
    RgbImage::from_fn(nx as u32, ny as u32, |x, y| {
        let v = grid.cell(x as usize, ny - 1 - y as usize);
        ramp(v)
    })
}

/// Black through red and yellow to white.
fn ramp(v: f64) -> Rgb<u8> {
    let v = v.clamp(0.0, 1.0) * 3.0;
    let c = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    Rgb([c(v), c(v - 1.0), c(v - 2.0)])
}
