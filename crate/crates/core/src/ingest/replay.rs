//! The JSON replay format and its conversion to match records.
//!
//! A document holds one match. Invalid rounds are rejected individually and
//! reported; the rest of the match is still ingested.

use std::collections::HashMap;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::buy::BuyThresholds;
use crate::model::{
    BuyType, EndReason, EventKind, EventRecord, GameState, MatchRecord, PlayerSnapshot, RoundRecord,
    RoundRef, Side, Vec3, MAX_PLAYERS_PER_SIDE,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid match {match_id}: {reason}")]
    InvalidMatch { match_id: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayDocument {
    pub match_id: String,
    pub date: NaiveDate,
    pub competition_name: String,
    pub map: String,
    pub teams: TeamsDocument,
    pub rounds: Vec<RoundDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamsDocument {
    pub ct_start: String,
    pub t_start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDocument {
    pub round_number: u32,
    pub winner: Side,
    pub end_reason: EndReason,
    pub score_ct: u32,
    pub score_t: u32,
    /// Derived from the first frame's equipment when absent.
    #[serde(default)]
    pub ct_buy: Option<BuyType>,
    #[serde(default)]
    pub t_buy: Option<BuyType>,
    pub frames: Vec<FrameDocument>,
    #[serde(default)]
    pub kills: Vec<EventDocument>,
    #[serde(default)]
    pub grenades: Vec<EventDocument>,
    #[serde(default)]
    pub damages: Vec<EventDocument>,
    #[serde(default)]
    pub bomb_plants: Vec<EventDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDocument {
    pub t: f64,
    pub players: Vec<PlayerDocument>,
    pub bomb_planted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerDocument {
    pub player_id: String,
    pub side: Side,
    pub position: Vec3,
    pub hp: i64,
    pub armor: i64,
    pub equipment_value: i64,
    pub grenade_count: i64,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDocument {
    pub t: f64,
    pub actor_id: String,
    #[serde(default)]
    pub victim_id: Option<String>,
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub buy_thresholds: BuyThresholds,
    /// Require round numbers `1..=n` in order. When off, round numbers only
    /// need to increase (documents written after partial ingest have gaps).
    pub require_contiguous_rounds: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            buy_thresholds: BuyThresholds::default(),
            require_contiguous_rounds: true,
        }
    }
}

/// A rejected round and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundDiagnostic {
    pub match_id: String,
    pub round_number: u32,
    pub message: String,
}

impl std::fmt::Display for RoundDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} round {}: {}",
            self.match_id, self.round_number, self.message
        )
    }
}

#[derive(Debug, Clone)]
pub struct ParsedMatch {
    pub record: MatchRecord,
    pub rejected: Vec<RoundDiagnostic>,
}

pub fn parse_match_json(text: &str, opts: &ParseOptions) -> Result<ParsedMatch, IngestError> {
    let doc: ReplayDocument = serde_json::from_str(text).map_err(|e| IngestError::Schema(e.to_string()))?;
    parse_match(doc, opts)
}

#[derive(Default)]
struct Interner(HashMap<String, Arc<str>>);

impl Interner {
    fn get(&mut self, s: &str) -> Arc<str> {
        if let Some(a) = self.0.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        self.0.insert(s.to_owned(), a.clone());
        a
    }
}

pub fn parse_match(doc: ReplayDocument, opts: &ParseOptions) -> Result<ParsedMatch, IngestError> {
    let invalid = |reason: String| IngestError::InvalidMatch {
        match_id: doc.match_id.clone(),
        reason,
    };
    if doc.match_id.is_empty() {
        return Err(invalid("empty match_id".into()));
    }
    if doc.map.is_empty() {
        return Err(invalid("empty map".into()));
    }
    for (i, r) in doc.rounds.iter().enumerate() {
        if opts.require_contiguous_rounds {
            if r.round_number != i as u32 + 1 {
                return Err(invalid(format!(
                    "round numbers must be contiguous from 1; found {} at position {}",
                    r.round_number,
                    i + 1
                )));
            }
        } else if r.round_number == 0 || (i > 0 && r.round_number <= doc.rounds[i - 1].round_number) {
            return Err(invalid(format!(
                "round numbers must be positive and increasing; found {}",
                r.round_number
            )));
        }
    }

    let match_id: Arc<str> = Arc::from(doc.match_id.as_str());
    let map: Arc<str> = Arc::from(doc.map.as_str());
    let mut interner = Interner::default();
    let mut rounds = Vec::with_capacity(doc.rounds.len());
    let mut rejected = Vec::new();
    for rd in &doc.rounds {
        match parse_round(rd, &match_id, &map, &mut interner, opts) {
            Ok(r) => rounds.push(r),
            Err(message) => rejected.push(RoundDiagnostic {
                match_id: doc.match_id.clone(),
                round_number: rd.round_number,
                message,
            }),
        }
    }
    Ok(ParsedMatch {
        record: MatchRecord {
            match_id,
            date: doc.date,
            competition_name: doc.competition_name,
            team_ct_start: doc.teams.ct_start,
            team_t_start: doc.teams.t_start,
            map,
            rounds,
        },
        rejected,
    })
}

fn parse_round(
    rd: &RoundDocument,
    match_id: &Arc<str>,
    map: &Arc<str>,
    interner: &mut Interner,
    opts: &ParseOptions,
) -> Result<RoundRecord, String> {
    if rd.end_reason.winner() != rd.winner {
        return Err(format!(
            "winner/end_reason mismatch: {} cannot win by {}",
            rd.winner, rd.end_reason
        ));
    }
    if rd.frames.is_empty() {
        return Err("round has no frames".into());
    }
    for w in rd.frames.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(format!(
                "non-monotonic frame times: {} followed by {}",
                w[0].t, w[1].t
            ));
        }
    }
    let first_t = rd.frames[0].t;
    let last_t = rd.frames[rd.frames.len() - 1].t;
    if !(first_t >= 0.0) || !last_t.is_finite() {
        return Err(format!("frame time out of range: {first_t}"));
    }

    let round_ref = RoundRef {
        match_id: match_id.clone(),
        round_number: rd.round_number,
    };
    let mut frames: Vec<GameState> = Vec::with_capacity(rd.frames.len());
    for fd in &rd.frames {
        if let Some(prev) = frames.last() {
            // One state per second: keep the earliest frame of each window.
            if fd.t - prev.t < 1.0 - 1e-9 {
                continue;
            }
        }
        frames.push(GameState {
            map: map.clone(),
            round_ref: round_ref.clone(),
            t: fd.t,
            players: parse_players(fd, interner)?,
            bomb_planted: fd.bomb_planted,
        });
    }

    let mut events = |docs: &[EventDocument], kind: EventKind| -> Result<Vec<EventRecord>, String> {
        let mut out = Vec::with_capacity(docs.len());
        for e in docs {
            if !(e.t >= 0.0 && e.t <= last_t) {
                return Err(format!(
                    "{kind:?} event at t={} outside round duration [0, {last_t}]",
                    e.t
                ));
            }
            out.push(EventRecord {
                kind,
                t: e.t,
                actor_id: interner.get(&e.actor_id),
                victim_id: e.victim_id.as_deref().map(|v| interner.get(v)),
                position: e.position,
            });
        }
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(out)
    };
    let kills = events(&rd.kills, EventKind::Kill)?;
    let grenades = events(&rd.grenades, EventKind::Grenade)?;
    let damages = events(&rd.damages, EventKind::Damage)?;
    let bomb_plants = events(&rd.bomb_plants, EventKind::BombPlant)?;

    let side_total = |side: Side| -> u32 {
        frames[0]
            .players
            .iter()
            .filter(|p| p.side == side)
            .map(|p| p.equipment_value)
            .sum()
    };
    let ct_buy = rd.ct_buy.unwrap_or_else(|| {
        opts.buy_thresholds
            .classify(side_total(Side::CT), rd.round_number)
    });
    let t_buy = rd
        .t_buy
        .unwrap_or_else(|| opts.buy_thresholds.classify(side_total(Side::T), rd.round_number));

    Ok(RoundRecord {
        match_id: match_id.clone(),
        round_number: rd.round_number,
        winner: rd.winner,
        end_reason: rd.end_reason,
        ct_buy,
        t_buy,
        score_ct: rd.score_ct,
        score_t: rd.score_t,
        bomb_plant_t: bomb_plants.first().map(|e| e.t),
        frames,
        kills,
        grenades,
        damages,
        bomb_plants,
    })
}

fn parse_players(fd: &FrameDocument, interner: &mut Interner) -> Result<Vec<PlayerSnapshot>, String> {
    let mut per_side = [0usize; 2];
    let mut out = Vec::with_capacity(fd.players.len());
    for p in &fd.players {
        let bad = |what: &str| format!("invalid player snapshot at t={}: {} {what}", fd.t, p.player_id);
        if !(0..=100).contains(&p.hp) {
            return Err(bad("hp outside 0..=100"));
        }
        if p.alive != (p.hp > 0) {
            return Err(bad("alive flag disagrees with hp"));
        }
        if !(0..=u16::MAX as i64).contains(&p.armor) {
            return Err(bad("armor out of range"));
        }
        if !(0..=u32::MAX as i64).contains(&p.equipment_value) {
            return Err(bad("equipment value out of range"));
        }
        if !(0..=4).contains(&p.grenade_count) {
            return Err(bad("grenade count outside 0..=4"));
        }
        let pos = p.position;
        if !(pos.x.is_finite() && pos.y.is_finite() && pos.z.is_finite()) {
            return Err(bad("non-finite position"));
        }
        let slot = match p.side {
            Side::T => 0,
            Side::CT => 1,
        };
        per_side[slot] += 1;
        if per_side[slot] > MAX_PLAYERS_PER_SIDE {
            return Err(format!(
                "more than {MAX_PLAYERS_PER_SIDE} {} players at t={}",
                p.side, fd.t
            ));
        }
        out.push(PlayerSnapshot {
            player_id: interner.get(&p.player_id),
            side: p.side,
            position: pos,
            hp: p.hp as u8,
            armor: p.armor as u16,
            equipment_value: p.equipment_value as u32,
            grenade_count: p.grenade_count as u8,
            alive: p.alive,
        });
    }
    Ok(out)
}

fn render_event(e: &EventRecord) -> EventDocument {
    EventDocument {
        t: e.t,
        actor_id: e.actor_id.to_string(),
        victim_id: e.victim_id.as_ref().map(|v| v.to_string()),
        position: e.position,
    }
}

/// Inverse of [`parse_match`] for already-valid records.
pub fn render_match(m: &MatchRecord) -> ReplayDocument {
    ReplayDocument {
        match_id: m.match_id.to_string(),
        date: m.date,
        competition_name: m.competition_name.clone(),
        map: m.map.to_string(),
        teams: TeamsDocument {
            ct_start: m.team_ct_start.clone(),
            t_start: m.team_t_start.clone(),
        },
        rounds: m
            .rounds
            .iter()
            .map(|r| RoundDocument {
                round_number: r.round_number,
                winner: r.winner,
                end_reason: r.end_reason,
                score_ct: r.score_ct,
                score_t: r.score_t,
                ct_buy: Some(r.ct_buy),
                t_buy: Some(r.t_buy),
                frames: r
                    .frames
                    .iter()
                    .map(|f| FrameDocument {
                        t: f.t,
                        bomb_planted: f.bomb_planted,
                        players: f
                            .players
                            .iter()
                            .map(|p| PlayerDocument {
                                player_id: p.player_id.to_string(),
                                side: p.side,
                                position: p.position,
                                hp: p.hp as i64,
                                armor: p.armor as i64,
                                equipment_value: p.equipment_value as i64,
                                grenade_count: p.grenade_count as i64,
                                alive: p.alive,
                            })
                            .collect(),
                    })
                    .collect(),
                kills: r.kills.iter().map(render_event).collect(),
                grenades: r.grenades.iter().map(render_event).collect(),
                damages: r.damages.iter().map(render_event).collect(),
                bomb_plants: r.bomb_plants.iter().map(render_event).collect(),
            })
            .collect(),
    }
}
