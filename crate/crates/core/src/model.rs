//! Match, round and frame records shared by ingest, indexing and the service layer.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Round time before the bomb is planted, in seconds.
pub const ROUND_SECONDS: f64 = 115.0;
/// Bomb timer after a plant, in seconds.
pub const BOMB_TIMER_SECONDS: f64 = 35.0;
/// Players per side in a standard match.
pub const MAX_PLAYERS_PER_SIDE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "T")]
    T,
    #[serde(rename = "CT")]
    CT,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::T, Side::CT];

    pub fn other(self) -> Side {
        match self {
            Side::T => Side::CT,
            Side::CT => Side::T,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::T => "T",
            Side::CT => "CT",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "T" => Ok(Side::T),
            "CT" => Ok(Side::CT),
            other => Err(format!("unknown side {other:?}, expected T or CT")),
        }
    }
}

/// A position in game units. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerSnapshot {
    pub player_id: Arc<str>,
    pub side: Side,
    pub position: Vec3,
    pub hp: u8,
    pub armor: u16,
    pub equipment_value: u32,
    pub grenade_count: u8,
    pub alive: bool,
}

/// Identifies a round across the corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoundRef {
    pub match_id: Arc<str>,
    pub round_number: u32,
}

/// One snapshot of a round, sampled at one frame per second.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub map: Arc<str>,
    pub round_ref: RoundRef,
    pub t: f64,
    pub players: Vec<PlayerSnapshot>,
    pub bomb_planted: bool,
}

impl GameState {
    /// Alive players of `side`.
    pub fn alive(&self, side: Side) -> impl Iterator<Item = &PlayerSnapshot> + '_ {
        self.players.iter().filter(move |p| p.alive && p.side == side)
    }

    pub fn alive_count(&self, side: Side) -> usize {
        self.alive(side).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    /// The T side was eliminated.
    EliminationT,
    /// The CT side was eliminated.
    EliminationCt,
    BombExploded,
    BombDefused,
    TimeExpired,
}

impl EndReason {
    pub const ALL: [EndReason; 5] = [
        EndReason::EliminationT,
        EndReason::EliminationCt,
        EndReason::BombExploded,
        EndReason::BombDefused,
        EndReason::TimeExpired,
    ];

    /// The only side that can win a round ending this way.
    pub fn winner(self) -> Side {
        match self {
            EndReason::EliminationT | EndReason::BombDefused | EndReason::TimeExpired => Side::CT,
            EndReason::EliminationCt | EndReason::BombExploded => Side::T,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::EliminationT => "elimination_t",
            EndReason::EliminationCt => "elimination_ct",
            EndReason::BombExploded => "bomb_exploded",
            EndReason::BombDefused => "bomb_defused",
            EndReason::TimeExpired => "time_expired",
        }
    }
}

impl fmt::Display for EndReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuyType {
    Pistol,
    Eco,
    SemiBuy,
    FullBuy,
}

impl BuyType {
    pub fn as_str(self) -> &'static str {
        match self {
            BuyType::Pistol => "pistol",
            BuyType::Eco => "eco",
            BuyType::SemiBuy => "semi_buy",
            BuyType::FullBuy => "full_buy",
        }
    }
}

impl fmt::Display for BuyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Kill,
    Grenade,
    Damage,
    BombPlant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kind: EventKind,
    pub t: f64,
    pub actor_id: Arc<str>,
    pub victim_id: Option<Arc<str>>,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub match_id: Arc<str>,
    pub round_number: u32,
    pub winner: Side,
    pub end_reason: EndReason,
    pub ct_buy: BuyType,
    pub t_buy: BuyType,
    /// Rounds won so far by the team on each side, before this round.
    pub score_ct: u32,
    pub score_t: u32,
    pub bomb_plant_t: Option<f64>,
    pub frames: Vec<GameState>,
    pub kills: Vec<EventRecord>,
    pub grenades: Vec<EventRecord>,
    pub damages: Vec<EventRecord>,
    pub bomb_plants: Vec<EventRecord>,
}

impl RoundRecord {
    pub fn round_ref(&self) -> RoundRef {
        RoundRef {
            match_id: self.match_id.clone(),
            round_number: self.round_number,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub match_id: Arc<str>,
    pub date: NaiveDate,
    pub competition_name: String,
    pub team_ct_start: String,
    pub team_t_start: String,
    pub map: Arc<str>,
    pub rounds: Vec<RoundRecord>,
}

impl MatchRecord {
    /// Team names playing (CT, T) in `round_number`.
    ///
    /// Sides swap after round 15. Overtime is played in blocks of three rounds,
    /// the first block keeping the second-half sides and each later block swapping.
    pub fn teams_for_round(&self, round_number: u32) -> (&str, &str) {
        let start = (self.team_ct_start.as_str(), self.team_t_start.as_str());
        let swapped = (start.1, start.0);
        let swap = match round_number {
            0..=15 => false,
            16..=30 => true,
            r => ((r - 31) / 3) % 2 == 0,
        };
        if swap {
            swapped
        } else {
            start
        }
    }

    pub fn state_count(&self) -> usize {
        self.rounds.iter().map(|r| r.frames.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn end_reason_winner_consistency() {
        assert_eq!(EndReason::BombExploded.winner(), Side::T);
        assert_eq!(EndReason::BombDefused.winner(), Side::CT);
        assert_eq!(EndReason::TimeExpired.winner(), Side::CT);
        assert_eq!(EndReason::EliminationCt.winner(), Side::T);
        assert_eq!(EndReason::EliminationT.winner(), Side::CT);
    }

    #[test]
    fn halves_swap_sides() {
        let m = MatchRecord {
            match_id: "m".into(),
            date: NaiveDate::from_ymd_opt(2020, 4, 1).unwrap(),
            competition_name: "c".into(),
            team_ct_start: "A".into(),
            team_t_start: "B".into(),
            map: "x".into(),
            rounds: vec![],
        };
        assert_eq!(m.teams_for_round(1), ("A", "B"));
        assert_eq!(m.teams_for_round(15), ("A", "B"));
        assert_eq!(m.teams_for_round(16), ("B", "A"));
        assert_eq!(m.teams_for_round(30), ("B", "A"));
        assert_eq!(m.teams_for_round(31), ("B", "A"));
        assert_eq!(m.teams_for_round(34), ("A", "B"));
    }

    #[test]
    fn vec3_serializes_as_array() {
        let v = Vec3::new(1.5, -2.0, 3.25);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[1.5,-2.0,3.25]");
        let back: Vec3 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
