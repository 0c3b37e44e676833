//! State tokens and the two state distances.
//!
//! A token counts alive players per place, one count sequence per side. Its
//! canonical text form lists the T counts, then `|`, then the CT counts, each
//! as decimals separated by single spaces: `"0 2 0 3 0|1 1 0 2 1"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GameState, Side, Vec3};
use crate::navmesh::{MeshError, NavMesh};

#[derive(Debug, Error, PartialEq)]
pub enum TokenError {
    #[error("state map {state:?} does not match mesh map {mesh:?}")]
    MapMismatch { state: String, mesh: String },
    #[error("token place counts differ: {0} vs {1}")]
    PlaceCountMismatch(usize, usize),
    #[error("unmatched side: {0} has alive players in the first state but none in the second")]
    UnmatchedSide(Side),
    #[error("more than 255 players of one side in one place")]
    CountOverflow,
    #[error("invalid token string: {0}")]
    Parse(String),
    #[error("{0}")]
    Mesh(String),
}

impl From<MeshError> for TokenError {
    fn from(e: MeshError) -> Self {
        TokenError::Mesh(e.to_string())
    }
}

/// Per-place player counts for one side, indexed by token position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SideToken(pub Vec<u8>);

impl SideToken {
    pub fn zeros(places: usize) -> Self {
        SideToken(vec![0; places])
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&c| c as u32).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    pub t_side: SideToken,
    pub ct_side: SideToken,
}

impl Token {
    pub fn new(t_side: SideToken, ct_side: SideToken) -> Result<Self, TokenError> {
        if t_side.len() != ct_side.len() {
            return Err(TokenError::PlaceCountMismatch(t_side.len(), ct_side.len()));
        }
        Ok(Token { t_side, ct_side })
    }

    pub fn zeros(places: usize) -> Self {
        Token {
            t_side: SideToken::zeros(places),
            ct_side: SideToken::zeros(places),
        }
    }

    pub fn place_count(&self) -> usize {
        self.t_side.len()
    }

    pub fn side(&self, side: Side) -> &SideToken {
        match side {
            Side::T => &self.t_side,
            Side::CT => &self.ct_side,
        }
    }

    /// Counts laid out T first, then CT.
    pub fn write_counts(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.t_side.0);
        out.extend_from_slice(&self.ct_side.0);
    }

    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn parse(s: &str) -> Result<Self, TokenError> {
        let (t, ct) = s
            .split_once('|')
            .ok_or_else(|| TokenError::Parse(format!("missing '|' in {s:?}")))?;
        let t = parse_side(t)?;
        let ct = parse_side(ct)?;
        Token::new(t, ct)
    }
}

fn parse_side(s: &str) -> Result<SideToken, TokenError> {
    s.split(' ')
        .map(|part| {
            let canonical = !part.is_empty()
                && part.bytes().all(|b| b.is_ascii_digit())
                && (part == "0" || !part.starts_with('0'));
            if !canonical {
                return Err(TokenError::Parse(format!("bad count {part:?}")));
            }
            part.parse::<u8>()
                .map_err(|_| TokenError::Parse(format!("count out of range {part:?}")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(SideToken)
}

fn write_side(f: &mut fmt::Formatter<'_>, side: &SideToken) -> fmt::Result {
    for (i, c) in side.0.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_side(f, &self.t_side)?;
        f.write_str("|")?;
        write_side(f, &self.ct_side)
    }
}

impl FromStr for Token {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Token::parse(s)
    }
}

impl Serialize for Token {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Token::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Tallies positions by the token position of the place they fall in.
pub fn tokenize_side<'a>(
    mesh: &NavMesh,
    positions: impl IntoIterator<Item = &'a Vec3>,
) -> Result<SideToken, TokenError> {
    let mut counts = vec![0u8; mesh.place_count()];
    for p in positions {
        let k = mesh.token_position(*p)?;
        counts[k] = counts[k].checked_add(1).ok_or(TokenError::CountOverflow)?;
    }
    Ok(SideToken(counts))
}

/// Token of the alive players in `state`.
pub fn tokenize_state(mesh: &NavMesh, state: &GameState) -> Result<Token, TokenError> {
    if *state.map != *mesh.map_name {
        return Err(TokenError::MapMismatch {
            state: state.map.to_string(),
            mesh: mesh.map_name.clone(),
        });
    }
    let t = tokenize_side(mesh, state.alive(Side::T).map(|p| &p.position))?;
    let ct = tokenize_side(mesh, state.alive(Side::CT).map(|p| &p.position))?;
    Ok(Token {
        t_side: t,
        ct_side: ct,
    })
}

/// Token of side-tagged positions, all treated as alive.
pub fn tokenize_positions(mesh: &NavMesh, players: &[(Side, Vec3)]) -> Result<Token, TokenError> {
    let of = |side| players.iter().filter(move |(s, _)| *s == side).map(|(_, p)| p);
    Ok(Token {
        t_side: tokenize_side(mesh, of(Side::T))?,
        ct_side: tokenize_side(mesh, of(Side::CT))?,
    })
}

/// Sum of absolute count differences over every position of both sides.
pub fn hamming_mod(a: &Token, b: &Token) -> Result<u32, TokenError> {
    if a.place_count() != b.place_count() {
        return Err(TokenError::PlaceCountMismatch(a.place_count(), b.place_count()));
    }
    Ok(l1(&a.t_side.0, &b.t_side.0) + l1(&a.ct_side.0, &b.ct_side.0))
}

/// L1 distance between two equal-length count rows.
#[inline]
pub fn l1(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u32).sum()
}

/// Directed closest-player distance from `s1` into `s2`.
///
/// Each alive player of `s1` contributes the Euclidean distance to the nearest
/// alive player of the same side in `s2`. Not symmetric.
pub fn state_distance(s1: &GameState, s2: &GameState) -> Result<f64, TokenError> {
    let from: Vec<(Side, Vec3)> = s1
        .players
        .iter()
        .filter(|p| p.alive)
        .map(|p| (p.side, p.position))
        .collect();
    positions_distance(&from, s2)
}

/// [`state_distance`] with the first state given as side-tagged positions.
pub fn positions_distance(from: &[(Side, Vec3)], into: &GameState) -> Result<f64, TokenError> {
    let mut total = 0.0;
    for &(side, pos) in from {
        let nearest = into
            .alive(side)
            .map(|q| pos.distance(&q.position))
            .fold(f64::INFINITY, f64::min);
        if nearest.is_infinite() {
            return Err(TokenError::UnmatchedSide(side));
        }
        total += nearest;
    }
    Ok(total)
}
