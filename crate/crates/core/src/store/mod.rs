//! The state store: every indexed frame, a clustered `(map, token)` index and
//! per-place count columns, plus the round metadata used by filters.
//!
//! States are numbered in chronological key order `(match_id, round_number, t)`,
//! so a [`StateId`] comparison is the tie-break order for every lookup.

mod filter;
mod query;
mod snapshot;

pub use filter::{DateRange, FilterSpec, TeamFilter};
pub use query::{Hit, QueryError, QueryMode, QuerySpec, SketchPlayer};
pub use snapshot::{SnapshotError, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::Serialize;

use crate::exec::{self, ExecMode};
use crate::model::{BuyType, EndReason, GameState, MatchRecord, RoundRecord, RoundRef, Side};
use crate::navmesh::{MeshCatalog, NavMesh};
use crate::tokenizer::{tokenize_state, SideToken, Token, TokenError};

/// Dense index of a state in a [`StateStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StateId(pub u32);

/// Externally meaningful state key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRef {
    pub match_id: Arc<str>,
    pub round_number: u32,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreConfig {
    pub exec: ExecMode,
    /// Result sets up to this size are ranked by closest-player distance;
    /// larger ones stay in chronological order.
    pub rank_cap: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            exec: ExecMode::default(),
            rank_cap: 10_000,
        }
    }
}

/// Per-round summary used by filters and result cards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundMeta {
    pub round_ref: RoundRef,
    pub map: Arc<str>,
    pub date: NaiveDate,
    pub competition_name: String,
    pub ct_team: String,
    pub t_team: String,
    pub ct_buy: BuyType,
    pub t_buy: BuyType,
    pub end_reason: EndReason,
    pub winner: Side,
    pub score_ct: u32,
    pub score_t: u32,
    pub bomb_plant_t: Option<f64>,
    #[serde(skip)]
    match_idx: u32,
    #[serde(skip)]
    round_idx: u32,
    #[serde(skip)]
    ct_team_id: u32,
    #[serde(skip)]
    t_team_id: u32,
}

#[derive(Debug, Clone)]
struct StateRow {
    round: u32,
    frame: u32,
    local: u32,
    bomb_planted: bool,
    grenades_t: u8,
    grenades_ct: u8,
}

/// Everything indexed for one map.
#[derive(Debug, Clone)]
pub struct MapIndex {
    mesh: Arc<NavMesh>,
    width: usize,
    /// Global ids of this map's states, ascending.
    states: Vec<StateId>,
    /// Row-major counts, `width` per state: T places then CT places.
    counts: Vec<u8>,
    token_of: Vec<u32>,
    tokens: Vec<Token>,
    token_ids: HashMap<Box<[u8]>, u32>,
    /// States per token, ascending.
    token_states: Vec<Vec<StateId>>,
}

impl MapIndex {
    fn new(mesh: Arc<NavMesh>) -> Self {
        let width = 2 * mesh.place_count();
        MapIndex {
            mesh,
            width,
            states: Vec::new(),
            counts: Vec::new(),
            token_of: Vec::new(),
            tokens: Vec::new(),
            token_ids: HashMap::new(),
            token_states: Vec::new(),
        }
    }

    fn push(&mut self, id: StateId, row: &[u8]) -> u32 {
        debug_assert_eq!(row.len(), self.width);
        let local = self.states.len() as u32;
        let tok = match self.token_ids.get(row) {
            Some(&t) => t,
            None => {
                let t = self.tokens.len() as u32;
                let p = self.width / 2;
                self.tokens.push(Token {
                    t_side: SideToken(row[..p].to_vec()),
                    ct_side: SideToken(row[p..].to_vec()),
                });
                self.token_ids.insert(row.into(), t);
                self.token_states.push(Vec::new());
                t
            }
        };
        self.states.push(id);
        self.counts.extend_from_slice(row);
        self.token_of.push(tok);
        self.token_states[tok as usize].push(id);
        local
    }

    pub fn mesh(&self) -> &Arc<NavMesh> {
        &self.mesh
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn distinct_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// States indexed under `token`, in chronological order.
    pub fn states_with_token(&self, token: &Token) -> &[StateId] {
        let mut key = Vec::with_capacity(self.width);
        token.write_counts(&mut key);
        self.token_ids
            .get(key.as_slice())
            .map(|&t| self.token_states[t as usize].as_slice())
            .unwrap_or(&[])
    }

    fn row(&self, local: usize) -> &[u8] {
        &self.counts[local * self.width..(local + 1) * self.width]
    }
}

/// A problem encountered while indexing; the affected round or match is skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexDiagnostic {
    pub match_id: String,
    pub round_number: Option<u32>,
    pub message: String,
}

impl std::fmt::Display for IndexDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.round_number {
            Some(r) => write!(f, "{} round {}: {}", self.match_id, r, self.message),
            None => write!(f, "{}: {}", self.match_id, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateStore {
    config: StoreConfig,
    meshes: MeshCatalog,
    matches: Vec<MatchRecord>,
    rounds: Vec<RoundMeta>,
    states: Vec<StateRow>,
    maps: BTreeMap<String, MapIndex>,
    teams: Vec<String>,
}

/// Tokenizes and indexes every frame of `matches`.
///
/// Matches are ordered by id; a repeated id keeps the first occurrence.
/// Matches on unknown maps and rounds whose frames fail to tokenize are left
/// out and reported.
pub fn index_states(
    meshes: MeshCatalog,
    matches: Vec<MatchRecord>,
    config: StoreConfig,
) -> (StateStore, Vec<IndexDiagnostic>) {
    let (matches, mut diags) = admit_matches(&meshes, matches);

    // Flattened per-round token rows, tokenized in parallel across rounds.
    let jobs: Vec<(usize, usize)> = matches
        .iter()
        .enumerate()
        .flat_map(|(mi, m)| (0..m.rounds.len()).map(move |ri| (mi, ri)))
        .collect();
    let rows = exec::map_slice(config.exec, &jobs, |&(mi, ri)| {
        let m = &matches[mi];
        let mesh = meshes.get(&m.map).expect("admitted matches have meshes");
        let mut out = Vec::with_capacity(m.rounds[ri].frames.len() * 2 * mesh.place_count());
        for f in &m.rounds[ri].frames {
            tokenize_state(mesh, f)?.write_counts(&mut out);
        }
        Ok::<_, TokenError>(out)
    });

    let mut kept: Vec<MatchRecord> = Vec::with_capacity(matches.len());
    let mut kept_rows = Vec::with_capacity(rows.len());
    let mut rows = rows.into_iter();
    for mut m in matches {
        let rounds = std::mem::take(&mut m.rounds);
        for r in rounds {
            match rows.next().expect("one row block per round") {
                Ok(block) => {
                    m.rounds.push(r);
                    kept_rows.push(block);
                }
                Err(e) => diags.push(IndexDiagnostic {
                    match_id: m.match_id.to_string(),
                    round_number: Some(r.round_number),
                    message: format!("tokenization failed: {e}"),
                }),
            }
        }
        kept.push(m);
    }
    (StateStore::assemble(meshes, kept, kept_rows, config), diags)
}

fn admit_matches(
    meshes: &MeshCatalog,
    mut matches: Vec<MatchRecord>,
) -> (Vec<MatchRecord>, Vec<IndexDiagnostic>) {
    let mut diags = Vec::new();
    matches.sort_by(|a, b| a.match_id.cmp(&b.match_id));
    let mut out: Vec<MatchRecord> = Vec::with_capacity(matches.len());
    for m in matches {
        if out.last().is_some_and(|prev| prev.match_id == m.match_id) {
            diags.push(IndexDiagnostic {
                match_id: m.match_id.to_string(),
                round_number: None,
                message: "duplicate match id; keeping the first".into(),
            });
            continue;
        }
        if meshes.get(&m.map).is_none() {
            diags.push(IndexDiagnostic {
                match_id: m.match_id.to_string(),
                round_number: None,
                message: format!("unknown map {:?}", m.map),
            });
            continue;
        }
        out.push(m);
    }
    (out, diags)
}

impl StateStore {
    /// An empty store over `meshes`.
    pub fn empty(meshes: MeshCatalog, config: StoreConfig) -> Self {
        Self::assemble(meshes, Vec::new(), Vec::new(), config)
    }

    /// Builds the indexes from validated matches (sorted by id, known maps) and
    /// one block of token rows per round, in match/round order.
    fn assemble(
        meshes: MeshCatalog,
        matches: Vec<MatchRecord>,
        round_rows: Vec<Vec<u8>>,
        config: StoreConfig,
    ) -> Self {
        let team_set: BTreeSet<&str> = matches
            .iter()
            .flat_map(|m| [m.team_ct_start.as_str(), m.team_t_start.as_str()])
            .collect();
        let teams: Vec<String> = team_set.into_iter().map(String::from).collect();
        let team_id = |name: &str| teams.binary_search_by(|t| t.as_str().cmp(name)).unwrap() as u32;

        let mut maps: BTreeMap<String, MapIndex> = meshes
            .iter()
            .map(|m| (m.map_name.clone(), MapIndex::new(m.clone())))
            .collect();
        let mut rounds = Vec::new();
        let mut states = Vec::new();
        let mut blocks = round_rows.into_iter();
        for (mi, m) in matches.iter().enumerate() {
            let index = maps.get_mut(&*m.map).expect("admitted matches have meshes");
            for (ri, r) in m.rounds.iter().enumerate() {
                let (ct_team, t_team) = m.teams_for_round(r.round_number);
                let round_no = rounds.len() as u32;
                rounds.push(RoundMeta {
                    round_ref: r.round_ref(),
                    map: m.map.clone(),
                    date: m.date,
                    competition_name: m.competition_name.clone(),
                    ct_team: ct_team.to_owned(),
                    t_team: t_team.to_owned(),
                    ct_buy: r.ct_buy,
                    t_buy: r.t_buy,
                    end_reason: r.end_reason,
                    winner: r.winner,
                    score_ct: r.score_ct,
                    score_t: r.score_t,
                    bomb_plant_t: r.bomb_plant_t,
                    match_idx: mi as u32,
                    round_idx: ri as u32,
                    ct_team_id: team_id(ct_team),
                    t_team_id: team_id(t_team),
                });
                let block = blocks.next().expect("one row block per round");
                for (fi, (f, row)) in r.frames.iter().zip(block.chunks_exact(index.width)).enumerate() {
                    let id = StateId(states.len() as u32);
                    let local = index.push(id, row);
                    let grenades = |side| {
                        f.alive(side)
                            .map(|p| p.grenade_count as u32)
                            .sum::<u32>()
                            .min(u8::MAX as u32) as u8
                    };
                    states.push(StateRow {
                        round: round_no,
                        frame: fi as u32,
                        local,
                        bomb_planted: f.bomb_planted,
                        grenades_t: grenades(Side::T),
                        grenades_ct: grenades(Side::CT),
                    });
                }
            }
        }
        StateStore {
            config,
            meshes,
            matches,
            rounds,
            states,
            maps,
            teams,
        }
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: StoreConfig) {
        self.config = config;
    }

    pub fn meshes(&self) -> &MeshCatalog {
        &self.meshes
    }

    pub fn mesh(&self, map: &str) -> Option<&Arc<NavMesh>> {
        self.meshes.get(map)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[RoundMeta] {
        &self.rounds
    }

    /// Maps that have at least one indexed state.
    pub fn map_names(&self) -> Vec<&str> {
        self.maps
            .iter()
            .filter(|(_, m)| m.state_count() > 0)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn map_index(&self, map: &str) -> Option<&MapIndex> {
        self.maps.get(map)
    }

    /// Distinct team names, sorted.
    pub fn teams(&self) -> &[String] {
        &self.teams
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn state(&self, id: StateId) -> &GameState {
        let row = &self.states[id.0 as usize];
        let meta = &self.rounds[row.round as usize];
        &self.matches[meta.match_idx as usize].rounds[meta.round_idx as usize].frames[row.frame as usize]
    }

    pub fn state_ref(&self, id: StateId) -> StateRef {
        let s = self.state(id);
        StateRef {
            match_id: s.round_ref.match_id.clone(),
            round_number: s.round_ref.round_number,
            t: s.t,
        }
    }

    pub fn round_meta(&self, id: StateId) -> &RoundMeta {
        &self.rounds[self.states[id.0 as usize].round as usize]
    }

    /// Dense round number of the round containing `id`.
    pub fn round_index(&self, id: StateId) -> usize {
        self.states[id.0 as usize].round as usize
    }

    pub fn round_record(&self, round_index: usize) -> &RoundRecord {
        let meta = &self.rounds[round_index];
        &self.matches[meta.match_idx as usize].rounds[meta.round_idx as usize]
    }

    pub fn match_of_round(&self, round_index: usize) -> &MatchRecord {
        &self.matches[self.rounds[round_index].match_idx as usize]
    }

    pub fn find_round(&self, match_id: &str, round_number: u32) -> Option<usize> {
        let mi = self
            .matches
            .binary_search_by(|m| (*m.match_id).cmp(match_id))
            .ok()?;
        let ri = self.matches[mi]
            .rounds
            .binary_search_by_key(&round_number, |r| r.round_number)
            .ok()?;
        self.rounds
            .binary_search_by_key(&(mi as u32, ri as u32), |m| (m.match_idx, m.round_idx))
            .ok()
    }

    /// Looks up a state by its external key.
    pub fn find_state(&self, key: &StateRef) -> Option<StateId> {
        let round = self.find_round(&key.match_id, key.round_number)?;
        let first = self.states.partition_point(|s| (s.round as usize) < round);
        self.states[first..]
            .iter()
            .take_while(|s| s.round as usize == round)
            .position(|s| {
                let meta = &self.rounds[round];
                self.matches[meta.match_idx as usize].rounds[meta.round_idx as usize].frames[s.frame as usize]
                    .t
                    == key.t
            })
            .map(|off| StateId((first + off) as u32))
    }

    /// The index key of a state.
    pub fn token(&self, id: StateId) -> &Token {
        let meta = self.round_meta(id);
        let index = &self.maps[&*meta.map];
        let local = self.states[id.0 as usize].local as usize;
        &index.tokens[index.token_of[local] as usize]
    }

    /// Per-place counts of a state, T places then CT places.
    pub fn place_counts(&self, id: StateId) -> &[u8] {
        let meta = self.round_meta(id);
        let index = &self.maps[&*meta.map];
        index.row(self.states[id.0 as usize].local as usize)
    }

    /// Grenades held by alive players of `side` in the state.
    pub fn grenades(&self, id: StateId, side: Side) -> u32 {
        let row = &self.states[id.0 as usize];
        match side {
            Side::T => row.grenades_t as u32,
            Side::CT => row.grenades_ct as u32,
        }
    }

    /// Re-tokenizes `ids` and returns those whose index key disagrees.
    pub fn verify_tokens(&self, ids: &[StateId]) -> Vec<StateId> {
        exec::map_slice(self.config.exec, ids, |&id| {
            let state = self.state(id);
            let mesh = &self.maps[&*state.map].mesh;
            match tokenize_state(mesh, state) {
                Ok(t) if t == *self.token(id) => None,
                _ => Some(id),
            }
        })
        .into_iter()
        .flatten()
        .collect()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{PlayerSnapshot, Vec3};
    use crate::navmesh::{AreaDocument, MeshDocument, NavMesh, PlaceDocument};

    /// Four places in a row along x, each a 100x100 area.
    pub(crate) fn line_mesh(name: &str) -> NavMesh {
        let places = ["A", "B", "C", "D"];
        NavMesh::from_document(MeshDocument {
            map_name: name.into(),
            places: places
                .iter()
                .map(|n| PlaceDocument { name: n.to_string() })
                .collect(),
            areas: places
                .iter()
                .enumerate()
                .map(|(i, n)| AreaDocument {
                    id: i as u32,
                    x_min: i as f64 * 100.0,
                    y_min: 0.0,
                    x_max: i as f64 * 100.0 + 100.0,
                    y_max: 100.0,
                    z_center: 0.0,
                    place_name: n.to_string(),
                })
                .collect(),
            edges: vec![],
            z_threshold: None,
        })
        .unwrap()
    }

    pub(crate) fn frame(
        map: &str,
        match_id: &str,
        round: u32,
        t: f64,
        xs_t: &[f64],
        xs_ct: &[f64],
    ) -> GameState {
        let mk = |side, i: usize, x: f64| PlayerSnapshot {
            player_id: Arc::from(format!("{side}{i}").as_str()),
            side,
            position: Vec3::new(x, 50.0, 0.0),
            hp: 100,
            armor: 0,
            equipment_value: 1000,
            grenade_count: 1,
            alive: true,
        };
        GameState {
            map: Arc::from(map),
            round_ref: RoundRef {
                match_id: Arc::from(match_id),
                round_number: round,
            },
            t,
            players: xs_t
                .iter()
                .enumerate()
                .map(|(i, &x)| mk(Side::T, i, x))
                .chain(xs_ct.iter().enumerate().map(|(i, &x)| mk(Side::CT, i, x)))
                .collect(),
            bomb_planted: false,
        }
    }

    pub(crate) fn round(match_id: &str, n: u32, frames: Vec<GameState>, reason: EndReason) -> RoundRecord {
        RoundRecord {
            match_id: Arc::from(match_id),
            round_number: n,
            winner: reason.winner(),
            end_reason: reason,
            ct_buy: BuyType::FullBuy,
            t_buy: BuyType::FullBuy,
            score_ct: 0,
            score_t: 0,
            bomb_plant_t: None,
            frames,
            kills: vec![],
            grenades: vec![],
            damages: vec![],
            bomb_plants: vec![],
        }
    }

    pub(crate) fn match_record(
        match_id: &str,
        map: &str,
        teams: (&str, &str),
        rounds: Vec<RoundRecord>,
    ) -> MatchRecord {
        MatchRecord {
            match_id: Arc::from(match_id),
            date: NaiveDate::from_ymd_opt(2020, 6, 1).unwrap(),
            competition_name: "Cup".into(),
            team_ct_start: teams.0.into(),
            team_t_start: teams.1.into(),
            map: Arc::from(map),
            rounds,
        }
    }

    pub(crate) fn tiny_store() -> StateStore {
        let meshes: MeshCatalog = [line_mesh("de_line")].into_iter().collect();
        let m1 = match_record(
            "m1",
            "de_line",
            ("Alpha", "Bravo"),
            vec![round(
                "m1",
                1,
                vec![
                    frame("de_line", "m1", 1, 0.0, &[50.0, 50.0], &[350.0]),
                    frame("de_line", "m1", 1, 1.0, &[50.0, 50.0], &[350.0]),
                    frame("de_line", "m1", 1, 2.0, &[150.0, 50.0], &[350.0]),
                ],
                EndReason::EliminationCt,
            )],
        );
        let m0 = match_record(
            "m0",
            "de_line",
            ("Bravo", "Charlie"),
            vec![round(
                "m0",
                1,
                vec![frame("de_line", "m0", 1, 0.0, &[55.0, 60.0], &[340.0])],
                EndReason::TimeExpired,
            )],
        );
        let (store, diags) = index_states(meshes, vec![m1, m0], StoreConfig::default());
        assert!(diags.is_empty());
        store
    }

    #[test]
    fn identical_frames_share_a_key() {
        let store = tiny_store();
        assert_eq!(store.len(), 4);
        // m0 sorts first.
        assert_eq!(&*store.state_ref(StateId(0)).match_id, "m0");
        let idx = store.map_index("de_line").unwrap();
        let tok = Token::parse("2 0 0 0|0 0 0 1").unwrap();
        assert_eq!(idx.states_with_token(&tok), &[StateId(0), StateId(1), StateId(2)]);
        let total: usize = idx.tokens().iter().map(|t| idx.states_with_token(t).len()).sum();
        assert_eq!(total, store.len());
    }

    #[test]
    fn accessors_agree() {
        let store = tiny_store();
        for id in store.ids() {
            let key = store.state_ref(id);
            assert_eq!(store.find_state(&key), Some(id));
            let mut row = Vec::new();
            store.token(id).write_counts(&mut row);
            assert_eq!(store.place_counts(id), row.as_slice());
        }
        assert!(store.verify_tokens(&store.ids().collect::<Vec<_>>()).is_empty());
        assert_eq!(store.teams(), ["Alpha", "Bravo", "Charlie"]);
        assert_eq!(store.grenades(StateId(0), Side::T), 2);
        let r = store.find_round("m1", 1).unwrap();
        assert_eq!(store.round_record(r).frames.len(), 3);
        assert!(store.find_round("m1", 2).is_none());
    }

    #[test]
    fn unknown_map_and_duplicates_reported() {
        let meshes: MeshCatalog = [line_mesh("de_line")].into_iter().collect();
        let a = match_record("x", "de_other", ("A", "B"), vec![]);
        let b = match_record("y", "de_line", ("A", "B"), vec![]);
        let c = match_record("y", "de_line", ("C", "D"), vec![]);
        let (store, diags) = index_states(meshes, vec![a, b, c], StoreConfig::default());
        assert_eq!(store.matches().len(), 1);
        assert_eq!(diags.len(), 2);
        assert!(diags.iter().any(|d| d.message.contains("unknown map")));
        assert!(diags.iter().any(|d| d.message.contains("duplicate")));
    }

    #[test]
    fn bad_round_is_skipped() {
        let meshes: MeshCatalog = [line_mesh("de_line")].into_iter().collect();
        let good = round(
            "m",
            1,
            vec![frame("de_line", "m", 1, 0.0, &[1.0], &[])],
            EndReason::TimeExpired,
        );
        // A frame claiming another map cannot be tokenized against this mesh.
        let bad = round(
            "m",
            2,
            vec![frame("de_else", "m", 2, 0.0, &[1.0], &[])],
            EndReason::TimeExpired,
        );
        let m = match_record("m", "de_line", ("A", "B"), vec![good, bad]);
        let (store, diags) = index_states(meshes, vec![m], StoreConfig::default());
        assert_eq!(store.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].round_number, Some(2));
    }
}
