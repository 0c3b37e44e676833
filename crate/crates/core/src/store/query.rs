//! Exact, partial and nearest-token lookups.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::filter::FilterSpec;
use super::{MapIndex, StateId, StateStore};
use crate::exec;
use crate::model::{Side, Vec3};
use crate::tokenizer::{l1, positions_distance, tokenize_positions, Token, TokenError};

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error("empty sketch")]
    EmptySketch,
    #[error("{op} requires {expected} mode")]
    WrongMode {
        op: &'static str,
        expected: &'static str,
    },
    #[error("nearest lookup requires k_nearest")]
    MissingK,
    #[error(transparent)]
    Token(#[from] TokenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// Every alive player is drawn; the whole token must match.
    Full,
    /// Only sketched places constrain the result, as at-least counts.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchPlayer {
    pub side: Side,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub map: String,
    pub sketch: Vec<SketchPlayer>,
    pub mode: QueryMode,
    #[serde(default)]
    pub filters: FilterSpec,
    #[serde(default)]
    pub k_nearest: Option<usize>,
}

impl QuerySpec {
    pub fn positions(&self) -> Vec<(Side, Vec3)> {
        self.sketch.iter().map(|p| (p.side, p.position)).collect()
    }

    pub fn count(&self, side: Side) -> usize {
        self.sketch.iter().filter(|p| p.side == side).count()
    }
}

/// One retrieved state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hit {
    pub id: StateId,
    /// Modified Hamming distance between the query token and the state's token.
    pub token_distance: u32,
    /// Closest-player distance from the sketch into the state, when ranked.
    /// Infinite when the state has no alive player on a sketched side.
    pub state_distance: Option<f64>,
}

struct Prepared<'a> {
    index: &'a MapIndex,
    positions: Vec<(Side, Vec3)>,
    row: Vec<u8>,
    round_ok: Vec<bool>,
    filters: &'a FilterSpec,
}

impl StateStore {
    /// Dispatches on mode: partial, nearest (full with `k_nearest`) or exact.
    pub fn query(&self, q: &QuerySpec) -> Result<Vec<Hit>, QueryError> {
        match (q.mode, q.k_nearest) {
            (QueryMode::Partial, None) => self.lookup_partial(q),
            (QueryMode::Partial, Some(_)) => Err(QueryError::WrongMode {
                op: "nearest lookup",
                expected: "full",
            }),
            (QueryMode::Full, Some(_)) => self.lookup_nearest(q),
            (QueryMode::Full, None) => self.lookup_exact(q),
        }
    }

    /// States whose token equals the sketch's token.
    pub fn lookup_exact(&self, q: &QuerySpec) -> Result<Vec<Hit>, QueryError> {
        if q.mode != QueryMode::Full {
            return Err(QueryError::WrongMode {
                op: "exact lookup",
                expected: "full",
            });
        }
        let p = self.prepare(q)?;
        let ids: Vec<StateId> = match p.index.token_ids.get(p.row.as_slice()) {
            Some(&tok) => p.index.token_states[tok as usize]
                .iter()
                .copied()
                .filter(|&id| self.passes(&p, id))
                .collect(),
            None => Vec::new(),
        };
        Ok(self.rank(&p.positions, ids.into_iter().map(|id| (id, 0)).collect()))
    }

    /// States with at least the sketched number of players of each side in
    /// each sketched place.
    pub fn lookup_partial(&self, q: &QuerySpec) -> Result<Vec<Hit>, QueryError> {
        if q.mode != QueryMode::Partial {
            return Err(QueryError::WrongMode {
                op: "partial lookup",
                expected: "partial",
            });
        }
        if q.sketch.is_empty() {
            return Err(QueryError::EmptySketch);
        }
        let p = self.prepare(q)?;
        let required: Vec<(usize, u8)> = p
            .row
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
            .collect();
        let index = p.index;
        let hits = exec::filter_map_range(self.config.exec, index.states.len(), |local| {
            let row = index.row(local);
            let id = index.states[local];
            (required.iter().all(|&(col, c)| row[col] >= c) && self.passes(&p, id)).then(|| l1(row, &p.row))
        });
        Ok(self.rank(
            &p.positions,
            hits.into_iter()
                .map(|(local, d)| (index.states[local as usize], d))
                .collect(),
        ))
    }

    /// Up to `k` filtered states closest to the sketch's token.
    ///
    /// Ordered by token distance, then closest-player distance, then
    /// chronologically. Filters apply before ranking.
    pub fn lookup_nearest(&self, q: &QuerySpec) -> Result<Vec<Hit>, QueryError> {
        if q.mode != QueryMode::Full {
            return Err(QueryError::WrongMode {
                op: "nearest lookup",
                expected: "full",
            });
        }
        let k = q.k_nearest.ok_or(QueryError::MissingK)?;
        let p = self.prepare(q)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let index = p.index;
        let scored = exec::filter_map_range(self.config.exec, index.states.len(), |local| {
            self.passes(&p, index.states[local])
                .then(|| l1(index.row(local), &p.row))
        });
        if scored.len() <= k {
            return Ok(self.rank_nearest(&p.positions, scored, index, usize::MAX));
        }
        // Smallest distance bound that admits k states.
        let max_d = scored.iter().map(|&(_, d)| d).max().unwrap_or(0) as usize;
        let mut histogram = vec![0usize; max_d + 1];
        for &(_, d) in &scored {
            histogram[d as usize] += 1;
        }
        let mut seen = 0;
        let mut bound = 0;
        for (d, &n) in histogram.iter().enumerate() {
            seen += n;
            if seen >= k {
                bound = d as u32;
                break;
            }
        }
        let candidates: Vec<(u32, u32)> = scored.into_iter().filter(|&(_, d)| d <= bound).collect();
        Ok(self.rank_nearest(&p.positions, candidates, index, k))
    }

    /// Scores every candidate and keeps the `k` best; unaffected by the rank cap.
    fn rank_nearest(
        &self,
        positions: &[(Side, Vec3)],
        candidates: Vec<(u32, u32)>,
        index: &MapIndex,
        k: usize,
    ) -> Vec<Hit> {
        let mut hits = exec::map_slice(self.config.exec, &candidates, |&(local, d)| {
            let id = index.states[local as usize];
            Hit {
                id,
                token_distance: d,
                state_distance: Some(positions_distance(positions, self.state(id)).unwrap_or(f64::INFINITY)),
            }
        });
        let order = |a: &Hit, b: &Hit| {
            a.token_distance
                .cmp(&b.token_distance)
                .then_with(|| cmp_distance(a.state_distance, b.state_distance))
                .then(a.id.cmp(&b.id))
        };
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, order);
            hits.truncate(k);
        }
        hits.sort_by(order);
        hits
    }

    fn prepare<'a>(&'a self, q: &'a QuerySpec) -> Result<Prepared<'a>, QueryError> {
        let index = self
            .maps
            .get(&q.map)
            .ok_or_else(|| QueryError::UnknownMap(q.map.clone()))?;
        let positions = q.positions();
        let token: Token = tokenize_positions(&index.mesh, &positions)?;
        let mut row = Vec::with_capacity(index.width);
        token.write_counts(&mut row);
        Ok(Prepared {
            index,
            positions,
            row,
            round_ok: self.round_mask(&q.filters),
            filters: &q.filters,
        })
    }

    /// Round-level filter outcome for every round.
    fn round_mask(&self, f: &FilterSpec) -> Vec<bool> {
        let team = f.team.as_ref().map(|t| {
            let id = self
                .teams
                .binary_search_by(|n| n.as_str().cmp(&t.name))
                .ok()
                .map(|i| i as u32);
            (id, t.side)
        });
        self.rounds
            .iter()
            .map(|r| {
                let team_ok = match team {
                    None => true,
                    Some((None, _)) => false,
                    Some((Some(id), Some(Side::CT))) => r.ct_team_id == id,
                    Some((Some(id), Some(Side::T))) => r.t_team_id == id,
                    Some((Some(id), None)) => r.ct_team_id == id || r.t_team_id == id,
                };
                team_ok
                    && f.ct_buy.as_ref().is_none_or(|s| s.contains(&r.ct_buy))
                    && f.t_buy.as_ref().is_none_or(|s| s.contains(&r.t_buy))
                    && f.end_reasons.as_ref().is_none_or(|s| s.contains(&r.end_reason))
                    && f.date_range.is_none_or(|d| d.contains(r.date))
            })
            .collect()
    }

    fn passes(&self, p: &Prepared<'_>, id: StateId) -> bool {
        let row = &self.states[id.0 as usize];
        let f = p.filters;
        p.round_ok[row.round as usize]
            && f.bomb_planted.is_none_or(|b| row.bomb_planted == b)
            && f.min_grenades_ct.is_none_or(|m| row.grenades_ct as u32 >= m)
            && f.min_grenades_t.is_none_or(|m| row.grenades_t as u32 >= m)
    }

    /// Orders hits by closest-player distance when the set is within the rank
    /// cap, otherwise chronologically.
    fn rank(&self, positions: &[(Side, Vec3)], hits: Vec<(StateId, u32)>) -> Vec<Hit> {
        if hits.len() > self.config.rank_cap {
            let mut out: Vec<Hit> = hits
                .into_iter()
                .map(|(id, d)| Hit {
                    id,
                    token_distance: d,
                    state_distance: None,
                })
                .collect();
            out.sort_by_key(|h| h.id);
            return out;
        }
        let mut out = exec::map_slice(self.config.exec, &hits, |&(id, d)| Hit {
            id,
            token_distance: d,
            state_distance: Some(positions_distance(positions, self.state(id)).unwrap_or(f64::INFINITY)),
        });
        out.sort_by(|a, b| cmp_distance(a.state_distance, b.state_distance).then(a.id.cmp(&b.id)));
        out
    }
}

fn cmp_distance(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    let key = |d: Option<f64>| d.unwrap_or(f64::INFINITY);
    key(a).total_cmp(&key(b))
}
