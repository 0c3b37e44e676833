//! Result-set summaries: positional heatmaps and outcome tables.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EndReason, Side};
use crate::navmesh::Rect;
use crate::store::{StateId, StateStore};

#[derive(Debug, Error, PartialEq)]
pub enum SummarizeError {
    #[error("unknown map: {0}")]
    UnknownMap(String),
    #[error("map {0} has an empty mesh")]
    EmptyMesh(String),
    #[error("resolution must be at least 1x1, got {0}x{1}")]
    Resolution(usize, usize),
    #[error("state {id} is on map {found}, not {expected}")]
    WrongMap {
        id: u32,
        found: String,
        expected: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// 3x3 binomial kernel `[1,2,1] (x) [1,2,1] / 16`, zero-padded at the edges.
    #[default]
    Binomial3,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<Rect> for Bounds {
    fn from(r: Rect) -> Self {
        Bounds {
            x_min: r.x_min,
            y_min: r.y_min,
            x_max: r.x_max,
            y_max: r.y_max,
        }
    }
}

/// Density grid in row-major order: cell `(ix, iy)` is at `iy * nx + ix`,
/// with `iy = 0` along `y_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub map: String,
    pub side: Side,
    pub resolution: (usize, usize),
    pub bounds: Bounds,
    pub smoothing: Smoothing,
    pub density: Vec<f64>,
    /// Unsmoothed position counts per cell.
    pub raw_counts: Vec<u64>,
}

impl HeatmapGrid {
    pub fn cell(&self, ix: usize, iy: usize) -> f64 {
        self.density[iy * self.resolution.0 + ix]
    }

    pub fn total_count(&self) -> u64 {
        self.raw_counts.iter().sum()
    }
}

/// Cell index along one axis; out-of-range values clamp to the edge cells.
pub fn bin_index(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    let span = hi - lo;
    if !(span > 0.0) || !v.is_finite() {
        return 0;
    }
    let f = ((v - lo) / span * n as f64).floor();
    if f < 0.0 {
        0
    } else {
        (f as usize).min(n - 1)
    }
}

pub fn smooth(counts: &[f64], nx: usize, ny: usize, kernel: Smoothing) -> Vec<f64> {
    match kernel {
        Smoothing::None => counts.to_vec(),
        Smoothing::Binomial3 => {
            const W: [f64; 3] = [1.0, 2.0, 1.0];
            let mut out = vec![0.0; counts.len()];
            for iy in 0..ny {
                for ix in 0..nx {
                    let mut acc = 0.0;
                    for (dy, wy) in W.iter().enumerate() {
                        let y = iy as isize + dy as isize - 1;
                        if y < 0 || y >= ny as isize {
                            continue;
                        }
                        for (dx, wx) in W.iter().enumerate() {
                            let x = ix as isize + dx as isize - 1;
                            if x < 0 || x >= nx as isize {
                                continue;
                            }
                            acc += wx * wy * counts[y as usize * nx + x as usize];
                        }
                    }
                    out[iy * nx + ix] = acc / 16.0;
                }
            }
            out
        }
    }
}

pub fn heatmap(
    store: &StateStore,
    map: &str,
    ids: &[StateId],
    side: Side,
    resolution: (usize, usize),
) -> Result<HeatmapGrid, SummarizeError> {
    heatmap_with(store, map, ids, side, resolution, Smoothing::default())
}

/// Bins every alive `side` player across `ids` and smooths the counts.
/// An empty `ids` yields an all-zero grid.
pub fn heatmap_with(
    store: &StateStore,
    map: &str,
    ids: &[StateId],
    side: Side,
    resolution: (usize, usize),
    kernel: Smoothing,
) -> Result<HeatmapGrid, SummarizeError> {
    let (nx, ny) = resolution;
    if nx == 0 || ny == 0 {
        return Err(SummarizeError::Resolution(nx, ny));
    }
    let mesh = store
        .mesh(map)
        .ok_or_else(|| SummarizeError::UnknownMap(map.to_string()))?;
    let ext = mesh
        .extent()
        .ok_or_else(|| SummarizeError::EmptyMesh(map.to_string()))?;
    let mut raw = vec![0u64; nx * ny];
    for &id in ids {
        let s = store.state(id);
        if &*s.map != map {
            return Err(SummarizeError::WrongMap {
                id: id.0,
                found: s.map.to_string(),
                expected: map.to_string(),
            });
        }
        for p in s.alive(side) {
            let ix = bin_index(p.position.x, ext.x_min, ext.x_max, nx);
            let iy = bin_index(p.position.y, ext.y_min, ext.y_max, ny);
            raw[iy * nx + ix] += 1;
        }
    }
    let counts: Vec<f64> = raw.iter().map(|&c| c as f64).collect();
    let mut density = smooth(&counts, nx, ny, kernel);
    let max = density.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        density.iter_mut().for_each(|d| *d /= max);
    }
    Ok(HeatmapGrid {
        map: map.to_string(),
        side,
        resolution,
        bounds: ext.into(),
        smoothing: kernel,
        density,
        raw_counts: raw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    pub rounds: usize,
    pub t_wins: usize,
    pub ct_wins: usize,
    pub end_reasons: BTreeMap<EndReason, usize>,
    /// `ct_wins / (t_wins + ct_wins)`; absent when no rounds.
    pub ct_win_rate: Option<f64>,
}

/// Tallies outcomes over the unique rounds touched by `ids`.
pub fn outcome_table(store: &StateStore, ids: &[StateId]) -> OutcomeTable {
    let rounds: BTreeSet<usize> = ids.iter().map(|&id| store.round_index(id)).collect();
    let mut t_wins = 0;
    let mut ct_wins = 0;
    let mut end_reasons: BTreeMap<EndReason, usize> = EndReason::ALL.iter().map(|&r| (r, 0)).collect();
    for &r in &rounds {
        let meta = &store.rounds()[r];
        match meta.winner {
            Side::T => t_wins += 1,
            Side::CT => ct_wins += 1,
        }
        *end_reasons.entry(meta.end_reason).or_default() += 1;
    }
    let total = t_wins + ct_wins;
    OutcomeTable {
        rounds: rounds.len(),
        t_wins,
        ct_wins,
        end_reasons,
        ct_win_rate: (total > 0).then(|| ct_wins as f64 / total as f64),
    }
}
