//! Round win probability for the CT side.
//!
//! A regularized logistic regression over a small set of state features,
//! fitted with damped Newton steps. Predictions are `P(CT wins)`; the T side's
//! probability is its complement.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GameState, MatchRecord, RoundRecord, Side, BOMB_TIMER_SECONDS, ROUND_SECONDS};

pub const MODEL_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; 7] = [
    "ct_alive",
    "t_alive",
    "hp_diff",
    "equip_diff",
    "grenade_diff",
    "bomb_planted",
    "time_remaining",
];

#[derive(Debug, Error)]
pub enum WinProbError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("degenerate labels: training corpus contains a single outcome class")]
    DegenerateLabels,
    #[error("singular system during training")]
    Singular,
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("model features {0:?} do not match this build")]
    Features(Vec<String>),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub ct_alive: u8,
    pub t_alive: u8,
    /// Summed CT hp minus summed T hp.
    pub hp_diff: i32,
    /// Alive CT equipment value minus alive T equipment value.
    pub equip_diff: i64,
    pub grenade_diff: i32,
    pub bomb_planted: bool,
    /// Seconds left on the round clock, or on the bomb timer once planted.
    pub time_remaining: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.ct_alive as f64,
            self.t_alive as f64,
            self.hp_diff as f64,
            self.equip_diff as f64,
            self.grenade_diff as f64,
            if self.bomb_planted { 1.0 } else { 0.0 },
            self.time_remaining,
        ]
    }
}

pub fn featurize(state: &GameState, round: &RoundRecord) -> FeatureVector {
    let mut alive = [0u8; 2];
    let mut hp = [0i32; 2];
    let mut equip = [0i64; 2];
    let mut nades = [0i32; 2];
    for p in state.players.iter().filter(|p| p.alive) {
        let s = match p.side {
            Side::CT => 0,
            Side::T => 1,
        };
        alive[s] += 1;
        hp[s] += p.hp as i32;
        equip[s] += p.equipment_value as i64;
        nades[s] += p.grenade_count as i32;
    }
    let time_remaining = if state.bomb_planted {
        let planted_at = round.bomb_plant_t.unwrap_or(state.t);
        (BOMB_TIMER_SECONDS - (state.t - planted_at)).clamp(0.0, BOMB_TIMER_SECONDS)
    } else {
        (ROUND_SECONDS - state.t).max(0.0)
    };
    FeatureVector {
        ct_alive: alive[0],
        t_alive: alive[1],
        hp_diff: hp[0] - hp[1],
        equip_diff: equip[0] - equip[1],
        grenade_diff: nades[0] - nades[1],
        bomb_planted: state.bomb_planted,
        time_remaining,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: FeatureVector,
    pub ct_won: bool,
}

/// One labelled example per frame of every round.
pub fn examples_from_matches<'a>(matches: impl IntoIterator<Item = &'a MatchRecord>) -> Vec<Example> {
    matches
        .into_iter()
        .flat_map(|m| &m.rounds)
        .flat_map(|r| {
            r.frames.iter().map(move |f| Example {
                features: featurize(f, r),
                ct_won: r.winner == Side::CT,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub corpus_id: String,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub l2: f64,
    /// Regularized mean log-loss after each iteration.
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinProbModel {
    pub version: u32,
    pub feature_names: Vec<String>,
    /// Features are standardized as `(x - mean) / scale` before weighting.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub training_meta: TrainingMeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub max_iterations: usize,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tolerance: f64,
    pub l2: f64,
    /// Larger corpora are subsampled to this many examples, shuffled by seed.
    pub max_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-6,
            l2: 1e-4,
            max_samples: 250_000,
        }
    }
}

const DIM: usize = FEATURE_NAMES.len() + 1;
const LOGIT_CLAMP: f64 = 30.0;

fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

pub fn train(corpus: &[Example], seed: u64) -> Result<WinProbModel, WinProbError> {
    train_with(corpus, seed, "unnamed", &TrainConfig::default())
}

pub fn train_with(
    corpus: &[Example],
    seed: u64,
    corpus_id: &str,
    cfg: &TrainConfig,
) -> Result<WinProbModel, WinProbError> {
    if corpus.is_empty() {
        return Err(WinProbError::EmptyCorpus);
    }
    let wins = corpus.iter().filter(|e| e.ct_won).count();
    if wins == 0 || wins == corpus.len() {
        return Err(WinProbError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    if corpus.len() > cfg.max_samples {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        order.truncate(cfg.max_samples);
        order.sort_unstable();
    }
    let raw: Vec<[f64; 7]> = order.iter().map(|&i| corpus[i].features.to_array()).collect();
    let y: Vec<f64> = order
        .iter()
        .map(|&i| if corpus[i].ct_won { 1.0 } else { 0.0 })
        .collect();
    if !y.contains(&1.0) || !y.contains(&0.0) {
        return Err(WinProbError::DegenerateLabels);
    }
    let n = raw.len() as f64;

    let mut means = [0.0; 7];
    for x in &raw {
        for j in 0..7 {
            means[j] += x[j];
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut scales = [0.0; 7];
    for x in &raw {
        for j in 0..7 {
            scales[j] += (x[j] - means[j]).powi(2);
        }
    }
    for s in scales.iter_mut() {
        *s = (*s / n).sqrt();
        if !(*s > 1e-12) {
            *s = 1.0;
        }
    }
    // Design rows: intercept column first.
    let xs: Vec<[f64; DIM]> = raw
        .iter()
        .map(|x| {
            let mut row = [1.0; DIM];
            for j in 0..7 {
                row[j + 1] = (x[j] - means[j]) / scales[j];
            }
            row
        })
        .collect();

    let loss = |beta: &[f64; DIM]| -> f64 {
        let mut total = 0.0;
        for (row, &yi) in xs.iter().zip(&y) {
            let z = dot(row, beta);
            // log(1 + e^z) - y z, computed stably.
            total += z.max(0.0) + (-z.abs()).exp().ln_1p() - yi * z;
        }
        total / n + 0.5 * cfg.l2 * beta[1..].iter().map(|b| b * b).sum::<f64>()
    };

    let mut beta = [0.0; DIM];
    let mut current = loss(&beta);
    let mut loss_curve = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        let mut grad = [0.0; DIM];
        let mut hess = [[0.0; DIM]; DIM];
        for (row, &yi) in xs.iter().zip(&y) {
            let p = sigmoid(dot(row, &beta));
            let w = p * (1.0 - p);
            for a in 0..DIM {
                grad[a] += (p - yi) * row[a];
                for b in a..DIM {
                    hess[a][b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..DIM {
            grad[a] /= n;
            for b in a..DIM {
                hess[a][b] /= n;
                hess[b][a] = hess[a][b];
            }
            if a > 0 {
                grad[a] += cfg.l2 * beta[a];
                hess[a][a] += cfg.l2;
            }
        }
        if norm(&grad) < cfg.tolerance {
            converged = true;
            break;
        }
        let step = solve(hess, grad).ok_or(WinProbError::Singular)?;
        // Halve the step until the objective does not increase.
        let mut scale = 1.0;
        let mut next = beta;
        let mut next_loss = current;
        for _ in 0..30 {
            for a in 0..DIM {
                next[a] = beta[a] - scale * step[a];
            }
            next_loss = loss(&next);
            if next_loss <= current {
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        if next_loss > current {
            // No descent along the Newton direction: at the optimum up to rounding.
            converged = true;
            break;
        }
        beta = next;
        current = next_loss;
        loss_curve.push(current);
    }

    Ok(WinProbModel {
        version: MODEL_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        means: means.to_vec(),
        scales: scales.to_vec(),
        weights: beta[1..].to_vec(),
        intercept: beta[0],
        training_meta: TrainingMeta {
            seed,
            corpus_id: corpus_id.to_string(),
            samples: xs.len(),
            iterations,
            converged,
            l2: cfg.l2,
            loss_curve,
        },
    })
}

fn dot(a: &[f64; DIM], b: &[f64; DIM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64; DIM]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: [[f64; DIM]; DIM], mut b: [f64; DIM]) -> Option<[f64; DIM]> {
    for col in 0..DIM {
        let pivot = (col..DIM).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..DIM {
            let f = a[row][col] / a[col][col];
            for k in col..DIM {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; DIM];
    for row in (0..DIM).rev() {
        let s: f64 = (row + 1..DIM).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

impl WinProbModel {
    /// Logit of `P(CT wins)` before clamping.
    pub fn logit(&self, f: &FeatureVector) -> f64 {
        let x = f.to_array();
        self.intercept
            + (0..x.len())
                .map(|j| self.weights[j] * (x[j] - self.means[j]) / self.scales[j])
                .sum::<f64>()
    }

    /// `P(CT wins)`, always strictly inside (0, 1).
    pub fn predict_features(&self, f: &FeatureVector) -> f64 {
        sigmoid(self.logit(f))
    }

    pub fn predict(&self, state: &GameState, round: &RoundRecord) -> f64 {
        self.predict_features(&featurize(state, round))
    }

    /// Weight on a named feature in standardized units.
    pub fn weight(&self, feature: &str) -> Option<f64> {
        self.feature_names
            .iter()
            .position(|n| n == feature)
            .map(|i| self.weights[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, WinProbError> {
        let m: WinProbModel = serde_json::from_str(text)?;
        if m.version != MODEL_VERSION {
            return Err(WinProbError::Version(m.version));
        }
        let dims_ok = m.means.len() == FEATURE_NAMES.len()
            && m.scales.len() == FEATURE_NAMES.len()
            && m.weights.len() == FEATURE_NAMES.len();
        if m.feature_names != FEATURE_NAMES || !dims_ok {
            return Err(WinProbError::Features(m.feature_names));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), WinProbError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WinProbError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `P(T wins)` given `P(CT wins)`.
pub fn t_probability(p_ct: f64) -> f64 {
    1.0 - p_ct
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub p_ct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinSeries {
    pub points: Vec<SeriesPoint>,
    pub bomb_plant_t: Option<f64>,
}

/// One prediction per frame of the round.
pub fn round_series(model: &WinProbModel, round: &RoundRecord) -> WinSeries {
    WinSeries {
        points: round
            .frames
            .iter()
            .map(|f| SeriesPoint {
                t: f.t,
                p_ct: model.predict(f, round),
            })
            .collect(),
        bomb_plant_t: round.bomb_plant_t,
    }
}

/// Area under the ROC curve, with tied scores counted as half.
/// `None` when either class is absent.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average ranks over ties, then Mann-Whitney U.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos as f64 * neg as f64))
}
