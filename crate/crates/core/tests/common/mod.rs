#![allow(dead_code)]

use std::path::PathBuf;

use stateseek_core::ingest::{synth_generate, SynthConfig};
use stateseek_core::navmesh::{AreaDocument, MeshDocument};
use stateseek_core::store::StoreConfig;
use stateseek_core::{index_states, GameState, MatchRecord, MeshCatalog, NavMesh, Side, StateStore, Vec3};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn catalog() -> MeshCatalog {
    MeshCatalog::load_dir(fixtures().join("meshes")).expect("fixture meshes load")
}

pub fn synth_matches(matches: usize, seed: u64) -> Vec<MatchRecord> {
    let cfg = SynthConfig {
        matches,
        rounds_per_match: 20,
        ..Default::default()
    };
    synth_generate(&cfg, &catalog(), seed).unwrap()
}

pub fn synth_store(matches: usize, seed: u64, config: StoreConfig) -> StateStore {
    let (store, diags) = index_states(catalog(), synth_matches(matches, seed), config);
    assert!(diags.is_empty(), "{diags:?}");
    store
}

/// Every state in chronological `(match_id, round_number, t)` order, paired
/// with its match and round, without going through the index.
pub fn states_in_order(matches: &[MatchRecord]) -> Vec<(&MatchRecord, usize, &GameState)> {
    let mut ms: Vec<&MatchRecord> = matches.iter().collect();
    ms.sort_by(|a, b| a.match_id.cmp(&b.match_id));
    let mut out = Vec::new();
    for m in ms {
        for (ri, r) in m.rounds.iter().enumerate() {
            for f in &r.frames {
                out.push((m, ri, f));
            }
        }
    }
    out
}

/// Brute-force point location over the mesh document's area list.
pub fn locate_oracle(doc: &MeshDocument, p: Vec3) -> (u32, String) {
    let contains = |a: &AreaDocument| p.x >= a.x_min && p.x <= a.x_max && p.y >= a.y_min && p.y <= a.y_max;
    let dist_sq = |a: &AreaDocument| {
        let dx = (a.x_min - p.x).max(0.0).max(p.x - a.x_max);
        let dy = (a.y_min - p.y).max(0.0).max(p.y - a.y_max);
        dx * dx + dy * dy
    };
    let mut best: Option<(&AreaDocument, f64, f64)> = None;
    let inside: Vec<&AreaDocument> = doc.areas.iter().filter(|a| contains(a)).collect();
    let pool: Vec<&AreaDocument> = if inside.is_empty() {
        doc.areas.iter().collect()
    } else {
        inside
    };
    for a in pool {
        let d = if contains(a) { 0.0 } else { dist_sq(a) };
        let z = (a.z_center - p.z).abs();
        let better = match best {
            None => true,
            Some((b, bd, bz)) => (d, z, a.id) < (bd, bz, b.id),
        };
        if better {
            best = Some((a, d, z));
        }
    }
    let a = best.unwrap().0;
    (a.id, a.place_name.clone())
}

/// Canonical place index: position of the name in the sorted place list.
pub fn place_index(doc: &MeshDocument, name: &str) -> usize {
    let mut names: Vec<&str> = doc.places.iter().map(|p| p.name.as_str()).collect();
    names.sort();
    names.iter().position(|n| *n == name).unwrap()
}

/// Counts per place for one side, T block then CT block.
pub fn token_oracle(mesh: &NavMesh, players: &[(Side, Vec3)]) -> Vec<u8> {
    let doc = mesh.to_document();
    let n = doc.places.len();
    let mut row = vec![0u8; 2 * n];
    for &(side, pos) in players {
        let (_, place) = locate_oracle(&doc, pos);
        let off = if side == Side::T { 0 } else { n };
        row[off + place_index(&doc, &place)] += 1;
    }
    row
}

pub fn alive_positions(s: &GameState) -> Vec<(Side, Vec3)> {
    s.players
        .iter()
        .filter(|p| p.alive)
        .map(|p| (p.side, p.position))
        .collect()
}

/// Sum over `from` of the distance to the closest same-side player in `into`.
pub fn state_distance_oracle(from: &[(Side, Vec3)], into: &[(Side, Vec3)]) -> Option<f64> {
    let mut total = 0.0;
    for &(side, a) in from {
        let mut best = f64::INFINITY;
        for &(s2, b) in into {
            if s2 == side {
                let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt();
                best = best.min(d);
            }
        }
        if best.is_infinite() {
            return None;
        }
        total += best;
    }
    Some(total)
}
