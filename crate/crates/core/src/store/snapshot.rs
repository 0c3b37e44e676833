//! Snapshot files.
//!
//! Layout: the 8-byte magic `STSKSNAP`, a little-endian `u32` format version,
//! then a bincode stream (varint integers) of:
//!
//! 1. `Vec<MeshDocument>`
//! 2. `u64` match count, followed by that many `ReplayDocument`s in match-id order
//! 3. `Vec<SnapshotTokens>`: per map, its distinct canonical token strings and
//!    the token id of each of its states in chronological order
//!
//! Loading trusts the stored tokens and does not re-tokenize; use
//! [`StateStore::verify_tokens`] to spot-check.

use std::io::{Read, Write};

use bincode::Options;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{StateStore, StoreConfig};
use crate::ingest::{parse_match, render_match, IngestError, ParseOptions, ReplayDocument};
use crate::navmesh::{MeshCatalog, MeshDocument, MeshError, NavMesh};
use crate::tokenizer::Token;

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"STSKSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {found}; this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding error: {0}")]
    Encoding(#[from] bincode::Error),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotTokens {
    map: String,
    tokens: Vec<String>,
    state_tokens: Vec<u32>,
}

fn codec() -> impl Options {
    bincode::DefaultOptions::new()
}

impl StateStore {
    pub fn save_snapshot<W: Write>(&self, mut w: W) -> Result<(), SnapshotError> {
        w.write_all(&SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        let meshes: Vec<MeshDocument> = self.meshes.iter().map(|m| m.to_document()).collect();
        codec().serialize_into(&mut w, &meshes)?;
        codec().serialize_into(&mut w, &(self.matches.len() as u64))?;
        for m in &self.matches {
            codec().serialize_into(&mut w, &render_match(m))?;
        }
        let maps: Vec<SnapshotTokens> = self
            .maps
            .iter()
            .map(|(name, idx)| SnapshotTokens {
                map: name.clone(),
                tokens: idx.tokens.iter().map(Token::render).collect(),
                state_tokens: idx.token_of.clone(),
            })
            .collect();
        codec().serialize_into(&mut w, &maps)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_snapshot<R: Read>(mut r: R, config: StoreConfig) -> Result<Self, SnapshotError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let mut ver = [0u8; 4];
        r.read_exact(&mut ver)?;
        let found = u32::from_le_bytes(ver);
        if found != SNAPSHOT_VERSION {
            return Err(SnapshotError::VersionMismatch {
                found,
                expected: SNAPSHOT_VERSION,
            });
        }
        let mesh_docs: Vec<MeshDocument> = codec().deserialize_from(&mut r)?;
        let meshes = mesh_docs
            .into_iter()
            .map(NavMesh::from_document)
            .collect::<Result<MeshCatalog, _>>()?;
        let n: u64 = codec().deserialize_from(&mut r)?;
        let opts = ParseOptions {
            require_contiguous_rounds: false,
            ..Default::default()
        };
        let mut matches = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let doc: ReplayDocument = codec().deserialize_from(&mut r)?;
            let parsed = parse_match(doc, &opts)?;
            if let Some(d) = parsed.rejected.first() {
                return Err(SnapshotError::Corrupt(format!("stored round rejected: {d}")));
            }
            matches.push(parsed.record);
        }
        let maps: Vec<SnapshotTokens> = codec().deserialize_from(&mut r)?;

        // Rebuild per-round token rows from the stored per-map token ids.
        let mut per_map = std::collections::HashMap::new();
        for m in maps {
            let mesh = meshes
                .get(&m.map)
                .ok_or_else(|| SnapshotError::Corrupt(format!("tokens for unknown map {}", m.map)))?;
            let width = 2 * mesh.place_count();
            let mut rows = Vec::with_capacity(m.tokens.len());
            for t in &m.tokens {
                let tok = Token::parse(t).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
                if tok.place_count() * 2 != width {
                    return Err(SnapshotError::Corrupt(format!(
                        "token width mismatch on {}",
                        m.map
                    )));
                }
                let mut row = Vec::with_capacity(width);
                tok.write_counts(&mut row);
                rows.push(row);
            }
            per_map.insert(m.map, (rows, m.state_tokens, 0usize));
        }
        if matches.windows(2).any(|w| w[0].match_id >= w[1].match_id) {
            return Err(SnapshotError::Corrupt("matches out of order".into()));
        }
        let mut round_rows = Vec::new();
        for m in &matches {
            let (rows, ids, cursor) = per_map
                .get_mut(&*m.map)
                .ok_or_else(|| SnapshotError::Corrupt(format!("no tokens for map {}", m.map)))?;
            for r in &m.rounds {
                let mut block = Vec::new();
                for _ in &r.frames {
                    let tok = *ids
                        .get(*cursor)
                        .ok_or_else(|| SnapshotError::Corrupt("too few state tokens".into()))?;
                    let row = rows
                        .get(tok as usize)
                        .ok_or_else(|| SnapshotError::Corrupt("token id out of range".into()))?;
                    block.extend_from_slice(row);
                    *cursor += 1;
                }
                round_rows.push(block);
            }
        }
        if per_map.values().any(|(_, ids, cursor)| *cursor != ids.len()) {
            return Err(SnapshotError::Corrupt("state token count mismatch".into()));
        }
        Ok(StateStore::assemble(meshes, matches, round_rows, config))
    }

    pub fn save_snapshot_file(&self, path: impl AsRef<std::path::Path>) -> Result<(), SnapshotError> {
        let f = std::fs::File::create(path)?;
        self.save_snapshot(std::io::BufWriter::new(f))
    }

    pub fn load_snapshot_file(
        path: impl AsRef<std::path::Path>,
        config: StoreConfig,
    ) -> Result<Self, SnapshotError> {
        let f = std::fs::File::open(path)?;
        Self::load_snapshot(std::io::BufReader::new(f), config)
    }
}
