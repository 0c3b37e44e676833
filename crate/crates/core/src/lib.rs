//! Game-state retrieval for team-based esports replays.
//!
//! States are tokenized against a navigation mesh into per-place alive
//! counts, indexed per map, and retrieved by exact, partial or nearest token
//! match under round-level filters. Result sets can be summarized as heatmaps,
//! outcome tables and win-probability series.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod exec;
pub mod ingest;
pub mod model;
pub mod navmesh;
pub mod store;
pub mod summarize;
pub mod tokenizer;
pub mod winprob;

pub use exec::ExecMode;
pub use model::{
    BuyType, EndReason, EventKind, EventRecord, GameState, MatchRecord, PlayerSnapshot, RoundRecord,
    RoundRef, Side, Vec3,
};
pub use navmesh::{MeshCatalog, NavMesh};
pub use store::{index_states, FilterSpec, Hit, QueryMode, QuerySpec, StateId, StateStore, StoreConfig};
pub use tokenizer::Token;
