//! Replay ingestion, buy-type classification and synthetic corpus generation.

mod buy;
mod replay;
mod synth;

pub use buy::{classify_buy, is_pistol_round, BuyThresholds};
pub use replay::{
    parse_match, parse_match_json, render_match, EventDocument, FrameDocument, IngestError, ParseOptions,
    ParsedMatch, PlayerDocument, ReplayDocument, RoundDiagnostic, RoundDocument, TeamsDocument,
};
pub use synth::{synth_generate, SynthConfig, SynthError};

use crate::model::MatchRecord;

/// Problems found by [`validate_match`].
pub fn validate_match(m: &MatchRecord) -> Vec<String> {
    let mut problems = Vec::new();
    for r in &m.rounds {
        let tag = format!("{} round {}", m.match_id, r.round_number);
        if r.end_reason.winner() != r.winner {
            problems.push(format!("{tag}: winner/end_reason mismatch"));
        }
        if !r.frames.windows(2).all(|w| w[0].t < w[1].t) {
            problems.push(format!("{tag}: frames not strictly increasing"));
        }
        for f in &r.frames {
            if f.t < 0.0 {
                problems.push(format!("{tag}: negative frame time"));
            }
            for side in crate::model::Side::BOTH {
                if f.players.iter().filter(|p| p.side == side).count() > crate::model::MAX_PLAYERS_PER_SIDE {
                    problems.push(format!("{tag} t={}: more than 5 {side} players", f.t));
                }
            }
            for p in &f.players {
                if p.hp > 100 || p.alive != (p.hp > 0) {
                    problems.push(format!("{tag} t={}: invalid snapshot for {}", f.t, p.player_id));
                }
            }
        }
    }
    problems
}
