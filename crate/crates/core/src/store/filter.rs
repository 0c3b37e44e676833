use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::model::{BuyType, EndReason, Side};

/// Contextual constraints applied on top of spatial matching. The default
/// filter accepts every state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSpec {
    pub team: Option<TeamFilter>,
    pub ct_buy: Option<BTreeSet<BuyType>>,
    pub t_buy: Option<BTreeSet<BuyType>>,
    /// Grenades held by alive CT players in the state.
    pub min_grenades_ct: Option<u32>,
    pub min_grenades_t: Option<u32>,
    pub end_reasons: Option<BTreeSet<EndReason>>,
    pub bomb_planted: Option<bool>,
    pub date_range: Option<DateRange>,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        *self == FilterSpec::default()
    }
}

/// A team, optionally restricted to the side it played in the round.
///
/// Accepts either `"Aurora"` or `{"name": "Aurora", "side": "CT"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TeamFilterRepr")]
pub struct TeamFilter {
    pub name: String,
    pub side: Option<Side>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TeamFilterRepr {
    Name(String),
    Full {
        name: String,
        #[serde(default)]
        side: Option<Side>,
    },
}

impl From<TeamFilterRepr> for TeamFilter {
    fn from(r: TeamFilterRepr) -> Self {
        match r {
            TeamFilterRepr::Name(name) => TeamFilter { name, side: None },
            TeamFilterRepr::Full { name, side } => TeamFilter { name, side },
        }
    }
}

/// Inclusive match-date window; open ends are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    #[serde(default)]
    pub from: Option<NaiveDate>,
    #[serde(default)]
    pub to: Option<NaiveDate>,
}

impl DateRange {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from.is_none_or(|f| d >= f) && self.to.is_none_or(|t| d <= t)
    }
}
