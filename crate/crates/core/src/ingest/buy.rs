use serde::{Deserialize, Serialize};

use crate::model::BuyType;

/// Equipment-value cutoffs for a side's buy type. Totals are summed over the
/// side's five players at the start of the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuyThresholds {
    /// Totals below this are an eco round.
    pub eco_below: u32,
    /// Totals at or above this are a full buy.
    pub full_from: u32,
}

impl Default for BuyThresholds {
    fn default() -> Self {
        Self {
            eco_below: 5_000,
            full_from: 20_000,
        }
    }
}

impl BuyThresholds {
    pub fn classify(&self, side_equipment_total: u32, round_number: u32) -> BuyType {
        if is_pistol_round(round_number) {
            BuyType::Pistol
        } else if side_equipment_total < self.eco_below {
            BuyType::Eco
        } else if side_equipment_total < self.full_from {
            BuyType::SemiBuy
        } else {
            BuyType::FullBuy
        }
    }
}

/// First round of each regulation half.
pub fn is_pistol_round(round_number: u32) -> bool {
    round_number == 1 || round_number == 16
}

/// [`BuyThresholds::classify`] with the default cutoffs.
pub fn classify_buy(side_equipment_total: u32, round_number: u32) -> BuyType {
    BuyThresholds::default().classify(side_equipment_total, round_number)
}
