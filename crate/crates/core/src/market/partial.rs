use serde::{Deserialize, Serialize};

use super::scenario::auction_all;
use super::{draw_valuations, AuctionOutcome, DisclosureRegime, MarketConfig};
use crate::{Error, Result};

/// Paired comparison of one bidder's outcomes with and without early
/// access to site information. Both regimes run over the same valuation
/// draw, so every difference traces back to the treated bidder's bids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    pub treated: usize,
    pub win_share_treated_none: f64,
    pub win_share_treated_partial: f64,
    /// Mean price over impressions the treated bidder won; zero when the
    /// bidder won nothing.
    pub mean_price_treated_none: f64,
    pub mean_price_treated_partial: f64,
    pub outcomes_none: Vec<AuctionOutcome>,
    pub outcomes_partial: Vec<AuctionOutcome>,
}

pub fn simulate_partial(config: &MarketConfig, treated: usize) -> Result<PartialReport> {
    if treated >= config.n_bidders {
        return Err(Error::Input(format!(
            "treated bidder {treated} out of range (n_bidders = {})",
            config.n_bidders
        )));
    }
    let draw = draw_valuations(config)?;
    let outcomes_none = auction_all(config, &DisclosureRegime::None, &draw)?;
    let regime = DisclosureRegime::partial([treated]);
    let outcomes_partial = auction_all(config, &regime, &draw)?;

    let stats = |outcomes: &[AuctionOutcome]| {
        let won: Vec<&AuctionOutcome> = outcomes
            .iter()
            .filter(|o| o.winner == Some(treated))
            .collect();
        let share = won.len() as f64 / outcomes.len().max(1) as f64;
        let mean_price = if won.is_empty() {
            0.0
        } else {
            won.iter().map(|o| o.price).sum::<f64>() / won.len() as f64
        };
        (share, mean_price)
    };
    let (win_share_treated_none, mean_price_treated_none) = stats(&outcomes_none);
    let (win_share_treated_partial, mean_price_treated_partial) = stats(&outcomes_partial);

    Ok(PartialReport {
        treated,
        win_share_treated_none,
        win_share_treated_partial,
        mean_price_treated_none,
        mean_price_treated_partial,
        outcomes_none,
        outcomes_partial,
    })
}
