use serde::{Deserialize, Serialize};

use super::{
    draw_valuations, effective_valuation, run_auction, substream, AuctionOutcome,
    DisclosureRegime, MarketConfig, ValuationDraw, STREAM_TIEBREAK,
};
use crate::Result;

/// Aggregates over one simulated scenario's auction outcomes.
///
/// Per-site price statistics count unsold impressions at price zero, so a
/// site mean is revenue per impression offered at that site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub site_mean_price: Vec<f64>,
    /// `[p50, p90, p99]` per site.
    pub site_price_quantiles: Vec<[f64; 3]>,
    pub bidder_win_share: Vec<f64>,
    pub mean_price: f64,
    /// Among sold impressions, share priced exactly at zero.
    pub zero_price_sale_share: f64,
    pub unsold_share: f64,
}

impl ScenarioSummary {
    pub fn from_outcomes(outcomes: &[AuctionOutcome], n_bidders: usize, n_sites: usize) -> Self {
        let total = outcomes.len().max(1) as f64;
        let mut site_prices: Vec<Vec<f64>> = vec![Vec::new(); n_sites];
        let mut wins = vec![0usize; n_bidders];
        let mut sold = 0usize;
        let mut zero_price_sales = 0usize;
        let mut price_sum = 0.0;
        for outcome in outcomes {
            site_prices[outcome.site_id].push(outcome.price);
            price_sum += outcome.price;
            if let Some(winner) = outcome.winner {
                wins[winner] += 1;
                sold += 1;
                if outcome.price == 0.0 {
                    zero_price_sales += 1;
                }
            }
        }
        let site_mean_price = site_prices
            .iter()
            .map(|p| p.iter().sum::<f64>() / p.len().max(1) as f64)
            .collect();
        let site_price_quantiles = site_prices
            .iter_mut()
            .map(|prices| {
                prices.sort_by(|a, b| a.total_cmp(b));
                [quantile(prices, 0.5), quantile(prices, 0.9), quantile(prices, 0.99)]
            })
            .collect();
        Self {
            site_mean_price,
            site_price_quantiles,
            bidder_win_share: wins.iter().map(|&w| w as f64 / total).collect(),
            mean_price: price_sum / total,
            zero_price_sale_share: zero_price_sales as f64 / sold.max(1) as f64,
            unsold_share: (outcomes.len() - sold) as f64 / total,
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Run one auction per impression of a fresh valuation draw.
pub fn simulate_scenario(
    config: &MarketConfig,
    regime: &DisclosureRegime,
) -> Result<(Vec<AuctionOutcome>, ScenarioSummary)> {
    regime.validate(config.n_bidders)?;
    let draw = draw_valuations(config)?;
    let outcomes = auction_all(config, regime, &draw)?;
    let summary = ScenarioSummary::from_outcomes(&outcomes, config.n_bidders, config.n_sites);
    Ok((outcomes, summary))
}

/// Auction every impression of an existing draw. Tie-break randomness is
/// keyed on (seed, impression), so two regimes over the same draw stay
/// paired impression-by-impression.
pub(crate) fn auction_all(
    config: &MarketConfig,
    regime: &DisclosureRegime,
    draw: &ValuationDraw,
) -> Result<Vec<AuctionOutcome>> {
    let mut bids = vec![0.0; config.n_bidders];
    let mut outcomes = Vec::with_capacity(config.n_impressions);
    for j in 0..config.n_impressions {
        for (i, bid) in bids.iter_mut().enumerate() {
            *bid = effective_valuation(draw, config, regime, i, j);
        }
        let mut tie_rng = substream(config.seed, STREAM_TIEBREAK ^ (j as u64) << 8);
        let (winner, price, n_participants) = run_auction(&bids, &mut tie_rng)?;
        outcomes.push(AuctionOutcome {
            impression_id: j,
            site_id: draw.site_of_impression[j],
            winner,
            price,
            n_participants,
        });
    }
    Ok(outcomes)
}
