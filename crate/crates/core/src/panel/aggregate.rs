use std::collections::BTreeSet;

use crate::market::AuctionOutcome;
use crate::{Error, Result};

pub const DAYS_PER_WEEK: usize = 7;

/// Weekly revenue and competitiveness aggregates for one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteWeekAggregate {
    /// Revenue per thousand supplied impressions, sold and unsold alike.
    pub cpm: f64,
    pub revenue: f64,
    pub sold: usize,
    /// Mean over the week's days of the number of distinct winning
    /// buyers that day.
    pub avg_daily_buyers: f64,
}

/// Aggregate one site-week of auction outcomes against its supplied
/// impression count. Returns `None` for zero supply, which callers skip
/// (weekly aggregation exists to avoid empty periods in the first place).
/// Impressions are assigned to days round-robin for the daily buyer
/// count.
pub fn aggregate_outcomes(
    outcomes: &[AuctionOutcome],
    supply: u64,
) -> Result<Option<SiteWeekAggregate>> {
    if supply == 0 {
        return Ok(None);
    }
    let sold = outcomes.iter().filter(|o| o.winner.is_some()).count();
    if (sold as u64) > supply {
        return Err(Error::Input(format!(
            "{sold} sold impressions exceed supply {supply}"
        )));
    }
    let revenue: f64 = outcomes.iter().map(|o| o.price).sum();
    let mut daily_winners: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); DAYS_PER_WEEK];
    for (idx, outcome) in outcomes.iter().enumerate() {
        if let Some(winner) = outcome.winner {
            daily_winners[idx % DAYS_PER_WEEK].insert(winner);
        }
    }
    let avg_daily_buyers =
        daily_winners.iter().map(BTreeSet::len).sum::<usize>() as f64 / DAYS_PER_WEEK as f64;

    Ok(Some(SiteWeekAggregate {
        cpm: revenue / supply as f64 * 1000.0,
        revenue,
        sold,
        avg_daily_buyers,
    }))
}
