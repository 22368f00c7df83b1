use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Result of one second-price auction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub impression_id: usize,
    pub site_id: usize,
    /// Absent when no bidder participated.
    pub winner: Option<usize>,
    /// Second-highest participant bid, floored at 0.
    pub price: f64,
    pub n_participants: usize,
}

/// Run one sealed-bid second-price auction over the given bids.
///
/// Bidders with a non-positive valuation abstain (implicit reserve price
/// of zero). The winner pays the second-highest participant bid, or zero
/// when they were the lone participant. Top-bid ties are broken uniformly
/// from `rng`.
pub fn run_auction(bids: &[f64], rng: &mut impl Rng) -> Result<(Option<usize>, f64, usize)> {
    if bids.is_empty() {
        return Err(Error::Input("auction needs at least one bid".into()));
    }
    let participants: Vec<usize> = (0..bids.len()).filter(|&i| bids[i] > 0.0).collect();
    if participants.is_empty() {
        return Ok((None, 0.0, 0));
    }

    let top = participants
        .iter()
        .map(|&i| bids[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = participants.iter().copied().filter(|&i| bids[i] == top).collect();
    let winner = if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.gen_range(0..tied.len())]
    };

    let price = participants
        .iter()
        .filter(|&&i| i != winner)
        .map(|&i| bids[i])
        .fold(0.0, f64::max);

    Ok((Some(winner), price, participants.len()))
}
