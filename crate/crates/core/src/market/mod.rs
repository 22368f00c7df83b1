//! Second-price auction market simulation under configurable context
//! disclosure regimes.

mod auction;
mod draw;
mod partial;
mod scenario;

pub use auction::{run_auction, AuctionOutcome};
pub use draw::{draw_valuations, effective_valuation, ValuationDraw};
pub use partial::{simulate_partial, PartialReport};
pub use scenario::{simulate_scenario, ScenarioSummary};

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Full parameterization of one simulated exchange.
///
/// Bidder valuations for impression `j` on site `k` decompose into a
/// bidder-site value drawn from `Normal(site_mean(k), sigma)` and an
/// impression residual drawn from `Normal(0, omega)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub n_bidders: usize,
    pub n_sites: usize,
    /// Probability of an impression coming from each site; must sum to 1.
    pub site_shares: Vec<f64>,
    /// Mean site value.
    pub mu: f64,
    /// Gap between the lowest and highest site mean.
    pub delta: f64,
    /// Across-bidder dispersion of site values.
    pub sigma: f64,
    /// Dispersion of the per-impression residual value.
    pub omega: f64,
    pub n_impressions: usize,
    pub seed: u64,
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bidders < 1 {
            return Err(Error::Config("n_bidders must be >= 1".into()));
        }
        if self.n_sites < 1 {
            return Err(Error::Config("n_sites must be >= 1".into()));
        }
        if self.n_impressions < 1 {
            return Err(Error::Config("n_impressions must be >= 1".into()));
        }
        if self.site_shares.len() != self.n_sites {
            return Err(Error::Config(format!(
                "site_shares has {} entries, expected {}",
                self.site_shares.len(),
                self.n_sites
            )));
        }
        if self.site_shares.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(Error::Config("site_shares entries must be >= 0".into()));
        }
        let total: f64 = self.site_shares.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "site_shares must sum to 1, got {total}"
            )));
        }
        if self.sigma < 0.0 || self.omega < 0.0 || self.delta < 0.0 {
            return Err(Error::Config("sigma, omega, delta must be >= 0".into()));
        }
        Ok(())
    }

    /// Mean site value for site `k`. For two sites this is
    /// `mu -/+ delta/2`; more sites are spread evenly so that `delta`
    /// stays the gap between the extreme site means.
    pub fn site_mean(&self, site: usize) -> f64 {
        if self.n_sites == 1 {
            self.mu
        } else {
            self.mu + self.delta * (site as f64 / (self.n_sites - 1) as f64 - 0.5)
        }
    }

    /// Equal-share two-site market, the configuration used throughout the
    /// canonical scenarios.
    pub fn two_site(n_bidders: usize, mu: f64, delta: f64, sigma: f64, omega: f64, n_impressions: usize, seed: u64) -> Self {
        Self {
            n_bidders,
            n_sites: 2,
            site_shares: vec![0.5, 0.5],
            mu,
            delta,
            sigma,
            omega,
            n_impressions,
            seed,
        }
    }
}

/// Which bidders see the impression's site before bidding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DisclosureRegime {
    /// No bidder sees the site; everyone bids the share-weighted average
    /// site value plus the residual.
    None,
    /// Only the listed bidders see the site.
    Partial { treated: BTreeSet<usize> },
    /// Every bidder sees the site.
    Full,
}

impl DisclosureRegime {
    pub fn partial(treated: impl IntoIterator<Item = usize>) -> Self {
        Self::Partial {
            treated: treated.into_iter().collect(),
        }
    }

    pub fn validate(&self, n_bidders: usize) -> Result<()> {
        if let Self::Partial { treated } = self {
            if treated.is_empty() {
                return Err(Error::Config("partial regime needs at least one treated bidder".into()));
            }
            if let Some(&bad) = treated.iter().find(|&&b| b >= n_bidders) {
                return Err(Error::Config(format!(
                    "treated bidder {bad} out of range (n_bidders = {n_bidders})"
                )));
            }
        }
        Ok(())
    }

    fn sees_site(&self, bidder: usize) -> bool {
        match self {
            Self::None => false,
            Self::Partial { treated } => treated.contains(&bidder),
            Self::Full => true,
        }
    }
}

/// Independent ChaCha stream derived from a base seed and a stream tag.
///
/// Tie-break streams are keyed per impression so that paired runs over the
/// same draw stay aligned impression-by-impression.
pub(crate) fn substream(seed: u64, tag: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    // splitmix64 finalizer on the combined key
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

pub(crate) const STREAM_DRAW: u64 = 1;
pub(crate) const STREAM_TIEBREAK: u64 = 2;
