use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{substream, DisclosureRegime, MarketConfig, STREAM_DRAW};
use crate::{Error, Result};

/// One realization of bidder-site values, impression residuals, and the
/// site each impression comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationDraw {
    /// `site_values[bidder][site]`
    pub site_values: Vec<Vec<f64>>,
    /// `residuals[bidder][impression]`
    pub residuals: Vec<Vec<f64>>,
    pub site_of_impression: Vec<usize>,
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::Config(format!("bad normal parameters: {e}")))
}

/// Draw all valuation components for one market. Deterministic given the
/// config's seed; the draw order is site values, residuals, then site
/// assignments, each row-major.
pub fn draw_valuations(config: &MarketConfig) -> Result<ValuationDraw> {
    config.validate()?;
    let mut rng = substream(config.seed, STREAM_DRAW);

    let mut site_values = Vec::with_capacity(config.n_bidders);
    for _ in 0..config.n_bidders {
        let mut row = Vec::with_capacity(config.n_sites);
        for k in 0..config.n_sites {
            row.push(normal(config.site_mean(k), config.sigma)?.sample(&mut rng));
        }
        site_values.push(row);
    }

    let residual = normal(0.0, config.omega)?;
    let residuals = (0..config.n_bidders)
        .map(|_| (0..config.n_impressions).map(|_| residual.sample(&mut rng)).collect())
        .collect();

    // inverse-CDF draw from the categorical site distribution
    let mut cumulative = Vec::with_capacity(config.n_sites);
    let mut acc = 0.0;
    for &share in &config.site_shares {
        acc += share;
        cumulative.push(acc);
    }
    let site_of_impression = (0..config.n_impressions)
        .map(|_| {
            let u: f64 = rng.gen();
            cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(config.n_sites - 1)
        })
        .collect();

    Ok(ValuationDraw {
        site_values,
        residuals,
        site_of_impression,
    })
}

/// A bidder's bid for one impression: residual plus either the actual
/// site value (when this bidder sees the site) or the share-weighted
/// average site value (when they do not).
pub fn effective_valuation(
    draw: &ValuationDraw,
    config: &MarketConfig,
    regime: &DisclosureRegime,
    bidder: usize,
    impression: usize,
) -> f64 {
    let residual = draw.residuals[bidder][impression];
    if regime.sees_site(bidder) {
        let site = draw.site_of_impression[impression];
        residual + draw.site_values[bidder][site]
    } else {
        let avg: f64 = config
            .site_shares
            .iter()
            .zip(&draw.site_values[bidder])
            .map(|(share, value)| share * value)
            .sum();
        residual + avg
    }
}
