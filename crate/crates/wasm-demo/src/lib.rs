//! Thin wasm-bindgen wrappers over the core simulator for the static
//! browser demo in `www/`. Every entry point takes plain scalars and
//! returns a JSON string so the page needs no generated bindings beyond
//! the module itself.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use admarket_core::market::{simulate_partial, simulate_scenario, DisclosureRegime, MarketConfig};
use admarket_core::revenue::project_revenue;

fn config(
    n_bidders: usize,
    mu: f64,
    delta: f64,
    sigma: f64,
    omega: f64,
    n_impressions: usize,
    seed: u64,
) -> MarketConfig {
    MarketConfig::two_site(n_bidders, mu, delta, sigma, omega, n_impressions, seed)
}

#[derive(Serialize)]
struct RegimeSide {
    site_mean_price: Vec<f64>,
    site_price_quantiles: Vec<[f64; 3]>,
    mean_price: f64,
    zero_price_sale_share: f64,
    unsold_share: f64,
}

#[derive(Serialize)]
struct Comparison {
    none: RegimeSide,
    full: RegimeSide,
}

fn side(config: &MarketConfig, regime: &DisclosureRegime) -> Result<RegimeSide, String> {
    let (_, summary) = simulate_scenario(config, regime).map_err(|e| e.to_string())?;
    Ok(RegimeSide {
        site_mean_price: summary.site_mean_price,
        site_price_quantiles: summary.site_price_quantiles,
        mean_price: summary.mean_price,
        zero_price_sale_share: summary.zero_price_sale_share,
        unsold_share: summary.unsold_share,
    })
}

/// Simulate the same two-site market under no disclosure and full
/// disclosure, paired on one valuation draw.
#[wasm_bindgen]
pub fn compare_regimes(
    n_bidders: usize,
    mu: f64,
    delta: f64,
    sigma: f64,
    omega: f64,
    n_impressions: usize,
    seed: u64,
) -> Result<String, String> {
    let config = config(n_bidders, mu, delta, sigma, omega, n_impressions, seed);
    let report = Comparison {
        none: side(&config, &DisclosureRegime::None)?,
        full: side(&config, &DisclosureRegime::Full)?,
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PartialSummary {
    treated: usize,
    win_share_treated_none: f64,
    win_share_treated_partial: f64,
    mean_price_treated_none: f64,
    mean_price_treated_partial: f64,
}

/// Give one bidder early access to site information and report how its
/// win share and paid prices move against the undisclosed baseline.
#[wasm_bindgen]
pub fn partial_disclosure(
    n_bidders: usize,
    mu: f64,
    delta: f64,
    sigma: f64,
    omega: f64,
    n_impressions: usize,
    seed: u64,
    treated: usize,
) -> Result<String, String> {
    let config = config(n_bidders, mu, delta, sigma, omega, n_impressions, seed);
    let report = simulate_partial(&config, treated).map_err(|e| e.to_string())?;
    serde_json::to_string(&PartialSummary {
        treated: report.treated,
        win_share_treated_none: report.win_share_treated_none,
        win_share_treated_partial: report.win_share_treated_partial,
        mean_price_treated_none: report.mean_price_treated_none,
        mean_price_treated_partial: report.mean_price_treated_partial,
    })
    .map_err(|e| e.to_string())
}

/// Project per-site, total, and exchange-commission revenue from a CPM
/// uplift applied to a weekly impression supply.
#[wasm_bindgen]
pub fn revenue_projection(
    weekly_supply: f64,
    cpm_uplift: f64,
    weeks: f64,
    n_sites: f64,
    commission: f64,
) -> Result<String, String> {
    let projection = project_revenue(weekly_supply, cpm_uplift, weeks, n_sites, commission)
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&serde_json::json!({
        "per_site": projection.per_site,
        "total": projection.total,
        "exchange": projection.exchange,
    }))
    .map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_regimes_returns_both_sides() {
        let json = compare_regimes(25, 1.0, 0.0, 1.0, 1.0, 200, 7).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["none"]["site_mean_price"].as_array().unwrap().len(), 2);
        assert!(value["full"]["mean_price"].is_f64());
    }

    #[test]
    fn partial_disclosure_rejects_out_of_range_bidder() {
        let err = partial_disclosure(5, 1.0, 0.0, 1.0, 1.0, 100, 1, 5).unwrap_err();
        assert!(err.contains("treated"));
    }

    #[test]
    fn revenue_projection_matches_core() {
        let json = revenue_projection(3_500_000.0, 0.158, 52.0, 57.0, 0.025).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!((value["per_site"].as_f64().unwrap() - 28_756.0).abs() <= 1.0);
        assert!((value["exchange"].as_f64().unwrap() - 40_977.0).abs() <= 1.0);
    }
}
