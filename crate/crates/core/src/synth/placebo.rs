use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    build_outcome_series, build_predictors, fit_weights, gaps_and_mspe, BuyerWeekRecord,
    OutcomeKind, PredictorFilters,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceboConfig {
    pub pre_weeks: Vec<u32>,
    pub intervention_week: u32,
    pub outcome: OutcomeKind,
    pub filters: PredictorFilters,
    /// Donor-quality cutoff: keep buyers whose pre-period MSPE is below
    /// this multiple of the treated buyer's.
    pub mspe_filter_multiple: f64,
}

impl PlaceboConfig {
    pub fn new(pre_weeks: Vec<u32>, intervention_week: u32, outcome: OutcomeKind) -> Self {
        Self {
            pre_weeks,
            intervention_week,
            outcome,
            filters: PredictorFilters::default(),
            mspe_filter_multiple: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceboEntry {
    pub buyer_id: String,
    pub mspe_pre: f64,
    pub mspe_post: f64,
    pub ratio: f64,
    pub retained: bool,
    pub gap: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceboReport {
    pub treated_id: String,
    pub entries: Vec<PlaceboEntry>,
    /// 1-based rank of the treated buyer's MSPE ratio among retained
    /// buyers, largest ratio first.
    pub treated_rank: usize,
    pub retained_count: usize,
    pub p_value: f64,
    /// Buyers skipped because a synthetic control could not be built for
    /// them (e.g. absent from a pre-week).
    pub skipped: Vec<String>,
}

/// Permutation p-value from MSPE ratios. `retained_ratios` must include
/// the treated buyer's own ratio, so the count in the numerator is at
/// least one and the p-value is always positive.
pub fn p_value_from_ratios(treated_ratio: f64, retained_ratios: &[f64]) -> f64 {
    let exceeding = retained_ratios.iter().filter(|&&r| r >= treated_ratio).count();
    exceeding as f64 / retained_ratios.len() as f64
}

fn mspe_ratio(pre: f64, post: f64) -> f64 {
    if pre > 0.0 {
        post / pre
    } else if post > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Fit a synthetic control for every buyer in turn (donors = all other
/// buyers), filter placebo buyers by pre-period fit quality relative to
/// the treated buyer, and rank post/pre MSPE ratios.
pub fn placebo_inference(
    records: &[BuyerWeekRecord],
    treated_id: &str,
    config: &PlaceboConfig,
) -> Result<PlaceboReport> {
    let buyers: Vec<String> = records
        .iter()
        .map(|r| r.buyer_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if buyers.len() < 2 {
        return Err(Error::Input("placebo inference needs at least 2 buyers".into()));
    }
    if !buyers.iter().any(|b| b == treated_id) {
        return Err(Error::Input(format!("treated buyer '{treated_id}' not in records")));
    }

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for buyer in &buyers {
        let fit = (|| -> Result<PlaceboEntry> {
            let pm = build_predictors(records, buyer, &config.pre_weeks, &config.filters)?;
            let weights = fit_weights(&pm)?;
            let outcome =
                build_outcome_series(records, buyer, &pm.donor_ids, config.outcome, &config.filters)?;
            let done = gaps_and_mspe(&weights, &outcome, config.intervention_week)?;
            Ok(PlaceboEntry {
                buyer_id: buyer.clone(),
                mspe_pre: done.mspe_pre,
                mspe_post: done.mspe_post,
                ratio: mspe_ratio(done.mspe_pre, done.mspe_post),
                retained: false,
                gap: done.gap,
            })
        })();
        match fit {
            Ok(entry) => entries.push(entry),
            Err(e) => {
                if buyer == treated_id {
                    return Err(e);
                }
                skipped.push(buyer.clone());
            }
        }
    }

    let treated = entries
        .iter()
        .find(|e| e.buyer_id == treated_id)
        .expect("treated entry present")
        .clone();
    let cutoff = config.mspe_filter_multiple * treated.mspe_pre;
    for entry in &mut entries {
        // the treated buyer trivially passes its own threshold
        entry.retained = entry.buyer_id == treated_id || entry.mspe_pre < cutoff;
    }

    let retained_ratios: Vec<f64> = entries.iter().filter(|e| e.retained).map(|e| e.ratio).collect();
    let p_value = p_value_from_ratios(treated.ratio, &retained_ratios);
    let treated_rank = retained_ratios.iter().filter(|&&r| r > treated.ratio).count() + 1;

    Ok(PlaceboReport {
        treated_id: treated_id.to_string(),
        treated_rank,
        retained_count: retained_ratios.len(),
        p_value,
        entries,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_counting_rule() {
        // exactly one of 127 retained buyers exceeds the treated ratio
        let mut ratios = vec![0.5; 125];
        ratios.push(10.0); // treated
        ratios.push(12.0); // the one exceeder
        let p = p_value_from_ratios(10.0, &ratios);
        assert_eq!(ratios.len(), 127);
        assert!((p - 2.0 / 127.0).abs() < 1e-15);
        assert_eq!(format!("{:.3}", p), "0.016");
    }

    #[test]
    fn worst_rank_gives_p_one() {
        let ratios: Vec<f64> = (1..=15).map(|i| i as f64).collect();
        assert_eq!(p_value_from_ratios(1.0, &ratios), 1.0);
    }

    #[test]
    fn best_rank_gives_one_over_count() {
        let mut ratios = vec![0.1; 19];
        ratios.push(5.0);
        assert!((p_value_from_ratios(5.0, &ratios) - 0.05).abs() < 1e-15);
    }

    fn record(buyer: &str, week: u32, impressions: u64, price: f64) -> BuyerWeekRecord {
        BuyerWeekRecord {
            buyer_id: buyer.into(),
            week,
            genre: "general".into(),
            impressions_won: impressions,
            avg_price: price,
        }
    }

    #[test]
    fn end_to_end_detects_injected_jump() {
        // 8 buyers whose trajectories wobble around distinct levels; the
        // treated buyer sits inside the donor hull and jumps after the
        // intervention
        let mut records = Vec::new();
        for b in 0..8u64 {
            for week in 1..=12u32 {
                let base = if b == 0 { 135 } else { 100 + 10 * b };
                let wobble = (b * 7 + week as u64 * 13) % 5;
                let bump = if b == 0 && week >= 9 { 200 } else { 0 };
                records.push(record(
                    &format!("b{b}"),
                    week,
                    base + wobble + bump,
                    1.0 + b as f64 * 0.05,
                ));
            }
        }
        let mut config = PlaceboConfig::new((1..=8).collect(), 9, OutcomeKind::Impressions);
        config.filters = PredictorFilters::raw();
        let report = placebo_inference(&records, "b0", &config).unwrap();
        assert_eq!(report.treated_rank, 1);
        assert!((report.p_value - 1.0 / report.retained_count as f64).abs() < 1e-12);
        assert!(report.entries.iter().any(|e| e.buyer_id == "b0" && e.retained));
    }
}
