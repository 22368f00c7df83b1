use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BuyerWeekRecord, OutcomeSeries};
use crate::{Error, Result};

/// Record-level filters applied before aggregation, with the reference
/// defaults of a 10.0 CPM price cap and a 500-impression volume floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorFilters {
    pub price_cap: f64,
    pub volume_floor: u64,
    /// Divide each predictor row by its standard deviation across units,
    /// so impression counts do not swamp prices in the objective.
    pub standardize: bool,
}

impl Default for PredictorFilters {
    fn default() -> Self {
        Self {
            price_cap: 10.0,
            volume_floor: 500,
            standardize: true,
        }
    }
}

impl PredictorFilters {
    /// No filtering, no scaling; useful for small synthetic fixtures.
    pub fn raw() -> Self {
        Self {
            price_cap: f64::INFINITY,
            volume_floor: 0,
            standardize: false,
        }
    }

    fn keep(&self, record: &BuyerWeekRecord) -> bool {
        record.avg_price <= self.price_cap && record.impressions_won >= self.volume_floor
    }
}

/// Stacked pre-treatment predictors for the treated buyer (`x1`) and the
/// donor pool (`x0`, one column per donor).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorMatrix {
    pub x1: DVector<f64>,
    pub x0: DMatrix<f64>,
    pub donor_ids: Vec<String>,
    pub labels: Vec<String>,
}

/// Which outcome series a synthetic control tracks; the reference
/// analysis fits a separate control per outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Impressions,
    Price,
}

type Cell = (u64, f64); // (impressions, avg price)

fn aggregate(
    records: &[BuyerWeekRecord],
    filters: &PredictorFilters,
) -> BTreeMap<String, BTreeMap<(u32, String), Cell>> {
    let mut out: BTreeMap<String, BTreeMap<(u32, String), Cell>> = BTreeMap::new();
    for record in records.iter().filter(|r| filters.keep(r)) {
        let cell = out
            .entry(record.buyer_id.clone())
            .or_default()
            .entry((record.week, record.genre.clone()))
            .or_insert((0, 0.0));
        // merge duplicate cells by impression-weighted price
        let total = cell.0 + record.impressions_won;
        if total > 0 {
            cell.1 = (cell.1 * cell.0 as f64
                + record.avg_price * record.impressions_won as f64)
                / total as f64;
        }
        cell.0 = total;
    }
    out
}

fn week_totals(cells: &BTreeMap<(u32, String), Cell>, week: u32) -> (u64, f64) {
    let mut impressions = 0u64;
    let mut spend = 0.0;
    for ((w, _), &(count, price)) in cells {
        if *w == week {
            impressions += count;
            spend += price * count as f64;
        }
    }
    let avg = if impressions > 0 {
        spend / impressions as f64
    } else {
        0.0
    };
    (impressions, avg)
}

/// Build the predictor stack for `treated_id` against every other buyer
/// in `records` over `pre_weeks`: per-genre-week impression counts, per-
/// genre-week average prices, per-week totals, and per-week average
/// prices. Price rows where any unit lacks data are excluded rather than
/// imputed; impression cells default to zero.
pub fn build_predictors(
    records: &[BuyerWeekRecord],
    treated_id: &str,
    pre_weeks: &[u32],
    filters: &PredictorFilters,
) -> Result<PredictorMatrix> {
    if pre_weeks.is_empty() {
        return Err(Error::Input("pre_weeks must be nonempty".into()));
    }
    let by_buyer = aggregate(records, filters);
    let treated = by_buyer
        .get(treated_id)
        .ok_or_else(|| Error::Input(format!("treated buyer '{treated_id}' has no records")))?;

    let missing: Vec<u32> = pre_weeks
        .iter()
        .copied()
        .filter(|&w| !treated.keys().any(|(week, _)| *week == w))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Input(format!(
            "treated buyer '{treated_id}' absent from pre-weeks {missing:?}"
        )));
    }

    let donor_ids: Vec<String> = by_buyer.keys().filter(|id| *id != treated_id).cloned().collect();
    if donor_ids.is_empty() {
        return Err(Error::Input("no donor buyers".into()));
    }
    let genres: BTreeSet<String> = by_buyer
        .values()
        .flat_map(|cells| cells.keys().map(|(_, g)| g.clone()))
        .collect();

    let units: Vec<&BTreeMap<(u32, String), Cell>> = std::iter::once(treated)
        .chain(donor_ids.iter().map(|id| &by_buyer[id]))
        .collect();

    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for genre in &genres {
        for &week in pre_weeks {
            let key = (week, genre.clone());
            let counts: Vec<f64> = units
                .iter()
                .map(|cells| cells.get(&key).map_or(0.0, |&(n, _)| n as f64))
                .collect();
            rows.push((format!("impressions[{genre}][w{week}]"), counts));
        }
    }
    for genre in &genres {
        for &week in pre_weeks {
            let key = (week, genre.clone());
            let prices: Vec<Option<f64>> = units
                .iter()
                .map(|cells| cells.get(&key).filter(|&&(n, _)| n > 0).map(|&(_, p)| p))
                .collect();
            if prices.iter().all(Option::is_some) {
                rows.push((
                    format!("price[{genre}][w{week}]"),
                    prices.into_iter().map(Option::unwrap).collect(),
                ));
            }
        }
    }
    for &week in pre_weeks {
        let totals: Vec<(u64, f64)> = units.iter().map(|cells| week_totals(cells, week)).collect();
        rows.push((
            format!("total_impressions[w{week}]"),
            totals.iter().map(|&(n, _)| n as f64).collect(),
        ));
        if totals.iter().all(|&(n, _)| n > 0) {
            rows.push((
                format!("avg_price[w{week}]"),
                totals.iter().map(|&(_, p)| p).collect(),
            ));
        }
    }

    if filters.standardize {
        for (_, values) in &mut rows {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 {
                for v in values.iter_mut() {
                    *v /= sd;
                }
            }
        }
    }

    let p = rows.len();
    let j = donor_ids.len();
    Ok(PredictorMatrix {
        x1: DVector::from_iterator(p, rows.iter().map(|(_, v)| v[0])),
        x0: DMatrix::from_fn(p, j, |r, c| rows[r].1[c + 1]),
        donor_ids,
        labels: rows.into_iter().map(|(label, _)| label).collect(),
    })
}

/// Weekly outcome series for the treated buyer and the given donors,
/// aligned on the sorted set of weeks present in the filtered records.
pub fn build_outcome_series(
    records: &[BuyerWeekRecord],
    treated_id: &str,
    donor_ids: &[String],
    kind: OutcomeKind,
    filters: &PredictorFilters,
) -> Result<OutcomeSeries> {
    let by_buyer = aggregate(records, filters);
    if !by_buyer.contains_key(treated_id) {
        return Err(Error::Input(format!("treated buyer '{treated_id}' has no records")));
    }
    let weeks: Vec<u32> = by_buyer
        .values()
        .flat_map(|cells| cells.keys().map(|(w, _)| *w))
        .collect::<BTreeSet<u32>>()
        .into_iter()
        .collect();

    let series_for = |id: &str| -> Result<Vec<f64>> {
        let cells = by_buyer
            .get(id)
            .ok_or_else(|| Error::Input(format!("buyer '{id}' has no records")))?;
        Ok(weeks
            .iter()
            .map(|&w| {
                let (impressions, avg) = week_totals(cells, w);
                match kind {
                    OutcomeKind::Impressions => impressions as f64,
                    OutcomeKind::Price => avg,
                }
            })
            .collect())
    };

    Ok(OutcomeSeries {
        treated: series_for(treated_id)?,
        donors: donor_ids
            .iter()
            .map(|id| series_for(id))
            .collect::<Result<Vec<_>>>()?,
        weeks,
    })
}
