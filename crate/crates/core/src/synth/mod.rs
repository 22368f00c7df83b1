//! Synthetic control estimation and MSPE-ratio placebo inference for a
//! treated ad buyer.

mod fit;
mod io;
mod placebo;
mod predictors;
mod simplex;

pub use fit::{fit_weights, gaps_and_mspe, OutcomeSeries, SynthFit};
pub use io::{load_records, parse_records, serialize_records, write_records, RECORDS_HEADER};
pub use placebo::{p_value_from_ratios, placebo_inference, PlaceboConfig, PlaceboEntry, PlaceboReport};
pub use predictors::{build_outcome_series, build_predictors, OutcomeKind, PredictorFilters, PredictorMatrix};
pub use simplex::project_onto_simplex;

use serde::{Deserialize, Serialize};

/// One buyer-genre-week aggregate from the exchange logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyerWeekRecord {
    pub buyer_id: String,
    pub week: u32,
    pub genre: String,
    pub impressions_won: u64,
    /// Average price paid, currency per thousand impressions.
    pub avg_price: f64,
}
