use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One site-week row of an estimation panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub site_id: String,
    pub week: u32,
    /// Treatment-year indicator: true for rows from the year in which the
    /// disclosure rollout happened, false for the comparison year.
    pub year16: bool,
    /// Revenue per thousand supplied impressions, or average daily buyers
    /// for the buyer-count specification.
    pub outcome: f64,
    /// Regression weight: impressions supplied that week.
    pub weight: f64,
    pub supply_millions: f64,
    /// Pre-treatment average daily buyers; constant within a site.
    pub avg_daily_buyers_pre: f64,
    pub monthly_ad_spend: f64,
    /// Period indicator: set in both years once the partial-disclosure
    /// window opens; the interaction with `year16` marks real treatment.
    pub partial_flag: bool,
    pub full_flag: bool,
    /// Group labels for heterogeneous-effect interactions.
    pub tags: BTreeSet<String>,
}

impl PanelObservation {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0) {
            return Err(Error::Input(format!(
                "site {} week {}: weight must be > 0, got {}",
                self.site_id, self.week, self.weight
            )));
        }
        if self.partial_flag && self.full_flag {
            return Err(Error::Input(format!(
                "site {} week {}: partial_flag and full_flag both set",
                self.site_id, self.week
            )));
        }
        Ok(())
    }
}

/// A single regressor factor; a term is a product of factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Partial,
    Full,
    Year16,
    /// 1 for weeks after the placebo split week.
    Placebo,
    SupplyMillions,
    AvgDailyBuyersPre,
    MonthlyAdSpend,
    Tag(String),
}

impl Factor {
    fn name(&self) -> String {
        match self {
            Factor::Partial => "partial".into(),
            Factor::Full => "full".into(),
            Factor::Year16 => "year16".into(),
            Factor::Placebo => "placebo".into(),
            Factor::SupplyMillions => "supply_millions".into(),
            Factor::AvgDailyBuyersPre => "avg_daily_buyers_pre".into(),
            Factor::MonthlyAdSpend => "monthly_ad_spend".into(),
            Factor::Tag(t) => t.clone(),
        }
    }

    fn value(&self, obs: &PanelObservation, placebo_split: Option<u32>) -> Result<f64> {
        Ok(match self {
            Factor::Partial => obs.partial_flag as u8 as f64,
            Factor::Full => obs.full_flag as u8 as f64,
            Factor::Year16 => obs.year16 as u8 as f64,
            Factor::Placebo => {
                let split = placebo_split.ok_or_else(|| {
                    Error::Spec("placebo term used without a placebo split week".into())
                })?;
                (obs.week > split) as u8 as f64
            }
            Factor::SupplyMillions => obs.supply_millions,
            Factor::AvgDailyBuyersPre => obs.avg_daily_buyers_pre,
            Factor::MonthlyAdSpend => obs.monthly_ad_spend,
            Factor::Tag(t) => obs.tags.contains(t) as u8 as f64,
        })
    }
}

/// Product of factors, e.g. `full x year16` or `full x year16 x thin`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn of(factors: impl IntoIterator<Item = Factor>) -> Self {
        Self {
            factors: factors.into_iter().collect(),
        }
    }

    pub fn name(&self) -> String {
        self.factors
            .iter()
            .map(Factor::name)
            .collect::<Vec<_>>()
            .join("_x_")
    }
}

/// Regression specification: outcome label, ordered regressors, optional
/// placebo split. Site fixed effects are always absorbed by the within
/// transform; clustering is at the (year, week) level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub outcome: String,
    pub terms: Vec<Term>,
    #[serde(default)]
    pub placebo_split_week: Option<u32>,
    /// Count absorbed site intercepts in the degrees of freedom used for
    /// adjusted R-squared and the cluster correction.
    #[serde(default = "default_true")]
    pub count_absorbed_fe: bool,
    /// Keep columns flagged as time-invariant instead of dropping them
    /// (the fit will then fail with a singular design).
    #[serde(default)]
    pub keep_time_invariant: bool,
}

fn default_true() -> bool {
    true
}

impl ModelSpec {
    pub fn new(outcome: &str, terms: Vec<Term>) -> Self {
        Self {
            outcome: outcome.to_string(),
            terms,
            placebo_split_week: None,
            count_absorbed_fe: true,
            keep_time_invariant: false,
        }
    }

    /// The headline specification: partial and full disclosure effects
    /// with period and year baselines plus supply and ad-spend controls.
    pub fn headline(outcome: &str) -> Self {
        use Factor::*;
        Self::new(
            outcome,
            vec![
                Term::of([Partial, Year16]),
                Term::of([Full, Year16]),
                Term::of([Partial]),
                Term::of([Full]),
                Term::of([Year16]),
                Term::of([SupplyMillions]),
                Term::of([MonthlyAdSpend]),
            ],
        )
    }

    /// Placebo specification for pre-period rows: a fictional treatment
    /// switching on after `split_week`.
    pub fn placebo(outcome: &str, split_week: u32) -> Self {
        use Factor::*;
        let mut spec = Self::new(
            outcome,
            vec![
                Term::of([Placebo, Year16]),
                Term::of([Placebo]),
                Term::of([Year16]),
                Term::of([SupplyMillions]),
                Term::of([MonthlyAdSpend]),
            ],
        );
        spec.placebo_split_week = Some(split_week);
        spec
    }
}

/// Materialized regression inputs. `cluster_ids` and `site_ids` are dense
/// indices; `degenerate` is filled by the within transform.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub weights: DVector<f64>,
    pub column_names: Vec<String>,
    pub cluster_ids: Vec<usize>,
    pub site_ids: Vec<usize>,
    pub n_clusters: usize,
    pub n_sites: usize,
    /// Column indices flagged as zero-variance after demeaning.
    pub degenerate: Vec<usize>,
    pub demeaned: bool,
    pub count_absorbed_fe: bool,
}

impl DesignMatrix {
    /// Split off flagged columns; returns the reduced design and the
    /// names of the dropped columns.
    pub fn drop_degenerate(&self) -> (DesignMatrix, Vec<String>) {
        if self.degenerate.is_empty() {
            return (self.clone(), Vec::new());
        }
        let keep: Vec<usize> = (0..self.x.ncols())
            .filter(|c| !self.degenerate.contains(c))
            .collect();
        let dropped = self
            .degenerate
            .iter()
            .map(|&c| self.column_names[c].clone())
            .collect();
        let x = DMatrix::from_fn(self.x.nrows(), keep.len(), |r, c| self.x[(r, keep[c])]);
        let column_names = keep.iter().map(|&c| self.column_names[c].clone()).collect();
        (
            DesignMatrix {
                x,
                column_names,
                degenerate: Vec::new(),
                ..self.clone()
            },
            dropped,
        )
    }
}

fn dense_index<T: Ord + Clone>(keys: impl Iterator<Item = T>) -> (Vec<usize>, usize) {
    let keys: Vec<T> = keys.collect();
    let uniq: BTreeSet<T> = keys.iter().cloned().collect();
    let uniq: Vec<T> = uniq.into_iter().collect();
    let ids = keys
        .iter()
        .map(|k| uniq.binary_search(k).expect("key present"))
        .collect();
    (ids, uniq.len())
}

/// Build the regression inputs for `spec` over `panel`. Columns appear in
/// the spec's declared term order; the intercept is left to fixed-effect
/// absorption.
pub fn build_design(panel: &[PanelObservation], spec: &ModelSpec) -> Result<DesignMatrix> {
    if panel.is_empty() {
        return Err(Error::Input("empty panel".into()));
    }
    for obs in panel {
        obs.validate()?;
    }
    // interactions may only reference tags that exist somewhere
    let known_tags: BTreeSet<&String> = panel.iter().flat_map(|o| &o.tags).collect();
    for term in &spec.terms {
        for factor in &term.factors {
            if let Factor::Tag(t) = factor {
                if !known_tags.contains(t) {
                    return Err(Error::Spec(format!("unknown tag '{t}' in term {}", term.name())));
                }
            }
        }
    }

    let n = panel.len();
    let k = spec.terms.len();
    let mut x = DMatrix::zeros(n, k);
    for (r, obs) in panel.iter().enumerate() {
        for (c, term) in spec.terms.iter().enumerate() {
            let mut value = 1.0;
            for factor in &term.factors {
                value *= factor.value(obs, spec.placebo_split_week)?;
            }
            x[(r, c)] = value;
        }
    }
    let y = DVector::from_iterator(n, panel.iter().map(|o| o.outcome));
    let weights = DVector::from_iterator(n, panel.iter().map(|o| o.weight));
    let (cluster_ids, n_clusters) =
        dense_index(panel.iter().map(|o| (o.year16, o.week)));
    let (site_ids, n_sites) = dense_index(panel.iter().map(|o| o.site_id.clone()));

    Ok(DesignMatrix {
        x,
        y,
        weights,
        column_names: spec.terms.iter().map(Term::name).collect(),
        cluster_ids,
        site_ids,
        n_clusters,
        n_sites,
        degenerate: Vec::new(),
        demeaned: false,
        count_absorbed_fe: spec.count_absorbed_fe,
    })
}
