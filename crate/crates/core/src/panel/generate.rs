use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::aggregate_outcomes;
use crate::econ::PanelObservation;
use crate::market::{simulate_scenario, DisclosureRegime, MarketConfig};
use crate::{Error, Result};

/// Two-year treatment timeline: the partial-disclosure window opens at
/// `partial_start_week`, full disclosure at `full_start_week`. The flags
/// mark the calendar periods in both years; interacting them with the
/// treatment-year indicator isolates the actual treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineConfig {
    pub weeks_per_year: u32,
    pub partial_start_week: u32,
    pub full_start_week: u32,
    /// Set the period flags in the treatment year only instead of both.
    #[serde(default)]
    pub treatment_year_only: bool,
}

impl TimelineConfig {
    /// Eleven pre weeks, four partial weeks, twelve full weeks.
    pub fn reference() -> Self {
        Self {
            weeks_per_year: 27,
            partial_start_week: 12,
            full_start_week: 16,
            treatment_year_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.partial_start_week
            && self.partial_start_week < self.full_start_week
            && self.full_start_week <= self.weeks_per_year)
        {
            return Err(Error::Config(format!(
                "need 1 <= partial_start ({}) < full_start ({}) <= weeks_per_year ({})",
                self.partial_start_week, self.full_start_week, self.weeks_per_year
            )));
        }
        Ok(())
    }
}

/// One panel site: its market parameterization and group tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSpec {
    pub site_id: String,
    pub market: MarketConfig,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

/// How treatment enters the generated panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InjectionMode {
    /// Simulate the market and switch disclosure regimes at the
    /// configured weeks in the treatment year.
    Mechanism,
    /// Skip the market mechanism: build the outcome as a known linear
    /// function of the regressors plus optional noise, and add the
    /// uplifts to treated cells. Gives exact recovery targets.
    ReducedForm {
        partial_uplift: f64,
        full_uplift: f64,
        #[serde(default)]
        noise_sd: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelGenConfig {
    pub timeline: TimelineConfig,
    pub sites: Vec<SiteSpec>,
    pub mode: InjectionMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub mode: InjectionMode,
    pub n_sites: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPanel {
    pub observations: Vec<PanelObservation>,
    pub provenance: Provenance,
}

// Reduced-form data-generating coefficients. They are arbitrary but
// fixed: the estimator must recover the uplifts regardless.
const YEAR_SHIFT: f64 = 0.02;
const PARTIAL_PERIOD_SHIFT: f64 = 0.01;
const FULL_PERIOD_SHIFT: f64 = 0.015;
const SUPPLY_SLOPE: f64 = -0.05;
const AD_SPEND_SLOPE: f64 = 0.03;

fn seasonal_supply(base: usize, week: u32, weeks_per_year: u32) -> u64 {
    let phase = 2.0 * std::f64::consts::PI * (week - 1) as f64 / weeks_per_year as f64;
    ((base as f64) * (1.0 + 0.3 * phase.cos())).round().max(1.0) as u64
}

fn ad_spend(week: u32, weeks_per_year: u32) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * (week - 1) as f64 / weeks_per_year as f64;
    2.0 + 0.5 * phase.sin()
}

fn cell_stream_tag(site: usize, year16: bool, week: u32) -> u64 {
    0x7000_0000_0000_0000 | ((site as u64) << 24) | ((year16 as u64) << 16) | week as u64
}

/// Simulate (or construct) a two-year site-week panel with the treatment
/// timeline applied in the treatment year.
pub fn generate_panel(config: &PanelGenConfig) -> Result<GeneratedPanel> {
    config.timeline.validate()?;
    if config.sites.len() < 2 {
        return Err(Error::Config("need at least 2 sites".into()));
    }
    for site in &config.sites {
        site.market.validate()?;
    }

    let timeline = &config.timeline;
    let mut observations = Vec::new();
    for (site_idx, site) in config.sites.iter().enumerate() {
        let mut site_rows = Vec::new();
        for year16 in [false, true] {
            for week in 1..=timeline.weeks_per_year {
                let in_partial_period =
                    week >= timeline.partial_start_week && week < timeline.full_start_week;
                let in_full_period = week >= timeline.full_start_week;
                let (partial_flag, full_flag) = if timeline.treatment_year_only && !year16 {
                    (false, false)
                } else {
                    (in_partial_period, in_full_period)
                };

                let supply =
                    seasonal_supply(site.market.n_impressions, week, timeline.weeks_per_year);
                let supply_millions = supply as f64 / 1e6;
                let spend = ad_spend(week, timeline.weeks_per_year);

                let mut stream =
                    crate::market::substream(config.seed, cell_stream_tag(site_idx, year16, week));

                let (outcome, avg_daily_buyers) = match &config.mode {
                    InjectionMode::Mechanism => {
                        let regime = if year16 && in_full_period {
                            DisclosureRegime::Full
                        } else if year16 && in_partial_period {
                            DisclosureRegime::partial([0])
                        } else {
                            DisclosureRegime::None
                        };
                        let market = MarketConfig {
                            n_impressions: supply as usize,
                            seed: stream.gen(),
                            ..site.market.clone()
                        };
                        let (outcomes, _) = simulate_scenario(&market, &regime)?;
                        match aggregate_outcomes(&outcomes, supply)? {
                            Some(agg) => (agg.cpm, agg.avg_daily_buyers),
                            None => continue, // zero supply: row omitted
                        }
                    }
                    InjectionMode::ReducedForm {
                        partial_uplift,
                        full_uplift,
                        noise_sd,
                    } => {
                        let site_base = 0.8 + 0.015 * site_idx as f64;
                        let mut cpm = site_base
                            + YEAR_SHIFT * year16 as u8 as f64
                            + PARTIAL_PERIOD_SHIFT * partial_flag as u8 as f64
                            + FULL_PERIOD_SHIFT * full_flag as u8 as f64
                            + SUPPLY_SLOPE * supply_millions
                            + AD_SPEND_SLOPE * spend;
                        if year16 && partial_flag && in_partial_period {
                            cpm += partial_uplift;
                        }
                        if year16 && full_flag && in_full_period {
                            cpm += full_uplift;
                        }
                        if *noise_sd > 0.0 {
                            let noise = Normal::new(0.0, *noise_sd)
                                .map_err(|e| Error::Config(e.to_string()))?;
                            cpm += noise.sample(&mut stream);
                        }
                        (cpm, 30.0 + 2.0 * site_idx as f64)
                    }
                };

                site_rows.push((
                    avg_daily_buyers,
                    PanelObservation {
                        site_id: site.site_id.clone(),
                        week,
                        year16,
                        outcome,
                        weight: supply as f64,
                        supply_millions,
                        avg_daily_buyers_pre: 0.0, // filled below
                        monthly_ad_spend: spend,
                        partial_flag,
                        full_flag,
                        tags: site.tags.clone(),
                    },
                ));
            }
        }

        // pre-treatment daily-buyer mean, constant within the site
        let pre: Vec<f64> = site_rows
            .iter()
            .filter(|(_, o)| !o.year16)
            .map(|(b, _)| *b)
            .collect();
        let pre_mean = if pre.is_empty() {
            0.0
        } else {
            pre.iter().sum::<f64>() / pre.len() as f64
        };
        for (_, mut obs) in site_rows {
            obs.avg_daily_buyers_pre = pre_mean;
            observations.push(obs);
        }
    }

    Ok(GeneratedPanel {
        observations,
        provenance: Provenance {
            seed: config.seed,
            mode: config.mode.clone(),
            n_sites: config.sites.len(),
        },
    })
}
