use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use admarket_core::econ::{estimate_did, significance_stars, ModelSpec};
use admarket_core::market::{simulate_scenario, AuctionOutcome, DisclosureRegime, MarketConfig, ScenarioSummary};
use admarket_core::panel::{load_panel, serialize_panel, PanelGenConfig};
use admarket_core::revenue::project_revenue as project;
use admarket_core::synth::{
    build_outcome_series, build_predictors, fit_weights, gaps_and_mspe, load_records,
    placebo_inference, BuyerWeekRecord, OutcomeKind, PlaceboConfig, PredictorFilters,
};

use crate::errors::CliError;
use crate::manifest::RunManifest;

/// 12-significant-digit float text, matching the panel file format.
fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| CliError::user(format!("bad {what} in {}: {e}", path.display())))
}

// ---------------------------------------------------------------- simulate

#[derive(Deserialize)]
struct SimulateFile {
    #[serde(flatten)]
    market: MarketConfig,
    regime: Option<DisclosureRegime>,
}

fn outcomes_csv(outcomes: &[AuctionOutcome]) -> String {
    let mut text = String::from("impression_id,site_id,winner,price,n_participants\n");
    for o in outcomes {
        let winner = o.winner.map(|w| w.to_string()).unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            o.impression_id,
            o.site_id,
            winner,
            fmt_real(o.price),
            o.n_participants
        );
    }
    text
}

fn summary_kv(prefix: &str, s: &ScenarioSummary) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "{prefix}mean_price={}", fmt_real(s.mean_price));
    let _ = writeln!(text, "{prefix}zero_price_sale_share={}", fmt_real(s.zero_price_sale_share));
    let _ = writeln!(text, "{prefix}unsold_share={}", fmt_real(s.unsold_share));
    for (k, mean) in s.site_mean_price.iter().enumerate() {
        let _ = writeln!(text, "{prefix}site_mean_price_{k}={}", fmt_real(*mean));
    }
    text
}

fn summary_csv(s: &ScenarioSummary) -> String {
    let mut text = String::from("site,mean_price,p50,p90,p99\n");
    for (k, (mean, q)) in s.site_mean_price.iter().zip(&s.site_price_quantiles).enumerate() {
        let _ = writeln!(
            text,
            "{k},{},{},{},{}",
            fmt_real(*mean),
            fmt_real(q[0]),
            fmt_real(q[1]),
            fmt_real(q[2])
        );
    }
    text
}

pub fn simulate(
    config_path: &Path,
    seed: Option<u64>,
    regime_flag: Option<&str>,
    treated: &[usize],
    paired: bool,
    out: &Path,
) -> Result<(), CliError> {
    let file: SimulateFile = parse_toml(config_path, "market config")?;
    let mut market = file.market;
    if let Some(seed) = seed {
        market.seed = seed;
    }
    market.validate()?;

    let regime = match regime_flag {
        Some("none") => DisclosureRegime::None,
        Some("full") => DisclosureRegime::Full,
        Some("partial") => DisclosureRegime::Partial {
            treated: treated.iter().copied().collect::<BTreeSet<usize>>(),
        },
        Some(other) => return Err(CliError::user(format!("unknown regime '{other}'"))),
        None => file.regime.clone().ok_or_else(|| {
            CliError::user("no disclosure regime: pass --regime or set [regime] in the config")
        })?,
    };
    regime.validate(market.n_bidders)?;

    ensure_dir(out)?;
    let (outcomes, summary) = simulate_scenario(&market, &regime)?;
    write_file(out, "outcomes.csv", &outcomes_csv(&outcomes))?;
    write_file(out, "summary.csv", &summary_csv(&summary))?;
    let mut kv = summary_kv("", &summary);
    if paired {
        // same seed, so both regimes share the valuation draw
        let (none_outcomes, none_summary) = simulate_scenario(&market, &DisclosureRegime::None)?;
        let (full_outcomes, full_summary) = simulate_scenario(&market, &DisclosureRegime::Full)?;
        write_file(out, "outcomes_none.csv", &outcomes_csv(&none_outcomes))?;
        write_file(out, "outcomes_full.csv", &outcomes_csv(&full_outcomes))?;
        write_file(out, "summary_none.csv", &summary_csv(&none_summary))?;
        write_file(out, "summary_full.csv", &summary_csv(&full_summary))?;
        kv.push_str(&summary_kv("none.", &none_summary));
        kv.push_str(&summary_kv("full.", &full_summary));
    }
    write_file(out, "summary.txt", &kv)?;

    RunManifest::new("simulate")
        .seed(market.seed)
        .input("config", config_path)?
        .write(out)
}

// ----------------------------------------------------------- generate-panel

pub fn generate_panel(config_path: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let mut config: PanelGenConfig = parse_toml(config_path, "panel generation config")?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let panel = admarket_core::panel::generate_panel(&config)?;
    ensure_dir(out)?;
    write_file(out, "panel.csv", &serialize_panel(&panel.observations))?;
    let mut kv = String::new();
    let _ = writeln!(kv, "n_observations={}", panel.observations.len());
    let _ = writeln!(kv, "n_sites={}", panel.provenance.n_sites);
    write_file(out, "summary.txt", &kv)?;

    RunManifest::new("generate-panel")
        .seed(config.seed)
        .input("config", config_path)?
        .write(out)
}

// --------------------------------------------------------------------- did

pub fn did(panel_path: &Path, spec_path: &Path, out: &Path) -> Result<(), CliError> {
    let panel = load_panel(panel_path)?;
    let spec: ModelSpec = parse_toml(spec_path, "model spec")?;
    let fit = estimate_did(&panel, &spec)?;

    ensure_dir(out)?;
    let mut table = String::from("term,estimate,clustered_se,stars\n");
    for term in &fit.terms {
        let estimate = fit.coefficient(term).expect("fitted term");
        let se = fit.std_error(term).expect("fitted term");
        let _ = writeln!(
            table,
            "{term},{},{},{}",
            fmt_real(estimate),
            fmt_real(se),
            significance_stars(estimate, se, fit.n_clusters)
        );
    }
    write_file(out, "coefficients.csv", &table)?;

    let mut kv = String::new();
    let _ = writeln!(kv, "outcome={}", spec.outcome);
    let _ = writeln!(kv, "n={}", fit.n);
    let _ = writeln!(kv, "n_clusters={}", fit.n_clusters);
    let _ = writeln!(kv, "r_squared={}", fmt_real(fit.r_squared));
    let _ = writeln!(kv, "adj_r_squared={}", fmt_real(fit.adj_r_squared));
    let _ = writeln!(kv, "dropped={}", fit.dropped.join(";"));
    write_file(out, "summary.txt", &kv)?;

    RunManifest::new("did")
        .input("panel", panel_path)?
        .input("spec", spec_path)?
        .write(out)
}

// ----------------------------------------------------------- synth/placebo

#[derive(Args)]
pub struct SynthArgs {
    /// Buyer-week records file (delimited text).
    #[arg(long)]
    pub records: PathBuf,
    /// Treated buyer id.
    #[arg(long)]
    pub treated: String,
    /// First treated week; earlier weeks form the pre-period.
    #[arg(long)]
    pub intervention_week: u32,
    /// Outcome series to track.
    #[arg(long, default_value = "impressions", value_parser = ["impressions", "price"])]
    pub outcome: String,
    /// Drop records priced above this CPM.
    #[arg(long, default_value_t = 10.0)]
    pub price_cap: f64,
    /// Drop records with fewer impressions than this.
    #[arg(long, default_value_t = 500)]
    pub volume_floor: u64,
    /// Skip per-predictor standardization.
    #[arg(long)]
    pub no_standardize: bool,
}

impl SynthArgs {
    fn filters(&self) -> PredictorFilters {
        PredictorFilters {
            price_cap: self.price_cap,
            volume_floor: self.volume_floor,
            standardize: !self.no_standardize,
        }
    }

    fn outcome_kind(&self) -> OutcomeKind {
        match self.outcome.as_str() {
            "price" => OutcomeKind::Price,
            _ => OutcomeKind::Impressions,
        }
    }

    fn pre_weeks(&self, records: &[BuyerWeekRecord]) -> Result<Vec<u32>, CliError> {
        let weeks: BTreeSet<u32> = records
            .iter()
            .map(|r| r.week)
            .filter(|&w| w < self.intervention_week)
            .collect();
        if weeks.is_empty() {
            return Err(CliError::user(format!(
                "no pre-period weeks before intervention week {}",
                self.intervention_week
            )));
        }
        Ok(weeks.into_iter().collect())
    }
}

pub fn synth(args: &SynthArgs, out: &Path) -> Result<(), CliError> {
    let records = load_records(&args.records)?;
    let filters = args.filters();
    let pre_weeks = args.pre_weeks(&records)?;
    let pm = build_predictors(&records, &args.treated, &pre_weeks, &filters)?;
    let fit = fit_weights(&pm)?;
    let outcome = build_outcome_series(&records, &args.treated, &pm.donor_ids, args.outcome_kind(), &filters)?;
    let fit = gaps_and_mspe(&fit, &outcome, args.intervention_week)?;

    ensure_dir(out)?;
    let mut weights = String::from("donor_id,weight\n");
    for (id, w) in fit.donor_ids.iter().zip(&fit.weights) {
        let _ = writeln!(weights, "{id},{}", fmt_real(*w));
    }
    write_file(out, "weights.csv", &weights)?;

    let mut gaps = String::from("week,gap\n");
    for (week, gap) in &fit.gap {
        let _ = writeln!(gaps, "{week},{}", fmt_real(*gap));
    }
    write_file(out, "gaps.csv", &gaps)?;

    let mut kv = String::new();
    let _ = writeln!(kv, "treated={}", args.treated);
    let _ = writeln!(kv, "outcome={}", args.outcome);
    let _ = writeln!(kv, "n_donors={}", fit.donor_ids.len());
    let _ = writeln!(kv, "objective={}", fmt_real(fit.objective));
    let _ = writeln!(kv, "converged={}", fit.converged);
    let _ = writeln!(kv, "iterations={}", fit.iterations);
    let _ = writeln!(kv, "mspe_pre={}", fmt_real(fit.mspe_pre));
    let _ = writeln!(kv, "mspe_post={}", fmt_real(fit.mspe_post));
    write_file(out, "summary.txt", &kv)?;

    RunManifest::new("synth")
        .param("treated", &args.treated)
        .param("intervention_week", args.intervention_week)
        .input("records", &args.records)?
        .write(out)
}

pub fn placebo(args: &SynthArgs, out: &Path) -> Result<(), CliError> {
    let records = load_records(&args.records)?;
    let mut config = PlaceboConfig::new(
        args.pre_weeks(&records)?,
        args.intervention_week,
        args.outcome_kind(),
    );
    config.filters = args.filters();
    let report = placebo_inference(&records, &args.treated, &config)?;

    ensure_dir(out)?;
    let mut table = String::from("buyer_id,mspe_pre,mspe_post,ratio,retained\n");
    for entry in &report.entries {
        let _ = writeln!(
            table,
            "{},{},{},{},{}",
            entry.buyer_id,
            fmt_real(entry.mspe_pre),
            fmt_real(entry.mspe_post),
            fmt_real(entry.ratio),
            entry.retained as u8
        );
    }
    write_file(out, "report.csv", &table)?;

    let mut kv = String::new();
    let _ = writeln!(kv, "treated={}", report.treated_id);
    let _ = writeln!(kv, "treated_rank={}", report.treated_rank);
    let _ = writeln!(kv, "retained_count={}", report.retained_count);
    let _ = writeln!(kv, "p_value={}", fmt_real(report.p_value));
    let _ = writeln!(kv, "p_value_3dp={:.3}", report.p_value);
    let _ = writeln!(kv, "skipped={}", report.skipped.join(";"));
    write_file(out, "summary.txt", &kv)?;

    RunManifest::new("placebo")
        .param("treated", &args.treated)
        .param("intervention_week", args.intervention_week)
        .input("records", &args.records)?
        .write(out)
}

// --------------------------------------------------------- project-revenue

pub fn project_revenue(
    weekly_supply: f64,
    cpm_uplift: f64,
    weeks: f64,
    n_sites: f64,
    commission: f64,
    out: &Path,
) -> Result<(), CliError> {
    let projection = project(weekly_supply, cpm_uplift, weeks, n_sites, commission)?;
    ensure_dir(out)?;

    // rounded, human-facing report
    let mut report = String::new();
    let _ = writeln!(report, "per_site={:.0}", projection.per_site);
    let _ = writeln!(report, "total={:.0}", projection.total);
    let _ = writeln!(report, "exchange={:.0}", projection.exchange);
    write_file(out, "report.txt", &report)?;

    // full-precision machine output
    let mut machine = String::new();
    let _ = writeln!(machine, "per_site={}", fmt_real(projection.per_site));
    let _ = writeln!(machine, "total={}", fmt_real(projection.total));
    let _ = writeln!(machine, "exchange={}", fmt_real(projection.exchange));
    write_file(out, "machine.txt", &machine)?;

    RunManifest::new("project-revenue")
        .param("weekly_supply", weekly_supply)
        .param("cpm_uplift", cpm_uplift)
        .param("weeks", weeks)
        .param("n_sites", n_sites)
        .param("commission", commission)
        .write(out)
}
