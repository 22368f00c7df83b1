//! Weighted fixed-effects regression with cluster-robust inference and
//! diff-in-diff design matrices.

mod cluster;
mod design;
mod wls;

pub use cluster::cluster_robust_se;
pub use design::{build_design, DesignMatrix, Factor, ModelSpec, PanelObservation, Term};
pub use wls::{fit_wls, within_transform, RegressionFit};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Full diff-in-diff pipeline: design matrix, weighted within transform,
/// WLS fit, week-clustered standard errors. Columns that demean to zero
/// (time-invariant under site fixed effects) are dropped and recorded on
/// the fit.
pub fn estimate_did(panel: &[PanelObservation], spec: &ModelSpec) -> Result<RegressionFit> {
    let design = build_design(panel, spec)?;
    let demeaned = within_transform(&design)?;
    let (kept, dropped) = demeaned.drop_degenerate();
    if kept.x.ncols() == 0 {
        return Err(Error::DegenerateColumns(dropped));
    }
    let mut fit = fit_wls(&kept)?;
    fit.std_errors = cluster_robust_se(&fit, &kept)?;
    fit.dropped = dropped;
    Ok(fit)
}

/// Sum of a base coefficient and its interaction coefficients, i.e. the
/// marginal effect for units carrying those interaction tags.
pub fn marginal_effect(fit: &RegressionFit, terms: &[&str]) -> Result<f64> {
    terms
        .iter()
        .map(|t| {
            fit.coefficients
                .get(*t)
                .copied()
                .ok_or_else(|| Error::Input(format!("term '{t}' not in fit")))
        })
        .sum()
}

/// Two-sided p-value from a t statistic with `df` degrees of freedom.
pub fn t_p_value(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Significance stars at the 1/5/10% levels against a t distribution
/// with `clusters - 1` degrees of freedom.
pub fn significance_stars(estimate: f64, se: f64, n_clusters: usize) -> &'static str {
    if se <= 0.0 || n_clusters < 2 {
        return "";
    }
    let p = t_p_value(estimate / se, (n_clusters - 1) as f64);
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}
