//! Back-of-the-envelope revenue projection from a CPM uplift.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Projected additional revenue from a per-thousand price uplift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueProjection {
    /// Additional revenue per site over the projection horizon.
    pub per_site: f64,
    /// Across all sites.
    pub total: f64,
    /// The exchange's commission share of the total.
    pub exchange: f64,
}

/// Project yearly revenue gains: `per_site = weekly_supply / 1000 x
/// cpm_uplift x weeks`, scaled by the site count and the exchange's
/// commission rate. All inputs must be positive (a zero uplift is allowed
/// so a no-effect projection reports zeros).
pub fn project_revenue(
    weekly_supply: f64,
    cpm_uplift: f64,
    weeks: f64,
    n_sites: f64,
    commission: f64,
) -> Result<RevenueProjection> {
    for (name, value) in [
        ("weekly_supply", weekly_supply),
        ("weeks", weeks),
        ("n_sites", n_sites),
        ("commission", commission),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Input(format!("{name} must be positive, got {value}")));
        }
    }
    if !(cpm_uplift >= 0.0) || !cpm_uplift.is_finite() {
        return Err(Error::Input(format!("cpm_uplift must be >= 0, got {cpm_uplift}")));
    }
    let per_site = weekly_supply / 1000.0 * cpm_uplift * weeks;
    let total = per_site * n_sites;
    Ok(RevenueProjection {
        per_site,
        total,
        exchange: total * commission,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_projection() {
        let p = project_revenue(3_500_000.0, 0.158, 52.0, 57.0, 0.025).unwrap();
        assert!((p.per_site - 28_756.0).abs() <= 1.0);
        assert!((p.total - 1_639_092.0).abs() <= 1.0);
        assert!((p.exchange - 40_977.0).abs() <= 1.0);
    }

    #[test]
    fn zero_uplift_projects_zero() {
        let p = project_revenue(1_000_000.0, 0.0, 52.0, 10.0, 0.1).unwrap();
        assert_eq!((p.per_site, p.total, p.exchange), (0.0, 0.0, 0.0));
    }

    #[test]
    fn unit_case() {
        let p = project_revenue(1000.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((p.per_site, p.total, p.exchange), (1.0, 1.0, 1.0));
    }

    #[test]
    fn non_positive_inputs_rejected() {
        assert!(project_revenue(0.0, 0.1, 52.0, 1.0, 0.1).is_err());
        assert!(project_revenue(1.0, -0.1, 52.0, 1.0, 0.1).is_err());
        assert!(project_revenue(1.0, 0.1, 52.0, 1.0, f64::NAN).is_err());
    }
}
