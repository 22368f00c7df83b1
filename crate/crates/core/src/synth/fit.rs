use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{project_onto_simplex, PredictorMatrix};
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;

/// Donor weights on the simplex plus, once completed by
/// [`gaps_and_mspe`], the treated-minus-synthetic gap trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFit {
    pub donor_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Per-week (week, treated - synthetic) on the outcome.
    pub gap: Vec<(u32, f64)>,
    pub mspe_pre: f64,
    pub mspe_post: f64,
}

/// Outcome trajectories aligned on a common week grid. `donors[j]` must
/// line up with `weeks` and with the predictor matrix's donor order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSeries {
    pub weeks: Vec<u32>,
    pub treated: Vec<f64>,
    pub donors: Vec<Vec<f64>>,
}

/// Minimize `||x1 - X0 w||^2` over the simplex by projected gradient with
/// a fixed `1/L` step. The objective is non-increasing by construction;
/// iteration stops once the per-step improvement falls below machine
/// precision relative to the current objective, so exactly-matchable
/// targets are driven to (numerical) zero rather than parked at the
/// first small step.
pub fn fit_weights(pm: &PredictorMatrix) -> Result<SynthFit> {
    let p = pm.x1.len();
    let j = pm.x0.ncols();
    if p == 0 || j == 0 {
        return Err(Error::Input("empty predictor matrix".into()));
    }
    if pm.x1.iter().any(|v| !v.is_finite()) || pm.x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite predictor values".into()));
    }
    if j == 1 {
        let w = DVector::from_element(1, 1.0);
        let objective = (&pm.x1 - &pm.x0 * &w).norm_squared();
        return Ok(SynthFit {
            donor_ids: pm.donor_ids.clone(),
            weights: vec![1.0],
            objective,
            converged: true,
            iterations: 0,
            gap: Vec::new(),
            mspe_pre: 0.0,
            mspe_post: 0.0,
        });
    }

    let gram = pm.x0.transpose() * &pm.x0;
    let lipschitz = 2.0 * gram.clone().symmetric_eigen().eigenvalues.max().max(f64::MIN_POSITIVE);
    let step = 1.0 / lipschitz;
    let xt_x1 = pm.x0.transpose() * &pm.x1;

    let objective_of = |w: &DVector<f64>| (&pm.x1 - &pm.x0 * w).norm_squared();

    let mut w = DVector::from_element(j, 1.0 / j as f64);
    let mut objective = objective_of(&w);
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let gradient = 2.0 * (&gram * &w - &xt_x1);
        let candidate = &w - step * gradient;
        let projected = DVector::from_vec(project_onto_simplex(candidate.as_slice()));
        let next_objective = objective_of(&projected);
        let improvement = objective - next_objective;
        let stalled = projected == w;
        w = projected;
        objective = next_objective;
        if stalled || improvement <= f64::EPSILON * objective.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(SynthFit {
        donor_ids: pm.donor_ids.clone(),
        weights: w.iter().copied().collect(),
        objective,
        converged,
        iterations,
        gap: Vec::new(),
        mspe_pre: 0.0,
        mspe_post: 0.0,
    })
}

/// Complete a fit with gap series and pre/post MSPE. Weeks strictly
/// before `intervention_week` count as pre-period.
pub fn gaps_and_mspe(
    fit: &SynthFit,
    outcome: &OutcomeSeries,
    intervention_week: u32,
) -> Result<SynthFit> {
    let t = outcome.weeks.len();
    if outcome.treated.len() != t {
        return Err(Error::Alignment(format!(
            "treated series has {} points for {} weeks",
            outcome.treated.len(),
            t
        )));
    }
    if outcome.donors.len() != fit.weights.len() {
        return Err(Error::Alignment(format!(
            "{} donor series for {} weights",
            outcome.donors.len(),
            fit.weights.len()
        )));
    }
    for (j, series) in outcome.donors.iter().enumerate() {
        if series.len() != t {
            return Err(Error::Alignment(format!(
                "donor {j} series has {} points for {t} weeks",
                series.len()
            )));
        }
    }

    let mut completed = fit.clone();
    completed.gap = outcome
        .weeks
        .iter()
        .enumerate()
        .map(|(idx, &week)| {
            let synthetic: f64 = fit
                .weights
                .iter()
                .zip(&outcome.donors)
                .map(|(w, series)| w * series[idx])
                .sum();
            (week, outcome.treated[idx] - synthetic)
        })
        .collect();

    let mspe = |pre: bool| {
        let gaps: Vec<f64> = completed
            .gap
            .iter()
            .filter(|(week, _)| (*week < intervention_week) == pre)
            .map(|(_, g)| g * g)
            .collect();
        if gaps.is_empty() {
            0.0
        } else {
            gaps.iter().sum::<f64>() / gaps.len() as f64
        }
    };
    completed.mspe_pre = mspe(true);
    completed.mspe_post = mspe(false);
    Ok(completed)
}
