use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{DesignMatrix, RegressionFit};
use crate::{Error, Result};

/// Liang-Zeger sandwich covariance with clusters from the design.
///
/// `V = c (X'WX)^-1 (sum_g u_g u_g') (X'WX)^-1` with score
/// `u_g = sum_{i in g} w_i e_i x_i` and small-sample correction
/// `c = [G/(G-1)] [(n-1)/(n-k)]`, where `k` counts fitted plus absorbed
/// parameters.
pub fn cluster_robust_se(
    fit: &RegressionFit,
    design: &DesignMatrix,
) -> Result<BTreeMap<String, f64>> {
    let g = design.n_clusters;
    if g < 2 {
        return Err(Error::Inference("need at least 2 clusters".into()));
    }
    let n = design.x.nrows();
    let k = design.x.ncols();
    if fit.residuals.len() != n {
        return Err(Error::Inference("fit and design have different row counts".into()));
    }

    let mut xtwx: DMatrix<f64> = DMatrix::zeros(k, k);
    for r in 0..n {
        let w = design.weights[r];
        for a in 0..k {
            for b in 0..k {
                xtwx[(a, b)] += w * design.x[(r, a)] * design.x[(r, b)];
            }
        }
    }
    let bread = xtwx
        .try_inverse()
        .ok_or_else(|| Error::SingularDesign(design.column_names.clone()))?;

    let mut scores: Vec<DVector<f64>> = vec![DVector::<f64>::zeros(k); g];
    for r in 0..n {
        let scale = design.weights[r] * fit.residuals[r];
        let score = &mut scores[design.cluster_ids[r]];
        for c in 0..k {
            score[c] += scale * design.x[(r, c)];
        }
    }
    let mut meat: DMatrix<f64> = DMatrix::zeros(k, k);
    for score in &scores {
        meat += score * score.transpose();
    }

    let nf = n as f64;
    let gf = g as f64;
    let correction = (gf / (gf - 1.0)) * ((nf - 1.0) / (nf - fit.k_total as f64));
    let cov: DMatrix<f64> = &bread * meat * &bread * correction;

    Ok(design
        .column_names
        .iter()
        .enumerate()
        .map(|(c, name)| (name.clone(), cov[(c, c)].sqrt()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econ::fit_wls;

    fn design(
        x: DMatrix<f64>,
        y: Vec<f64>,
        w: Vec<f64>,
        clusters: Vec<usize>,
    ) -> DesignMatrix {
        let n_clusters = clusters.iter().max().unwrap() + 1;
        let n = y.len();
        DesignMatrix {
            column_names: (0..x.ncols()).map(|c| format!("x{c}")).collect(),
            x,
            y: DVector::from_vec(y),
            weights: DVector::from_vec(w),
            cluster_ids: clusters,
            site_ids: vec![0; n],
            n_clusters,
            n_sites: 1,
            degenerate: Vec::new(),
            demeaned: false,
            count_absorbed_fe: false,
        }
    }

    /// Brute-force HC (White) standard errors with the same finite-sample
    /// factor, for the singleton-cluster comparison.
    fn hc_oracle(x: &DMatrix<f64>, residuals: &DVector<f64>, w: &[f64], k_total: usize) -> Vec<f64> {
        let n = x.nrows();
        let k = x.ncols();
        let mut xtwx: DMatrix<f64> = DMatrix::zeros(k, k);
        let mut meat: DMatrix<f64> = DMatrix::zeros(k, k);
        for r in 0..n {
            for a in 0..k {
                for b in 0..k {
                    xtwx[(a, b)] += w[r] * x[(r, a)] * x[(r, b)];
                    meat[(a, b)] += (w[r] * residuals[r]).powi(2) * x[(r, a)] * x[(r, b)];
                }
            }
        }
        let bread = xtwx.try_inverse().unwrap();
        let nf = n as f64;
        let c = (nf / (nf - 1.0)) * ((nf - 1.0) / (nf - k_total as f64));
        let cov: DMatrix<f64> = &bread * meat * &bread * c;
        (0..k).map(|i| cov[(i, i)].sqrt()).collect()
    }

    #[test]
    fn singleton_clusters_match_hc_oracle() {
        let x = DMatrix::from_fn(8, 2, |r, c| ((r * 3 + c * 5) % 7) as f64 + 0.5);
        let y = vec![1.0, 3.0, 2.0, 5.0, 4.0, 6.5, 3.5, 7.0];
        let w = vec![1.0; 8];
        let d = design(x.clone(), y, w.clone(), (0..8).collect());
        let fit = fit_wls(&d).unwrap();
        let se = cluster_robust_se(&fit, &d).unwrap();
        let oracle = hc_oracle(&x, &fit.residuals, &w, fit.k_total);
        for (c, expected) in oracle.iter().enumerate() {
            let got = se[&format!("x{c}")];
            assert!((got - expected).abs() < 1e-10, "col {c}: {got} vs {expected}");
        }
    }

    #[test]
    fn duplicating_rows_within_cluster_only_changes_correction() {
        let x = DMatrix::from_column_slice(6, 1, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = vec![1.1, 1.9, 3.2, 3.8, 5.1, 5.9];
        let clusters = vec![0, 0, 1, 1, 2, 2];
        let d = design(x.clone(), y.clone(), vec![1.0; 6], clusters.clone());
        let fit = fit_wls(&d).unwrap();
        let se = cluster_robust_se(&fit, &d).unwrap()["x0"];

        // duplicate every row, staying in the same cluster
        let mut xv = Vec::new();
        let mut yv = Vec::new();
        let mut cl = Vec::new();
        for r in 0..6 {
            for _ in 0..2 {
                xv.push(x[(r, 0)]);
                yv.push(y[r]);
                cl.push(clusters[r]);
            }
        }
        let d2 = design(DMatrix::from_column_slice(12, 1, &xv), yv, vec![1.0; 12], cl);
        let fit2 = fit_wls(&d2).unwrap();
        assert!((fit2.coefficient("x0").unwrap() - fit.coefficient("x0").unwrap()).abs() < 1e-12);
        let se2 = cluster_robust_se(&fit2, &d2).unwrap()["x0"];

        // scores per cluster double, meat quadruples, bread halves: the
        // uncorrected variance is unchanged, so the ratio is pure c2/c1
        let c1 = (3.0 / 2.0) * (5.0 / (6.0 - fit.k_total as f64));
        let c2 = (3.0 / 2.0) * (11.0 / (12.0 - fit2.k_total as f64));
        assert!(((se2 / se).powi(2) - c2 / c1).abs() < 1e-10);
    }

    #[test]
    fn single_cluster_rejected() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let d = design(x, vec![1.0, 2.0, 3.5], vec![1.0; 3], vec![0, 0, 0]);
        let fit = fit_wls(&d).unwrap();
        assert!(cluster_robust_se(&fit, &d).is_err());
    }
}
