use std::collections::BTreeMap;

use nalgebra::DVector;

use super::DesignMatrix;
use crate::{Error, Result};

/// Coefficients and inference for one weighted fixed-effects fit.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub terms: Vec<String>,
    pub coefficients: BTreeMap<String, f64>,
    /// Cluster-robust standard errors; empty until filled by
    /// [`super::cluster_robust_se`].
    pub std_errors: BTreeMap<String, f64>,
    pub adj_r_squared: f64,
    pub r_squared: f64,
    pub n: usize,
    pub n_clusters: usize,
    /// Columns removed because they demeaned to zero.
    pub dropped: Vec<String>,
    pub residuals: DVector<f64>,
    /// Total parameters counted for degrees of freedom (columns plus
    /// absorbed site intercepts when so configured).
    pub k_total: usize,
}

impl RegressionFit {
    #[cfg(test)]
    pub(crate) fn empty() -> Self {
        Self {
            terms: Vec::new(),
            coefficients: BTreeMap::new(),
            std_errors: BTreeMap::new(),
            adj_r_squared: 0.0,
            r_squared: 0.0,
            n: 0,
            n_clusters: 0,
            dropped: Vec::new(),
            residuals: DVector::zeros(0),
            k_total: 0,
        }
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.coefficients.get(term).copied()
    }

    pub fn std_error(&self, term: &str) -> Option<f64> {
        self.std_errors.get(term).copied()
    }

    pub fn t_statistic(&self, term: &str) -> Option<f64> {
        Some(self.coefficient(term)? / self.std_error(term)?)
    }
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
}

/// Absorb site fixed effects by subtracting the weighted site mean from
/// every column and the outcome. Columns that become numerically zero
/// everywhere (time-invariant regressors) are flagged as degenerate.
pub fn within_transform(design: &DesignMatrix) -> Result<DesignMatrix> {
    if design.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Input("weights must be > 0".into()));
    }
    let n = design.x.nrows();
    let mut site_rows: Vec<Vec<usize>> = vec![Vec::new(); design.n_sites];
    for (r, &site) in design.site_ids.iter().enumerate() {
        site_rows[site].push(r);
    }

    let mut out = design.clone();
    let demean = |column: &mut dyn FnMut(usize) -> f64, rows: &[usize], weights: &DVector<f64>| {
        let values: Vec<f64> = rows.iter().map(|&r| column(r)).collect();
        let w: Vec<f64> = rows.iter().map(|&r| weights[r]).collect();
        weighted_mean(&values, &w)
    };

    for rows in &site_rows {
        for c in 0..design.x.ncols() {
            let mean = demean(&mut |r| design.x[(r, c)], rows, &design.weights);
            for &r in rows {
                out.x[(r, c)] -= mean;
            }
        }
        let mean = demean(&mut |r| design.y[r], rows, &design.weights);
        for &r in rows {
            out.y[r] -= mean;
        }
    }

    // flag columns annihilated by the transform, scaled to the column's
    // original magnitude
    out.degenerate.clear();
    for c in 0..out.x.ncols() {
        let scale: f64 = (0..n).map(|r| design.x[(r, c)].abs()).fold(0.0, f64::max);
        let residual: f64 = (0..n).map(|r| out.x[(r, c)].abs()).fold(0.0, f64::max);
        if residual <= 1e-10 * scale.max(1.0) {
            out.degenerate.push(c);
        }
    }
    out.demeaned = true;
    Ok(out)
}

/// Weighted least squares on the (usually demeaned) design via QR of the
/// sqrt-weight-scaled matrix.
pub fn fit_wls(design: &DesignMatrix) -> Result<RegressionFit> {
    let n = design.x.nrows();
    let k = design.x.ncols();
    if n < k {
        return Err(Error::Input(format!("{n} rows for {k} columns")));
    }
    let sqrt_w = design.weights.map(f64::sqrt);
    let mut xs = design.x.clone();
    let mut ys = design.y.clone();
    for r in 0..n {
        for c in 0..k {
            xs[(r, c)] *= sqrt_w[r];
        }
        ys[r] *= sqrt_w[r];
    }

    // column-pivoted QR for rank detection with named offenders; the
    // least-squares solve itself goes through the SVD
    let qr = xs.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
    let max_diag = diag.iter().fold(0.0f64, |a, &b| a.max(b));
    let bad: Vec<usize> = (0..k).filter(|&i| diag[i] <= 1e-10 * max_diag.max(1e-300)).collect();
    if !bad.is_empty() {
        let perm = qr.p();
        let mut order = DVector::from_iterator(k, 0..k);
        perm.permute_rows(&mut order);
        let names = bad.iter().map(|&i| design.column_names[order[i]].clone()).collect();
        return Err(Error::SingularDesign(names));
    }
    let svd = xs.svd(true, true);
    let smax = svd.singular_values.max();
    let beta = svd
        .solve(&ys, 1e-12 * smax)
        .map_err(|_| Error::SingularDesign(design.column_names.clone()))?;

    let fitted = &design.x * &beta;
    let residuals = &design.y - &fitted;
    let w: Vec<f64> = design.weights.iter().copied().collect();
    let rss: f64 = residuals.iter().zip(&w).map(|(e, w)| w * e * e).sum();
    let yvals: Vec<f64> = design.y.iter().copied().collect();
    let ybar = weighted_mean(&yvals, &w);
    let tss: f64 = yvals.iter().zip(&w).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    let absorbed = if design.demeaned && design.count_absorbed_fe {
        design.n_sites
    } else {
        0
    };
    let k_total = k + absorbed;
    let adj_r_squared = if n > k_total + 1 {
        1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / (n as f64 - k_total as f64)
    } else {
        r_squared
    };

    Ok(RegressionFit {
        terms: design.column_names.clone(),
        coefficients: design
            .column_names
            .iter()
            .cloned()
            .zip(beta.iter().copied())
            .collect(),
        std_errors: BTreeMap::new(),
        adj_r_squared,
        r_squared,
        n,
        n_clusters: design.n_clusters,
        dropped: Vec::new(),
        residuals,
        k_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn design(x: DMatrix<f64>, y: Vec<f64>, w: Vec<f64>, sites: Vec<usize>) -> DesignMatrix {
        let n_sites = sites.iter().max().unwrap() + 1;
        let names = (0..x.ncols()).map(|c| format!("x{c}")).collect();
        let n = y.len();
        DesignMatrix {
            x,
            y: DVector::from_vec(y),
            weights: DVector::from_vec(w),
            column_names: names,
            cluster_ids: (0..n).collect(),
            site_ids: sites,
            n_clusters: n,
            n_sites,
            degenerate: Vec::new(),
            demeaned: false,
            count_absorbed_fe: true,
        }
    }

    #[test]
    fn demeaning_annihilates_constants() {
        let x = DMatrix::from_column_slice(4, 1, &[2.0, 2.0, 2.0, 2.0]);
        let d = design(x, vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 4], vec![0, 0, 1, 1]);
        let out = within_transform(&d).unwrap();
        assert!(out.x.column(0).iter().all(|&v| v.abs() < 1e-15));
        assert_eq!(out.degenerate, vec![0]);
    }

    #[test]
    fn demeaning_by_hand_equal_weights() {
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 1.0]);
        let d = design(x, vec![0.0, 2.0, 2.0, 4.0], vec![1.0; 4], vec![0, 0, 1, 1]);
        let out = within_transform(&d).unwrap();
        let y: Vec<f64> = out.y.iter().copied().collect();
        assert_eq!(y, vec![-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn demeaning_by_hand_weighted() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let d = design(x, vec![0.0, 4.0], vec![1.0, 3.0], vec![0, 0]);
        let out = within_transform(&d).unwrap();
        let y: Vec<f64> = out.y.iter().copied().collect();
        assert_eq!(y, vec![-3.0, 1.0]);
    }

    #[test]
    fn perfect_fit_has_unit_r_squared() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let d = design(x, vec![2.0, 4.0, 6.0, 8.0], vec![1.0, 2.0, 0.5, 3.0], vec![0; 4]);
        let fit = fit_wls(&d).unwrap();
        assert!((fit.coefficient("x0").unwrap() - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|&e| e.abs() < 1e-12));
    }

    #[test]
    fn matches_brute_force_normal_equations() {
        // 5 points, equal weights: beta = (X'X)^-1 X'y computed by hand
        let xv = [1.0, 2.0, 3.0, 4.0, 5.0];
        let yv = [2.1, 3.9, 6.2, 8.1, 9.8];
        let x = DMatrix::from_column_slice(5, 1, &xv);
        let d = design(x, yv.to_vec(), vec![1.0; 5], vec![0; 5]);
        let fit = fit_wls(&d).unwrap();
        let xtx: f64 = xv.iter().map(|v| v * v).sum();
        let xty: f64 = xv.iter().zip(&yv).map(|(x, y)| x * y).sum();
        assert!((fit.coefficient("x0").unwrap() - xty / xtx).abs() < 1e-10);
    }

    #[test]
    fn rank_deficiency_names_columns() {
        // second column is an exact multiple of the first
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let d = design(x, vec![1.0, 2.0, 3.0], vec![1.0; 3], vec![0; 3]);
        match fit_wls(&d) {
            Err(Error::SingularDesign(names)) => assert!(!names.is_empty()),
            other => panic!("expected singular design, got {other:?}"),
        }
    }
}
