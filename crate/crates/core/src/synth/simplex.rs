/// Euclidean projection onto the probability simplex
/// `{ w : w_i >= 0, sum w_i = 1 }` via the sort-and-threshold rule.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n > 0, "cannot project an empty vector");
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&u| (u - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_on_simplex_is_fixed_point() {
        let w = vec![0.2, 0.3, 0.5];
        let p = project_onto_simplex(&w);
        for (a, b) in w.iter().zip(&p) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_element_maps_to_one() {
        assert_eq!(project_onto_simplex(&[42.0]), vec![1.0]);
    }

    proptest! {
        #[test]
        fn projection_is_feasible(v in proptest::collection::vec(-10.0f64..10.0, 1..12)) {
            let p = project_onto_simplex(&v);
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-8);
            prop_assert!(p.iter().all(|&w| w >= -1e-12));
        }

        #[test]
        fn projection_minimizes_distance_vs_random_feasible_points(
            v in proptest::collection::vec(-5.0f64..5.0, 2..6),
            raw in proptest::collection::vec(0.001f64..1.0, 2..6),
        ) {
            // any feasible point must be at least as far from v
            let n = v.len().min(raw.len());
            let v = &v[..n];
            let total: f64 = raw[..n].iter().sum();
            let feasible: Vec<f64> = raw[..n].iter().map(|r| r / total).collect();
            let p = project_onto_simplex(v);
            let d = |a: &[f64]| -> f64 {
                a.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum()
            };
            prop_assert!(d(&p) <= d(&feasible) + 1e-9);
        }
    }
}
