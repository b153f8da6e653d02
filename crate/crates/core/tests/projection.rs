mod common;

use cssnmf::solver::{is_in_omega, project_omega};
use cssnmf::{DenseMatrix, RngStream};
use proptest::prelude::*;

fn row(y: &DenseMatrix, i: usize) -> Vec<f64> {
    (0..y.cols()).map(|j| y[(i, j)]).collect()
}

#[test]
fn matches_active_set_oracle() {
    let mut rng = RngStream::new(3);
    for _ in 0..20 {
        let y = DenseMatrix::from_fn(5, 5, |_, _| rng.uniform_range(-1.0, 2.0));
        let w: Vec<f64> = (0..5).map(|_| rng.uniform_range(0.1, 3.0)).collect();
        let x = project_omega(&y, &w).unwrap();
        for i in 0..5 {
            let o =
                common::active_set_projection(&row(&y, i), &common::omega_row_constraints(i, &w));
            for j in 0..5 {
                assert!(
                    (x[(i, j)] - o[j]).abs() <= 1e-9,
                    "row {i}: {:?} vs {o:?}",
                    row(&x, i)
                );
            }
        }
    }
}

#[test]
fn matches_dykstra_on_larger_rows() {
    let mut rng = RngStream::new(4);
    let n = 9;
    let y = DenseMatrix::from_fn(n, n, |_, _| rng.uniform_range(-0.5, 1.5));
    let w: Vec<f64> = (0..n).map(|_| rng.uniform_range(0.5, 2.0)).collect();
    let x = project_omega(&y, &w).unwrap();
    for i in 0..n {
        let o =
            common::dykstra_projection(&row(&y, i), &common::omega_row_constraints(i, &w), 200_000);
        for j in 0..n {
            assert!((x[(i, j)] - o[j]).abs() <= 1e-7);
        }
    }
}

#[test]
fn equal_weights_reduce_to_unweighted_caps() {
    let y = DenseMatrix::from_rows(&[
        vec![0.2, 0.9, -0.3],
        vec![0.5, 0.1, 0.4],
        vec![2.0, 2.0, 3.0],
    ])
    .unwrap();
    let x = project_omega(&y, &[1.0; 3]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!(x[(i, j)] >= 0.0 && x[(i, j)] <= x[(i, i)] + 1e-15);
        }
    }
    assert_eq!(x[(2, 2)], 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_feasible_and_idempotent(
        vals in proptest::collection::vec(-2.0f64..2.0, 36),
        ws in proptest::collection::vec(0.05f64..4.0, 6),
    ) {
        let y = DenseMatrix::from_col_major(6, 6, vals).unwrap();
        let x = project_omega(&y, &ws).unwrap();
        prop_assert!(is_in_omega(&x, &ws, 1e-12));
        let again = project_omega(&x, &ws).unwrap();
        prop_assert!(again.max_abs_diff(&x) <= 1e-12);
    }

    #[test]
    fn projection_beats_any_feasible_point(
        vals in proptest::collection::vec(-2.0f64..2.0, 16),
        ws in proptest::collection::vec(0.1f64..3.0, 4),
        t in 0.0f64..1.0,
    ) {
        let y = DenseMatrix::from_col_major(4, 4, vals).unwrap();
        let x = project_omega(&y, &ws).unwrap();
        // A feasible competitor: the diagonal t·I.
        let z = DenseMatrix::from_fn(4, 4, |i, j| if i == j { t } else { 0.0 });
        prop_assert!(y.sub(&x).frobenius_norm() <= y.sub(&z).frobenius_norm() + 1e-12);
    }
}
