mod common;

use common::{random_rows, rng, singular_values_oracle};
use transimpact::features::{apply_tsvd, fit_tsvd};
use transimpact::DenseMatrix;

fn frobenius_residual(block: &DenseMatrix, k: usize, seed: u64) -> f64 {
    let model = fit_tsvd(block, k, seed).unwrap();
    let back = model.reconstruct(&apply_tsvd(&model, block).unwrap());
    back.as_slice().iter().zip(block.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[test]
fn singular_values_match_gram_jacobi() {
    let mut r = rng(100);
    for trial in 0..20 {
        let rows = random_rows(&mut r, 50, 30);
        let oracle = singular_values_oracle(&rows);
        let model = fit_tsvd(&DenseMatrix::from_rows(&rows), 10, trial).unwrap();
        for (got, want) in model.singular_values.iter().zip(&oracle) {
            assert!((got - want).abs() <= 1e-6 * want, "trial {trial}: {got} vs {want}");
        }
    }
}

#[test]
fn components_are_orthonormal() {
    let mut r = rng(7);
    let rows = random_rows(&mut r, 40, 25);
    let model = fit_tsvd(&DenseMatrix::from_rows(&rows), 12, 3).unwrap();
    for i in 0..12 {
        for j in 0..12 {
            let dot: f64 = model.components.row(i).iter().zip(model.components.row(j)).map(|(a, b)| a * b).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-8);
        }
    }
    assert!(model.singular_values.windows(2).all(|w| w[0] >= w[1] && w[1] >= 0.0));
}

#[test]
fn residual_matches_oracle_tail_and_shrinks_with_k() {
    let mut r = rng(55);
    let rows = random_rows(&mut r, 50, 30);
    let block = DenseMatrix::from_rows(&rows);
    let oracle = singular_values_oracle(&rows);
    let mut last = f64::INFINITY;
    for k in 1..=30 {
        let res = frobenius_residual(&block, k, 1);
        let tail = oracle[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((res - tail).abs() < 1e-6, "k={k}: {res} vs {tail}");
        assert!(res <= last + 1e-9);
        last = res;
    }
}

#[test]
fn truncated_model_matches_direct_fit() {
    // Geometric spectrum: well separated.
    let mut r = rng(9);
    let rows = random_rows(&mut r, 60, 20);
    let scaled: Vec<Vec<f64>> = rows.iter().map(|row| row.iter().enumerate().map(|(j, v)| v * 0.7f64.powi(j as i32)).collect()).collect();
    let block = DenseMatrix::from_rows(&scaled);
    let big = fit_tsvd(&block, 12, 4).unwrap();
    for k in 1..12 {
        let small = fit_tsvd(&block, k, 8).unwrap();
        for (a, b) in big.truncate(k).singular_values.iter().zip(&small.singular_values) {
            assert!((a - b).abs() <= 1e-6 * b);
        }
    }
}
