//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values of an n×m matrix via the m×m Gram matrix.
pub fn singular_values_oracle(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows[0].len();
    let mut g = vec![vec![0.0; m]; m];
    for r in rows {
        for i in 0..m {
            for j in 0..m {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    jacobi_eigenvalues(g).into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// AUC as the fraction of positive–negative pairs ranked correctly, ties half.
pub fn auc_pair_count(labels: &[u8], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

#[test]
fn jacobi_on_known_matrix() {
    // [[2,1],[1,2]] has eigenvalues 3 and 1.
    let ev = jacobi_eigenvalues(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
    assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
}

/// Random dense classification problem with a noisy linear signal.
pub fn random_problem(seed: u64, n: usize, p: usize) -> (transimpact::DenseMatrix, Vec<u8>) {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..p).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| r.random_range(-2.0..2.0)).collect();
        let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + r.random_range(-1.0..1.0);
        y.push(u8::from(z > 0.0));
        rows.push(row);
    }
    (transimpact::DenseMatrix::from_rows(&rows), y)
}

/// 200 rows, one informative feature (threshold at 0) plus two noise columns.
pub fn separable_fixture() -> (transimpact::DenseMatrix, Vec<u8>) {
    let mut r = rng(42);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..200 {
        let x0: f64 = r.random_range(0.1..5.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
        rows.push(vec![x0, r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]);
        y.push(u8::from(x0 > 0.0));
    }
    (transimpact::DenseMatrix::from_rows(&rows), y)
}

/// XOR of two binary features, each combination repeated.
pub fn xor_fixture() -> (transimpact::DenseMatrix, Vec<u8>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..100 {
        let (a, b) = (i % 2, (i / 2) % 2);
        rows.push(vec![a as f64, b as f64]);
        y.push((a ^ b) as u8);
    }
    (transimpact::DenseMatrix::from_rows(&rows), y)
}

/// Replaces every column by its dense within-column ranks.
pub fn rank_transform(x: &transimpact::DenseMatrix) -> transimpact::DenseMatrix {
    let mut out = x.clone();
    for j in 0..x.cols() {
        let mut col = x.column(j);
        col.sort_by(f64::total_cmp);
        col.dedup();
        for i in 0..x.rows() {
            let rank = col.partition_point(|&v| v < x.get(i, j));
            out.set(i, j, rank as f64);
        }
    }
    out
}
