mod common;

use common::{auc_pair_count, rng};
use rand::Rng;
use transimpact::eval::{metrics_from_cm, pr_curve, roc_auc, ConfusionMatrix};

/// (tn, fp, fn, tp) and the published percentages
/// (accuracy, precision, recall, F1, lift).
pub const TABLES: [((u64, u64, u64, u64), [f64; 5]); 6] = [
    ((483, 193, 136, 533), [75.53, 73.42, 79.67, 76.42, 25.28]),
    ((493, 183, 136, 533), [76.28, 74.44, 79.67, 76.97, 26.02]),
    ((498, 178, 129, 540), [77.17, 75.21, 80.72, 77.87, 26.91]),
    ((213, 40, 71, 94), [73.44, 70.15, 56.97, 62.88, 12.92]),
    ((210, 43, 67, 98), [73.68, 69.50, 59.39, 64.05, 13.16]),
    ((215, 38, 66, 99), [75.11, 72.26, 60.00, 65.56, 14.59]),
];

fn percentages(cm: &ConfusionMatrix) -> [f64; 5] {
    let m = metrics_from_cm(cm, cm.zero_prevalence());
    [m.accuracy, m.precision.unwrap(), m.recall.unwrap(), m.f1.unwrap(), m.lift].map(|v| v * 100.0)
}

#[test]
fn published_tables_recomputed() {
    for ((tn, fp, fn_, tp), want) in TABLES {
        let got = percentages(&ConfusionMatrix::new(tn, fp, fn_, tp));
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 0.02 + 1e-9, "{g} vs {w}");
        }
    }
}

#[test]
fn breast_cancer_table() {
    // Cells consistent with every reported percentage of that table; its
    // recall is 80.44 (the running text's 89.44 does not fit the matrix).
    let got = percentages(&ConfusionMatrix::new(172, 72, 44, 181));
    for (g, w) in got.iter().zip([75.27, 71.54, 80.44, 75.73, 23.24]) {
        assert!((g - w).abs() <= 0.02 + 1e-9, "{g} vs {w}");
    }
}

fn random_instance(r: &mut rand_chacha::ChaCha8Rng) -> (Vec<u8>, Vec<f64>) {
    loop {
        let n = r.random_range(2..=200);
        let levels = r.random_range(1..=20);
        let labels: Vec<u8> = (0..n).map(|_| r.random_range(0..=1)).collect();
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..levels)) / levels as f64).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return (labels, scores);
        }
    }
}

#[test]
fn trapezoid_auc_equals_pair_counting() {
    let mut r = rng(2024);
    for _ in 0..1000 {
        let (labels, scores) = random_instance(&mut r);
        let (auc, _) = roc_auc(&labels, &scores).unwrap();
        assert!((auc - auc_pair_count(&labels, &scores)).abs() <= 1e-12);
    }
}

#[test]
fn curves_invariant_under_increasing_transform() {
    let mut r = rng(77);
    for _ in 0..100 {
        let (labels, scores) = random_instance(&mut r);
        let t: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        assert_eq!(roc_auc(&labels, &scores).unwrap(), roc_auc(&labels, &t).unwrap());
        assert_eq!(pr_curve(&labels, &scores).unwrap(), pr_curve(&labels, &t).unwrap());
    }
}
