//! Classifier fixtures shared by the CV tests and the acceptance suite.

use fractalga::dataio::Label;
use fractalga::featspace::{FeatureDescriptor, FeatureMatrix};
use fractalga::linalg::Matrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn matrix(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> FeatureMatrix {
    let d = rows[0].len();
    let n = rows.len();
    FeatureMatrix::new(
        Matrix::from_rows(&rows),
        vec![false; n * d],
        (0..d).map(|i| FeatureDescriptor::from_index(i).unwrap()).collect(),
        labels,
    )
    .unwrap()
}

pub fn alternating(n: usize) -> Vec<Label> {
    (0..n)
        .map(|i| if i % 2 == 0 { Label::Left } else { Label::Right })
        .collect()
}

/// Clouds at (0,0) and (10,10) with σ = 0.5, 50 per class.
pub fn clouds(seed: u64) -> FeatureMatrix {
    let mut r = super::rng(seed);
    let labels = alternating(100);
    let rows = labels
        .iter()
        .map(|l| {
            let c = if *l == Label::Left { 0.0 } else { 10.0 };
            (0..2).map(|_| c + 0.5 * r.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    matrix(rows, labels)
}

/// 200 standard-normal rows in 3 dimensions with balanced, shuffled labels.
pub fn noise_with_shuffled_labels(seed: u64) -> FeatureMatrix {
    let mut r = super::rng(seed + 1000);
    let rows = (0..200)
        .map(|_| (0..3).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut labels = alternating(200);
    labels.shuffle(&mut r);
    matrix(rows, labels)
}
