use crate::linalg::{dot, solve_spd, Matrix};
use crate::scalar::Scalar;

use super::{ClassifierKind, ClassifyError};

/// Fisher discriminant with a shrunk pooled covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Lda<T> {
    pub weights: Vec<T>,
    pub threshold: T,
    pub mean_pos: Vec<T>,
    pub mean_neg: Vec<T>,
}

impl<T: Scalar> Lda<T> {
    /// `S' = (1-γ)S + γ·(tr S / d)·I`, `w = S'⁻¹(μ₊ − μ₋)`, threshold at the
    /// projected midpoint. A zero-trace covariance falls back to the identity.
    pub(super) fn fit(x: &Matrix<T>, y: &[T], shrinkage: T) -> Result<Self, ClassifyError> {
        let d = x.cols();
        let mut mean_pos = vec![T::zero(); d];
        let mut mean_neg = vec![T::zero(); d];
        let (mut n_pos, mut n_neg) = (0usize, 0usize);
        for (row, &label) in x.iter_rows().zip(y) {
            let (m, n) = if label > T::zero() {
                (&mut mean_pos, &mut n_pos)
            } else {
                (&mut mean_neg, &mut n_neg)
            };
            *n += 1;
            for (a, &v) in m.iter_mut().zip(row) {
                *a += v;
            }
        }
        mean_pos.iter_mut().for_each(|v| *v /= T::from_usize_lossy(n_pos));
        mean_neg.iter_mut().for_each(|v| *v /= T::from_usize_lossy(n_neg));

        let mut cov = Matrix::zeros(d, d);
        let mut centred = vec![T::zero(); d];
        for (row, &label) in x.iter_rows().zip(y) {
            let m = if label > T::zero() { &mean_pos } else { &mean_neg };
            for j in 0..d {
                centred[j] = row[j] - m[j];
            }
            for a in 0..d {
                let ca = centred[a];
                let r = cov.row_mut(a);
                for b in 0..d {
                    r[b] += ca * centred[b];
                }
            }
        }
        let dof = T::from_usize_lossy(x.rows() - 2);
        let trace = (0..d).map(|i| cov.get(i, i)).fold(T::zero(), |a, b| a + b) / dof;
        let one = T::one();
        let shrunk = if trace > T::zero() {
            let target = shrinkage * trace / T::from_usize_lossy(d);
            let mut s = cov.map(|v| (one - shrinkage) * v / dof);
            for i in 0..d {
                s.set(i, i, s.get(i, i) + target);
            }
            s
        } else {
            let mut s = Matrix::zeros(d, d);
            for i in 0..d {
                s.set(i, i, one);
            }
            s
        };
        let diff: Vec<T> = mean_pos.iter().zip(&mean_neg).map(|(&a, &b)| a - b).collect();
        let weights = solve_spd(&shrunk, &diff).ok_or(ClassifyError::SingularSystem(ClassifierKind::Lda))?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ClassifyError::SingularSystem(ClassifierKind::Lda));
        }
        let mid: Vec<T> = mean_pos
            .iter()
            .zip(&mean_neg)
            .map(|(&a, &b)| (a + b) / T::lit(2.0))
            .collect();
        let threshold = dot(&weights, &mid);
        Ok(Self {
            weights,
            threshold,
            mean_pos,
            mean_neg,
        })
    }

    pub fn decision(&self, row: &[T]) -> T {
        dot(&self.weights, row) - self.threshold
    }

    /// Gap between the projected class means.
    pub fn projected_gap(&self) -> T {
        dot(&self.weights, &self.mean_pos) - dot(&self.weights, &self.mean_neg)
    }
}
