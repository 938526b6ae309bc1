use crate::linalg::{sq_dist, Matrix};
use crate::scalar::Scalar;

/// Keller-style fuzzy k-nearest neighbours with crisp training memberships.
#[derive(Debug, Clone, PartialEq)]
pub struct Fknn<T> {
    pub k: usize,
    pub fuzzifier: T,
    train: Matrix<T>,
    /// Membership of each training row in the positive class; the negative
    /// membership is its complement.
    membership_pos: Vec<T>,
}

impl<T: Scalar> Fknn<T> {
    pub(super) fn fit(x: &Matrix<T>, y: &[T], k: usize, fuzzifier: T) -> Self {
        Self {
            k: k.max(1),
            fuzzifier,
            train: x.clone(),
            membership_pos: y
                .iter()
                .map(|&v| if v > T::zero() { T::one() } else { T::zero() })
                .collect(),
        }
    }

    pub fn n_train(&self) -> usize {
        self.train.rows()
    }

    /// Positive-class membership of `row`:
    /// `Σ u_j·‖x−x_j‖^(−2/(m−1)) / Σ ‖x−x_j‖^(−2/(m−1))` over the k nearest
    /// (ties by training index). A zero distance returns that neighbour's membership.
    pub fn membership(&self, row: &[T]) -> T {
        let mut dist: Vec<(T, usize)> = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(j, r)| (sq_dist(row, r), j))
            .collect();
        let k = self.k.min(dist.len());
        let by_distance = |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, by_distance);
            dist.truncate(k);
        }
        dist.sort_by(by_distance);
        if let Some(&(_, j)) = dist.iter().find(|(d, _)| *d == T::zero()) {
            return self.membership_pos[j];
        }
        // ‖·‖^(−2/(m−1)) = (‖·‖²)^(−1/(m−1)).
        let power = -(self.fuzzifier - T::one()).recip();
        let (mut num, mut den) = (T::zero(), T::zero());
        for &(d2, j) in &dist {
            let w = d2.powf(power);
            num += w * self.membership_pos[j];
            den += w;
        }
        if den > T::zero() && den.is_finite() {
            num / den
        } else {
            self.membership_pos[dist[0].1]
        }
    }

    /// `u₊ − u₋`; ties go to the nearest neighbour's class.
    pub fn decision(&self, row: &[T]) -> T {
        let u = self.membership(row);
        let diff = u - (T::one() - u);
        if diff == T::zero() {
            let nearest = self
                .train
                .iter_rows()
                .enumerate()
                .map(|(j, r)| (sq_dist(row, r), j))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
                .map(|(_, j)| j)
                .unwrap();
            return if self.membership_pos[nearest] > T::zero() {
                T::min_positive_value()
            } else {
                -T::min_positive_value()
            };
        }
        diff
    }
}
