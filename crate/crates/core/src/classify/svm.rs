use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;

/// Linear soft-margin SVM trained by SMO on the dual.
///
/// Working-set selection follows the maximal-violating-pair rule with a
/// second-order choice of the partner; ties resolve to the lowest index, so
/// training needs no randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct Svm<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub alphas: Vec<T>,
    pub labels: Vec<T>,
    pub c: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> Svm<T> {
    pub(super) fn fit(x: &Matrix<T>, y: &[T], c: T, tol: T, max_iter: usize, _seed: u64) -> Self {
        let n = x.rows();
        let zero = T::zero();
        let tau = T::lit(1e-12);
        // Linear kernel Gram matrix.
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(x.row(i), x.row(j));
                k.set(i, j, v);
                k.set(j, i, v);
            }
        }
        let mut alpha = vec![zero; n];
        // Gradient of ½αᵀQα − eᵀα with Q_ij = y_i y_j K_ij.
        let mut grad = vec![-T::one(); n];
        let in_up = |a: T, yt: T| (yt > zero && a < c) || (yt < zero && a > zero);
        let in_low = |a: T, yt: T| (yt > zero && a > zero) || (yt < zero && a < c);

        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            let mut gmax = T::neg_infinity();
            let mut i_sel = None;
            for t in 0..n {
                if in_up(alpha[t], y[t]) {
                    let v = -y[t] * grad[t];
                    if v > gmax {
                        gmax = v;
                        i_sel = Some(t);
                    }
                }
            }
            let Some(i) = i_sel else {
                converged = true;
                break;
            };
            let mut gmax2 = T::neg_infinity();
            let mut obj_min = T::infinity();
            let mut j_sel = None;
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                if v > gmax2 {
                    gmax2 = v;
                }
                let grad_diff = gmax + v;
                if grad_diff > zero {
                    let mut quad = k.get(i, i) + k.get(t, t) - T::lit(2.0) * k.get(i, t);
                    if quad <= zero {
                        quad = tau;
                    }
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj < obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
            if gmax + gmax2 < tol {
                converged = true;
                break;
            }
            let Some(j) = j_sel else {
                converged = true;
                break;
            };
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let kij = k.get(i, j);
            let mut quad = k.get(i, i) + k.get(j, j) - T::lit(2.0) * kij;
            if quad <= zero {
                quad = tau;
            }
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > zero {
                    if alpha[j] < zero {
                        alpha[j] = zero;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < zero {
                    alpha[i] = zero;
                    alpha[j] = -diff;
                }
                if diff > zero {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < zero {
                    alpha[j] = zero;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < zero {
                    alpha[i] = zero;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += y[t] * (y[i] * k.get(t, i) * di + y[j] * k.get(t, j) * dj);
            }
        }

        // Offset: mean of y·∇ over free vectors, else the midpoint of the bounds.
        let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
        let (mut sum_free, mut n_free) = (zero, 0usize);
        for t in 0..n {
            let yg = y[t] * grad[t];
            if alpha[t] >= c {
                if y[t] < zero {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[t] <= zero {
                if y[t] > zero {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                sum_free += yg;
                n_free += 1;
            }
        }
        let rho = if n_free > 0 {
            sum_free / T::from_usize_lossy(n_free)
        } else {
            (ub + lb) / T::lit(2.0)
        };

        let mut weights = vec![zero; x.cols()];
        for t in 0..n {
            if alpha[t] > zero {
                let s = alpha[t] * y[t];
                for (w, &v) in weights.iter_mut().zip(x.row(t)) {
                    *w += s * v;
                }
            }
        }
        Self {
            weights,
            bias: -rho,
            alphas: alpha,
            labels: y.to_vec(),
            c,
            iterations,
            converged,
        }
    }

    pub fn decision(&self, row: &[T]) -> T {
        dot(&self.weights, row) + self.bias
    }

    /// `Σ α_i y_i`, zero for a feasible dual point.
    pub fn equality_residual(&self) -> T {
        self.alphas
            .iter()
            .zip(&self.labels)
            .fold(T::zero(), |a, (&al, &y)| a + al * y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn data(n: usize, seed: u64, flip: f64) -> (Matrix<f64>, Vec<f64>) {
        let mut r = crate::rng::stream(seed, &[3]);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = r.random_range(-2.0..2.0);
            let b: f64 = r.random_range(-2.0..2.0);
            let mut label = if a - 0.5 * b > 0.2 { 1.0 } else { -1.0 };
            if r.random::<f64>() < flip {
                label = -label;
            }
            rows.push(vec![a, b]);
            y.push(label);
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn dual_feasibility_at_convergence() {
        let (x, y) = data(120, 1, 0.1);
        let m = Svm::fit(&x, &y, 1.0, 1e-3, 100_000, 0);
        assert!(m.converged);
        assert!(m.equality_residual().abs() <= 1e-6, "{}", m.equality_residual());
        assert!(m.alphas.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn separable_points_on_positive_side() {
        let (x, y) = data(80, 2, 0.0);
        let m = Svm::fit(&x, &y, 10.0, 1e-3, 100_000, 0);
        let correct = x.iter_rows().zip(&y).filter(|(r, &l)| m.decision(r) * l > 0.0).count();
        assert!(correct >= 78, "{correct}");
        let far = [2.0 * m.weights[0], 2.0 * m.weights[1]];
        let scale = 10.0 / (far[0].abs() + far[1].abs());
        assert!(m.decision(&[far[0] * scale, far[1] * scale]) > 0.0);
    }

    #[test]
    fn deterministic() {
        let (x, y) = data(60, 3, 0.2);
        assert_eq!(
            Svm::fit(&x, &y, 1.0, 1e-3, 100_000, 1),
            Svm::fit(&x, &y, 1.0, 1e-3, 100_000, 2)
        );
    }
}
