use crate::linalg::{dot, solve_spd, Matrix};
use crate::scalar::Scalar;

use super::{ClassifierKind, ClassifyError};

/// Grid partition limit: `2^8 = 256` rules.
pub const MAX_ANFIS_INPUTS: usize = 8;

/// First-order Sugeno ANFIS with two Gaussian membership functions per input
/// and a full rule grid. Rule `q` uses membership function `(q >> i) & 1` on
/// input `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anfis<T> {
    d: usize,
    /// `centers[2·i + s]`.
    pub centers: Vec<T>,
    /// `widths[2·i + s]`.
    pub widths: Vec<T>,
    /// Rule `q` consequent is `consequents[q·(d+1) .. (q+1)·(d+1)]`, bias last.
    pub consequents: Vec<T>,
    min_width: Vec<T>,
}

impl<T: Scalar> Anfis<T> {
    pub fn n_rules(&self) -> usize {
        1 << self.d
    }

    /// Gaussians centred on the quartiles of each input's training range,
    /// width half the range (1 for a constant input).
    pub(crate) fn init(x: &Matrix<T>) -> Self {
        let d = x.cols();
        let mut centers = Vec::with_capacity(2 * d);
        let mut widths = Vec::with_capacity(2 * d);
        for j in 0..d {
            let (lo, hi) = x
                .iter_rows()
                .map(|r| r[j])
                .fold((T::infinity(), T::neg_infinity()), |(a, b), v| (a.min(v), b.max(v)));
            let range = hi - lo;
            let quarter = range / T::lit(4.0);
            centers.push(lo + quarter);
            centers.push(hi - quarter);
            let w = if range > T::zero() {
                range / T::lit(2.0)
            } else {
                T::one()
            };
            widths.push(w);
            widths.push(w);
        }
        let min_width = widths.iter().map(|&w| w * T::lit(1e-3)).collect();
        Self {
            d,
            centers,
            widths,
            consequents: vec![T::zero(); (1 << d) * (d + 1)],
            min_width,
        }
    }

    /// Normalised rule firing strengths, computed in log space.
    fn firing_into(&self, row: &[T], lm: &mut Vec<T>, out: &mut [T]) {
        lm.clear();
        for (i, &xi) in row[..self.d].iter().enumerate() {
            for s in 0..2 {
                let z = (xi - self.centers[2 * i + s]) / self.widths[2 * i + s];
                lm.push(-z * z / T::lit(2.0));
            }
        }
        let mut max = T::neg_infinity();
        for (q, o) in out.iter_mut().enumerate() {
            let mut v = T::zero();
            for i in 0..self.d {
                v += lm[2 * i + ((q >> i) & 1)];
            }
            *o = v;
            max = max.max(v);
        }
        let mut total = T::zero();
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    fn rule_output(&self, q: usize, row: &[T]) -> T {
        let p = &self.consequents[q * (self.d + 1)..(q + 1) * (self.d + 1)];
        dot(&p[..self.d], row) + p[self.d]
    }

    pub fn output(&self, row: &[T]) -> T {
        let mut lm = Vec::with_capacity(2 * self.d);
        let mut w = vec![T::zero(); self.n_rules()];
        self.firing_into(row, &mut lm, &mut w);
        w.iter()
            .enumerate()
            .fold(T::zero(), |acc, (q, &wq)| acc + wq * self.rule_output(q, row))
    }

    fn all_firing(&self, x: &Matrix<T>) -> Matrix<T> {
        let r = self.n_rules();
        let mut w = Matrix::zeros(x.rows(), r);
        let mut lm = Vec::with_capacity(2 * self.d);
        for n in 0..x.rows() {
            self.firing_into(x.row(n), &mut lm, w.row_mut(n));
        }
        w
    }

    #[cfg(test)]
    pub(crate) fn squared_error(&self, x: &Matrix<T>, y: &[T]) -> T {
        x.iter_rows()
            .zip(y)
            .map(|(r, &t)| {
                let e = self.output(r) - t;
                e * e
            })
            .fold(T::zero(), |a, b| a + b)
    }

    /// Ridge least-squares solve for the consequents with premises frozen.
    /// Uses the primal normal equations when parameters ≤ samples, else the
    /// dual (kernel) form whose Gram entries factor as `(w̄ₙ·w̄ₘ)(x̃ₙ·x̃ₘ)`.
    pub(crate) fn solve_consequents(&mut self, x: &Matrix<T>, y: &[T]) -> Result<(), ClassifyError> {
        let n = x.rows();
        let d1 = self.d + 1;
        let rules = self.n_rules();
        let p = rules * d1;
        let w = self.all_firing(x);
        let xt = |row: &[T], a: usize| if a < self.d { row[a] } else { T::one() };
        let ridge = T::lit(1e-8);
        let theta = if p <= n {
            let mut g = Matrix::zeros(p, p);
            let mut b = vec![T::zero(); p];
            let mut phi = vec![T::zero(); p];
            for (s, &ys) in y.iter().enumerate() {
                let row = x.row(s);
                let ws = w.row(s);
                for q in 0..rules {
                    for a in 0..d1 {
                        phi[q * d1 + a] = ws[q] * xt(row, a);
                    }
                }
                for u in 0..p {
                    let pu = phi[u];
                    if pu == T::zero() {
                        continue;
                    }
                    b[u] += pu * ys;
                    let gr = g.row_mut(u);
                    for v in u..p {
                        gr[v] += pu * phi[v];
                    }
                }
            }
            let trace = (0..p).map(|i| g.get(i, i)).fold(T::zero(), |a, v| a + v);
            let lambda = ridge * (trace / T::from_usize_lossy(p)).max(T::one());
            for u in 0..p {
                for v in 0..u {
                    let val = g.get(v, u);
                    g.set(u, v, val);
                }
                g.set(u, u, g.get(u, u) + lambda);
            }
            solve_spd(&g, &b).ok_or(ClassifyError::SingularSystem(ClassifierKind::Anfis))?
        } else {
            let mut k = Matrix::zeros(n, n);
            for s in 0..n {
                for t in s..n {
                    let wx = dot(w.row(s), w.row(t));
                    let xx = dot(x.row(s), x.row(t)) + T::one();
                    let v = wx * xx;
                    k.set(s, t, v);
                    k.set(t, s, v);
                }
            }
            let trace = (0..n).map(|i| k.get(i, i)).fold(T::zero(), |a, v| a + v);
            let lambda = ridge * (trace / T::from_usize_lossy(n)).max(T::one());
            for s in 0..n {
                k.set(s, s, k.get(s, s) + lambda);
            }
            let beta = solve_spd(&k, y).ok_or(ClassifyError::SingularSystem(ClassifierKind::Anfis))?;
            let mut theta = vec![T::zero(); p];
            for (s, &bs) in beta.iter().enumerate() {
                let row = x.row(s);
                let ws = w.row(s);
                for q in 0..rules {
                    let c = bs * ws[q];
                    for a in 0..d1 {
                        theta[q * d1 + a] += c * xt(row, a);
                    }
                }
            }
            theta
        };
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::SingularSystem(ClassifierKind::Anfis));
        }
        self.consequents = theta;
        Ok(())
    }

    /// One batch gradient step on centres and widths of the squared error.
    fn premise_step(&mut self, x: &Matrix<T>, y: &[T], rate: T) {
        let rules = self.n_rules();
        let mut grad_c = vec![T::zero(); 2 * self.d];
        let mut grad_w = vec![T::zero(); 2 * self.d];
        let mut lm = Vec::with_capacity(2 * self.d);
        let mut w = vec![T::zero(); rules];
        let mut fr = vec![T::zero(); rules];
        let mut acc = vec![T::zero(); 2 * self.d];
        for (row, &target) in x.iter_rows().zip(y) {
            self.firing_into(row, &mut lm, &mut w);
            let mut f = T::zero();
            for q in 0..rules {
                fr[q] = self.rule_output(q, row);
                f += w[q] * fr[q];
            }
            let e = f - target;
            acc.iter_mut().for_each(|v| *v = T::zero());
            for q in 0..rules {
                // dE/d(log w_q) for the softmax-normalised strengths.
                let g = e * w[q] * (fr[q] - f);
                for i in 0..self.d {
                    acc[2 * i + ((q >> i) & 1)] += g;
                }
            }
            for k in 0..2 * self.d {
                let i = k / 2;
                let diff = row[i] - self.centers[k];
                let sw = self.widths[k];
                grad_c[k] += acc[k] * diff / (sw * sw);
                grad_w[k] += acc[k] * diff * diff / (sw * sw * sw);
            }
        }
        let n = T::from_usize_lossy(x.rows());
        for k in 0..2 * self.d {
            self.centers[k] -= rate * grad_c[k] / n;
            self.widths[k] = (self.widths[k] - rate * grad_w[k] / n).max(self.min_width[k]);
        }
    }

    /// Hybrid learning: each epoch solves the consequents by least squares,
    /// then takes a gradient step on the premises; a final solve matches the
    /// consequents to the last premises.
    pub(super) fn fit(x: &Matrix<T>, y: &[T], epochs: usize, rate: T) -> Result<Self, ClassifyError> {
        let mut model = Self::init(x);
        for _ in 0..epochs {
            model.solve_consequents(x, y)?;
            model.premise_step(x, y, rate);
        }
        model.solve_consequents(x, y)?;
        Ok(model)
    }
}
