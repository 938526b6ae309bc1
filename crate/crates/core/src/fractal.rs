//! Fractal-dimension estimators for sampled 1-D curves.
//!
//! All estimators return [`FdEstimate`]. Flat inputs (zero ordinate range)
//! are not errors: they yield `1.0` with the `degenerate` flag set.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::{all_finite, Scalar};

pub const DEFAULT_KMAX: usize = 8;
pub const DEFAULT_BOX_SCALES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Katz,
    Higuchi,
    Petrosian,
    Sevcik,
    Bcd,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::Katz,
        Estimator::Higuchi,
        Estimator::Petrosian,
        Estimator::Sevcik,
        Estimator::Bcd,
    ];

    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Katz => "Katz",
            Estimator::Higuchi => "Higuchi",
            Estimator::Petrosian => "Petrosian",
            Estimator::Sevcik => "Sevcik",
            Estimator::Bcd => "Bcd",
        }
    }

    /// Smallest input length accepted by the estimator.
    pub fn min_len(self) -> usize {
        match self {
            Estimator::Katz | Estimator::Petrosian => 3,
            Estimator::Higuchi => 5,
            Estimator::Sevcik => 2,
            Estimator::Bcd => 4,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown estimator '{s}'"))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FractalError {
    #[error("{estimator}: need at least {min} samples, got {got}")]
    TooShort {
        estimator: Estimator,
        min: usize,
        got: usize,
    },
    #[error("{0}: signal contains non-finite values")]
    NonFinite(Estimator),
    #[error("higuchi: kmax must be at least 2, got {0}")]
    BadKmax(usize),
    #[error("bcd: need at least 2 box scales, got {0}")]
    BadScales(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate<T> {
    pub value: T,
    pub estimator: Estimator,
    pub degenerate: bool,
}

impl<T: Scalar> FdEstimate<T> {
    fn ok(estimator: Estimator, value: T) -> Self {
        Self {
            value,
            estimator,
            degenerate: false,
        }
    }

    pub fn degenerate(estimator: Estimator) -> Self {
        Self {
            value: T::one(),
            estimator,
            degenerate: true,
        }
    }
}

/// Tunables for the estimators that have any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorParams {
    pub kmax: usize,
    pub box_scales: usize,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            kmax: DEFAULT_KMAX,
            box_scales: DEFAULT_BOX_SCALES,
        }
    }
}

fn check<T: Scalar>(signal: &[T], estimator: Estimator) -> Result<(), FractalError> {
    let min = estimator.min_len();
    if signal.len() < min {
        return Err(FractalError::TooShort {
            estimator,
            min,
            got: signal.len(),
        });
    }
    if !all_finite(signal) {
        return Err(FractalError::NonFinite(estimator));
    }
    Ok(())
}

fn min_max<T: Scalar>(signal: &[T]) -> (T, T) {
    signal.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Least-squares slope of `ys` against `xs`.
fn ls_slope<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Katz dimension with Euclidean step lengths and unit abscissa spacing.
pub fn katz<T: Scalar>(signal: &[T]) -> Result<FdEstimate<T>, FractalError> {
    check(signal, Estimator::Katz)?;
    let y0 = signal[0];
    let mut length = T::zero();
    for w in signal.windows(2) {
        let dy = w[1] - w[0];
        length += (T::one() + dy * dy).sqrt();
    }
    let mut extent = T::zero();
    for (i, &y) in signal.iter().enumerate() {
        let di = T::from_usize_lossy(i);
        let dy = y - y0;
        extent = extent.max((di * di + dy * dy).sqrt());
    }
    // Flat signals are declared degenerate.
    let (lo, hi) = min_max(signal);
    if extent == T::zero() || length == T::zero() || lo == hi {
        return Ok(FdEstimate::degenerate(Estimator::Katz));
    }
    // extent <= length holds exactly; a ratio above 1 - (rounding of the
    // length sum) is a straight path.
    let steps = T::from_usize_lossy(signal.len() - 1);
    let mut ratio = extent / length;
    if ratio > T::one() - steps * T::epsilon() * T::lit(4.0) {
        ratio = T::one();
    }
    let log_n = steps.log10();
    Ok(FdEstimate::ok(Estimator::Katz, log_n / (log_n + ratio.log10())))
}

/// Higuchi dimension with `k = 1..kmax_eff`, `kmax_eff = min(kmax, (N-1)/2)`.
pub fn higuchi<T: Scalar>(signal: &[T], kmax: usize) -> Result<FdEstimate<T>, FractalError> {
    if kmax < 2 {
        return Err(FractalError::BadKmax(kmax));
    }
    check(signal, Estimator::Higuchi)?;
    let n = signal.len();
    let kmax_eff = kmax.min((n - 1) / 2);
    let (lo, hi) = min_max(signal);
    if lo == hi {
        return Ok(FdEstimate::degenerate(Estimator::Higuchi));
    }
    let norm_num = T::from_usize_lossy(n - 1);
    let mut log_k = Vec::with_capacity(kmax_eff);
    let mut log_l = Vec::with_capacity(kmax_eff);
    for k in 1..=kmax_eff {
        let kf = T::from_usize_lossy(k);
        let mut total = T::zero();
        for m in 1..=k {
            let steps = (n - m) / k;
            let mut acc = T::zero();
            for j in 1..=steps {
                let cur = signal[m - 1 + j * k];
                let prev = signal[m - 1 + (j - 1) * k];
                acc += (cur - prev).abs();
            }
            let lm = acc * norm_num / (T::from_usize_lossy(steps) * kf) / kf;
            total += lm;
        }
        let lk = total / kf;
        if lk.is_nan() || lk <= T::zero() {
            return Ok(FdEstimate::degenerate(Estimator::Higuchi));
        }
        log_k.push(kf.ln());
        log_l.push(lk.ln());
    }
    Ok(FdEstimate::ok(Estimator::Higuchi, -ls_slope(&log_k, &log_l)))
}

/// Petrosian dimension from sign changes of the first difference.
pub fn petrosian<T: Scalar>(signal: &[T]) -> Result<FdEstimate<T>, FractalError> {
    check(signal, Estimator::Petrosian)?;
    let (lo, hi) = min_max(signal);
    if lo == hi {
        return Ok(FdEstimate::degenerate(Estimator::Petrosian));
    }
    let mut changes = 0usize;
    // Zero differences inherit the previous sign.
    let mut prev_positive: Option<bool> = None;
    for w in signal.windows(2) {
        let d = w[1] - w[0];
        let sign = if d > T::zero() {
            Some(true)
        } else if d < T::zero() {
            Some(false)
        } else {
            prev_positive
        };
        if let (Some(p), Some(s)) = (prev_positive, sign) {
            if p != s {
                changes += 1;
            }
        }
        prev_positive = sign;
    }
    let nf = T::from_usize_lossy(signal.len());
    let log_n = nf.log10();
    let inner = nf / (nf + T::lit(0.4) * T::from_usize_lossy(changes));
    Ok(FdEstimate::ok(Estimator::Petrosian, log_n / (log_n + inner.log10())))
}

/// Sevcik dimension of the curve normalised into the unit square.
pub fn sevcik<T: Scalar>(signal: &[T]) -> Result<FdEstimate<T>, FractalError> {
    check(signal, Estimator::Sevcik)?;
    let (lo, hi) = min_max(signal);
    if lo == hi {
        return Ok(FdEstimate::degenerate(Estimator::Sevcik));
    }
    let range = hi - lo;
    let steps = T::from_usize_lossy(signal.len() - 1);
    let dx = steps.recip();
    let dx2 = dx * dx;
    let mut length = T::zero();
    for w in signal.windows(2) {
        let dy = (w[1] - lo) / range - (w[0] - lo) / range;
        length += (dx2 + dy * dy).sqrt();
    }
    let value = T::one() + length.ln() / (T::lit(2.0) * steps).ln();
    Ok(FdEstimate::ok(Estimator::Sevcik, value))
}

/// Grid index of a unit-interval coordinate at resolution `cells`; the closed
/// upper edge belongs to the last cell.
#[inline]
fn cell<T: Scalar>(v: T, cells: usize) -> usize {
    let idx = (v * T::from_usize_lossy(cells)).floor();
    if idx <= T::zero() {
        0
    } else {
        idx.to_usize().unwrap_or(cells - 1).min(cells - 1)
    }
}

/// Number of grid boxes touched by the polyline through `(xs[i], ys[i])`.
///
/// Each segment is walked column by column: within a column the segment's
/// ordinate span is evaluated at the column's clipped end points and every
/// row between them is marked.
fn count_boxes<T: Scalar>(xs: &[T], ys: &[T], cells: usize, mark: &mut Vec<bool>) -> usize {
    mark.clear();
    mark.resize(cells * cells, false);
    let cf = T::from_usize_lossy(cells);
    for i in 0..xs.len() - 1 {
        let (x0, y0, x1, y1) = (xs[i], ys[i], xs[i + 1], ys[i + 1]);
        let c0 = cell(x0, cells);
        let c1 = cell(x1, cells);
        let slope = (y1 - y0) / (x1 - x0);
        for c in c0..=c1 {
            let left = (T::from_usize_lossy(c) / cf).max(x0);
            let right = (T::from_usize_lossy(c + 1) / cf).min(x1);
            let ya = if left == x0 { y0 } else { y0 + slope * (left - x0) };
            let yb = if right == x1 { y1 } else { y0 + slope * (right - x0) };
            let (r0, r1) = {
                let a = cell(ya.min(yb), cells);
                let b = cell(ya.max(yb), cells);
                (a, b)
            };
            for r in r0..=r1 {
                mark[c * cells + r] = true;
            }
        }
    }
    mark.iter().filter(|&&m| m).count()
}

/// Box-counting dimension over dyadic scales `2^-j`, `j = 1..J`,
/// `J = min(max_scales, floor(log2 N))`.
pub fn bcd<T: Scalar>(signal: &[T], max_scales: usize) -> Result<FdEstimate<T>, FractalError> {
    if max_scales < 2 {
        return Err(FractalError::BadScales(max_scales));
    }
    check(signal, Estimator::Bcd)?;
    let n = signal.len();
    let (lo, hi) = min_max(signal);
    if lo == hi {
        return Ok(FdEstimate::degenerate(Estimator::Bcd));
    }
    let range = hi - lo;
    let steps = T::from_usize_lossy(n - 1);
    let xs: Vec<T> = (0..n).map(|i| T::from_usize_lossy(i) / steps).collect();
    let ys: Vec<T> = signal.iter().map(|&v| (v - lo) / range).collect();
    let scales = max_scales.min(n.ilog2() as usize);
    let mut mark = Vec::new();
    let mut log_eps = Vec::with_capacity(scales);
    let mut log_count = Vec::with_capacity(scales);
    for j in 1..=scales {
        let cells = 1usize << j;
        let count = count_boxes(&xs, &ys, cells, &mut mark);
        log_eps.push(-T::from_usize_lossy(j) * T::lit(2.0).ln());
        log_count.push(T::from_usize_lossy(count).ln());
    }
    Ok(FdEstimate::ok(Estimator::Bcd, -ls_slope(&log_eps, &log_count)))
}

/// Dispatches to the named estimator.
pub fn estimate<T: Scalar>(
    estimator: Estimator,
    signal: &[T],
    params: &EstimatorParams,
) -> Result<FdEstimate<T>, FractalError> {
    match estimator {
        Estimator::Katz => katz(signal),
        Estimator::Higuchi => higuchi(signal, params.kmax),
        Estimator::Petrosian => petrosian(signal),
        Estimator::Sevcik => sevcik(signal),
        Estimator::Bcd => bcd(signal, params.box_scales),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn katz_line_is_exactly_one() {
        let e = katz(&line(100)).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(!e.degenerate);
    }

    #[test]
    fn constants_are_degenerate_everywhere() {
        let c = vec![3.0f64; 64];
        let p = EstimatorParams::default();
        for est in Estimator::ALL {
            let e = estimate(est, &c, &p).unwrap();
            assert!(e.degenerate, "{est}");
            assert_eq!(e.value, 1.0);
        }
    }

    #[test]
    fn higuchi_line() {
        let e = higuchi(&line(1000), 8).unwrap();
        assert!((e.value - 1.0).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn higuchi_argument_checks() {
        assert_eq!(higuchi(&line(100), 1), Err(FractalError::BadKmax(1)));
        assert!(matches!(
            higuchi(&line(4), 8),
            Err(FractalError::TooShort { min: 5, .. })
        ));
        // kmax shrinks to (N-1)/2 = 2 on five samples.
        assert!(higuchi(&[0.0, 1.0, 0.0, 2.0, 1.0], 8).is_ok());
    }

    #[test]
    fn petrosian_examples() {
        assert_eq!(petrosian(&line(50)).unwrap().value, 1.0);
        let alt: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let v = petrosian(&alt).unwrap().value;
        let expect = 2.0 / (2.0 + (100.0f64 / (100.0 + 0.4 * 98.0)).log10());
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 1.07736).abs() < 2e-5, "{v}");
    }

    #[test]
    fn petrosian_zero_steps_carry_sign() {
        // diffs: +, 0, -, 0, + → two changes.
        let y = [0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let v = petrosian(&y).unwrap().value;
        let n = 6.0f64;
        let expect = n.log10() / (n.log10() + (n / (n + 0.8)).log10());
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn sevcik_line() {
        let v = sevcik(&line(10001)).unwrap().value;
        let expect = 1.0 + 2f64.sqrt().ln() / 20000f64.ln();
        assert!((v - expect).abs() < 1e-9);
        assert!((v - 1.0350).abs() < 1e-4);
    }

    #[test]
    fn bcd_diagonal() {
        let v = bcd(&line(2048), 6).unwrap().value;
        assert!((v - 1.0).abs() < 0.1, "{v}");
    }

    #[test]
    fn bcd_argument_checks() {
        assert_eq!(bcd(&line(100), 1), Err(FractalError::BadScales(1)));
        assert!(matches!(bcd(&line(3), 6), Err(FractalError::TooShort { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let y = [1.0, f64::NAN, 2.0, 3.0, 4.0];
        assert_eq!(katz(&y), Err(FractalError::NonFinite(Estimator::Katz)));
        assert_eq!(sevcik(&y), Err(FractalError::NonFinite(Estimator::Sevcik)));
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("Hurst".parse::<Estimator>().is_err());
    }

    #[test]
    fn single_precision_line() {
        let y: Vec<f32> = (0..256).map(|i| i as f32 * 0.5).collect();
        assert_eq!(petrosian(&y).unwrap().value, 1.0);
        assert!((higuchi(&y, 8).unwrap().value - 1.0).abs() < 1e-4);
    }
}
