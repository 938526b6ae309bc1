//! Multilevel periodized DWT with the Daubechies-2 (four-tap) filter pair.
//!
//! Phase convention: for an even-length input `x` of length `m`,
//!
//! ```text
//! a[i] = Σ_k h[k] · x[(2i + k) mod m]
//! d[i] = Σ_k g[k] · x[(2i + k) mod m],   g[k] = (-1)^k · h[3 - k]
//! ```
//!
//! so a unit impulse at sample 0 of a length-8 signal produces
//! `a = [h0, 0, 0, h2]` and `d = [g0, 0, 0, g2]`.
//!
//! Odd-length inputs are first extended by one sample with the linear
//! isometry `E = H·[I; 0]`, where `H` is the Householder reflection taking
//! the normalised constant vector of length `n` (zero-padded) onto the
//! normalised constant vector of length `n + 1`. `E` preserves energy, maps
//! constants to constants (so details of a constant stay zero) and is
//! inverted by `Eᵀ`, which keeps Parseval and perfect reconstruction exact
//! at every level while producing `ceil(n / 2)` coefficients per band.

use thiserror::Error;

use crate::scalar::{all_finite, Scalar};

/// Default decomposition depth of the feature pipeline.
pub const MAX_LEVELS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DwtError {
    #[error("signal too short: need at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("signal contains non-finite values")]
    NonFinite,
    #[error("malformed decomposition: {0}")]
    Malformed(String),
}

/// Boundary treatment for the filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extension {
    #[default]
    Periodization,
}

/// Orthonormal db2 low-pass analysis taps.
pub fn db2_lowpass<T: Scalar>() -> [T; 4] {
    let s3 = T::lit(3.0).sqrt();
    let norm = T::lit(4.0) * T::lit(2.0).sqrt();
    let one = T::one();
    let three = T::lit(3.0);
    [
        (one + s3) / norm,
        (three + s3) / norm,
        (three - s3) / norm,
        (one - s3) / norm,
    ]
}

/// Quadrature-mirror high-pass taps, `g[k] = (-1)^k h[3 - k]`.
pub fn db2_highpass<T: Scalar>() -> [T; 4] {
    let h = db2_lowpass::<T>();
    [h[3], -h[2], h[1], -h[0]]
}

/// Coefficients of the odd-length extension reflector.
struct OddExtension<T> {
    /// Entries of `w` on the first `n` samples (all equal).
    w_body: T,
    /// Entry of `w` on the appended sample.
    w_tail: T,
    /// `2 / (w·w)`.
    scale: T,
}

impl<T: Scalar> OddExtension<T> {
    fn new(n: usize) -> Self {
        let nf = T::from_usize_lossy(n);
        let inv_sqrt_n = nf.sqrt().recip();
        let inv_sqrt_n1 = (nf + T::one()).sqrt().recip();
        let w_body = inv_sqrt_n - inv_sqrt_n1;
        let w_tail = -inv_sqrt_n1;
        let ww = nf * w_body * w_body + w_tail * w_tail;
        Self {
            w_body,
            w_tail,
            scale: T::lit(2.0) / ww,
        }
    }

    /// `H · [x; 0]`, evaluated as `[x + δ; μ + δ]` with `μ` the mean of `x`
    /// and `δ = μ·(√(n/(n+1)) − 1)`; a constant input stays exactly constant.
    fn extend(&self, x: &[T]) -> Vec<T> {
        let nf = T::from_usize_lossy(x.len());
        let x0 = x[0];
        let mean = x0 + x.iter().map(|&v| v - x0).sum::<T>() / nf;
        let delta = mean * ((nf / (nf + T::one())).sqrt() - T::one());
        let mut out: Vec<T> = x.iter().map(|&v| v + delta).collect();
        out.push(mean + delta);
        out
    }

    /// First `n` entries of `H · y`.
    fn contract(&self, y: &[T]) -> Vec<T> {
        let n = y.len() - 1;
        let wy = self.w_body * y[..n].iter().copied().sum::<T>() + self.w_tail * y[n];
        let beta = self.scale * wy;
        y[..n].iter().map(|&v| v - beta * self.w_body).collect()
    }
}

fn analyze_even<T: Scalar>(x: &[T]) -> (Vec<T>, Vec<T>) {
    let m = x.len();
    let h = db2_lowpass::<T>();
    let g = db2_highpass::<T>();
    let half = m / 2;
    let mut a = Vec::with_capacity(half);
    let mut d = Vec::with_capacity(half);
    for i in 0..half {
        let mut sa = T::zero();
        let mut sd = T::zero();
        let x0 = x[2 * i];
        for k in 0..4 {
            let v = x[(2 * i + k) % m];
            sa += h[k] * v;
            // Σg = 0, so differencing against x0 changes nothing but rounding
            // and makes flat windows give exactly zero.
            sd += g[k] * (v - x0);
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

fn synthesize_even<T: Scalar>(a: &[T], d: &[T]) -> Vec<T> {
    let half = a.len();
    let m = 2 * half;
    let h = db2_lowpass::<T>();
    let g = db2_highpass::<T>();
    let mut x = vec![T::zero(); m];
    for i in 0..half {
        for k in 0..4 {
            x[(2 * i + k) % m] += h[k] * a[i] + g[k] * d[i];
        }
    }
    x
}

/// One analysis level: returns `(approximation, detail)`, each of length `ceil(n / 2)`.
pub fn dwt_step<T: Scalar>(signal: &[T], extension: Extension) -> Result<(Vec<T>, Vec<T>), DwtError> {
    let Extension::Periodization = extension;
    if signal.len() < 2 {
        return Err(DwtError::TooShort(signal.len()));
    }
    if !all_finite(signal) {
        return Err(DwtError::NonFinite);
    }
    if signal.len().is_multiple_of(2) {
        Ok(analyze_even(signal))
    } else {
        let ext = OddExtension::new(signal.len()).extend(signal);
        Ok(analyze_even(&ext))
    }
}

/// Inverse of [`dwt_step`] for a signal of `len` samples.
pub fn idwt_step<T: Scalar>(approx: &[T], detail: &[T], len: usize) -> Result<Vec<T>, DwtError> {
    if approx.len() != detail.len() || approx.len() != len.div_ceil(2) || len < 2 {
        return Err(DwtError::Malformed(format!(
            "bands of length {}/{} cannot rebuild {len} samples",
            approx.len(),
            detail.len()
        )));
    }
    let y = synthesize_even(approx, detail);
    if len.is_multiple_of(2) {
        Ok(y)
    } else {
        Ok(OddExtension::new(len).contract(&y))
    }
}

/// Approximation and detail bands of every level, finest first.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition<T> {
    pub details: Vec<Vec<T>>,
    pub approximations: Vec<Vec<T>>,
    pub original_length: usize,
}

impl<T: Scalar> WaveletDecomposition<T> {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Detail band `D_level`, 1-based.
    pub fn detail(&self, level: usize) -> Option<&[T]> {
        level
            .checked_sub(1)
            .and_then(|i| self.details.get(i))
            .map(Vec::as_slice)
    }

    /// Approximation band `A_level`, 1-based.
    pub fn approximation(&self, level: usize) -> Option<&[T]> {
        level
            .checked_sub(1)
            .and_then(|i| self.approximations.get(i))
            .map(Vec::as_slice)
    }

    /// Sum of squares of `D1..Dmax` and `Amax`.
    pub fn energy(&self) -> T {
        let sq = |v: &Vec<T>| v.iter().fold(T::zero(), |a, &x| a + x * x);
        self.details.iter().map(sq).fold(T::zero(), |a, b| a + b)
            + self.approximations.last().map(sq).unwrap_or_else(T::zero)
    }
}

/// Iterates [`dwt_step`] on the approximation up to `max_levels` times, stopping
/// once the approximation has fewer than two samples.
pub fn decompose<T: Scalar>(signal: &[T], max_levels: usize) -> Result<WaveletDecomposition<T>, DwtError> {
    if signal.len() < 2 {
        return Err(DwtError::TooShort(signal.len()));
    }
    let mut details = Vec::new();
    let mut approximations: Vec<Vec<T>> = Vec::new();
    for _ in 0..max_levels.max(1) {
        let current = approximations.last().map_or(signal, Vec::as_slice);
        if current.len() < 2 {
            break;
        }
        let (a, d) = dwt_step(current, Extension::Periodization)?;
        details.push(d);
        approximations.push(a);
    }
    Ok(WaveletDecomposition {
        details,
        approximations,
        original_length: signal.len(),
    })
}

/// Inverse transform from `Amax` and `D1..Dmax`.
pub fn reconstruct<T: Scalar>(decomp: &WaveletDecomposition<T>) -> Result<Vec<T>, DwtError> {
    let levels = decomp.details.len();
    if levels == 0 || decomp.approximations.len() != levels {
        return Err(DwtError::Malformed(format!(
            "{} detail and {} approximation bands",
            levels,
            decomp.approximations.len()
        )));
    }
    let mut lengths = Vec::with_capacity(levels + 1);
    lengths.push(decomp.original_length);
    for _ in 0..levels {
        let prev = *lengths.last().unwrap();
        if prev < 2 {
            return Err(DwtError::Malformed(format!(
                "{levels} levels exceed what {} samples allow",
                decomp.original_length
            )));
        }
        lengths.push(prev.div_ceil(2));
    }
    for j in 0..levels {
        let want = lengths[j + 1];
        if decomp.details[j].len() != want || decomp.approximations[j].len() != want {
            return Err(DwtError::Malformed(format!(
                "level {} bands have lengths {}/{}, expected {want}",
                j + 1,
                decomp.approximations[j].len(),
                decomp.details[j].len()
            )));
        }
    }
    let mut x = decomp.approximations[levels - 1].clone();
    for j in (0..levels).rev() {
        x = idwt_step(&x, &decomp.details[j], lengths[j])?;
    }
    Ok(x)
}
