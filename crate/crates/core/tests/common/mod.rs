//! Reference implementations written straight from the estimator formulas,
//! sharing no code with the library.

#![allow(dead_code)]

pub mod fixtures;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed ^ 0xABCD);
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            acc += r.random_range(-1.0..1.0);
            acc
        })
        .collect()
}

/// Slope by the textbook closed form `(nΣxy − ΣxΣy) / (nΣx² − (Σx)²)`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..xs.len() {
        sx += xs[i];
        sy += ys[i];
        sxy += xs[i] * ys[i];
        sxx += xs[i] * xs[i];
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

pub fn katz(y: &[f64]) -> f64 {
    let n = y.len() - 1;
    let mut l = 0.0;
    for i in 0..n {
        l += (1.0 + (y[i + 1] - y[i]).powi(2)).sqrt();
    }
    let mut d: f64 = 0.0;
    for i in 0..y.len() {
        d = d.max(((i * i) as f64 + (y[i] - y[0]).powi(2)).sqrt());
    }
    let nl = (n as f64).log10();
    nl / (nl + (d / l).log10())
}

pub fn higuchi(y: &[f64], kmax: usize) -> f64 {
    let n = y.len();
    let kmax = kmax.min((n - 1) / 2);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 1..=kmax {
        let mut sum_l = 0.0;
        for m in 1..=k {
            // 1-based indices y_m, y_{m+k}, ...
            let count = (n - m) / k;
            let mut s = 0.0;
            for j in 1..=count {
                s += (y[m + j * k - 1] - y[m + (j - 1) * k - 1]).abs();
            }
            sum_l += s * (n - 1) as f64 / (count * k) as f64 / k as f64;
        }
        xs.push((k as f64).ln());
        ys.push((sum_l / k as f64).ln());
    }
    -slope(&xs, &ys)
}

pub fn petrosian(y: &[f64]) -> f64 {
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut signs: Vec<i8> = Vec::new();
    let mut last = 0i8;
    for d in diffs {
        let s = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            last
        };
        signs.push(s);
        last = s;
    }
    let mut changes = 0;
    for w in signs.windows(2) {
        if w[0] != 0 && w[1] != 0 && w[0] != w[1] {
            changes += 1;
        }
    }
    let n = y.len() as f64;
    n.log10() / (n.log10() + (n / (n + 0.4 * changes as f64)).log10())
}

pub fn sevcik(y: &[f64]) -> f64 {
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n1 = (y.len() - 1) as f64;
    let mut l = 0.0;
    for i in 0..y.len() - 1 {
        let a = (y[i] - lo) / (hi - lo);
        let b = (y[i + 1] - lo) / (hi - lo);
        l += ((1.0 / n1).powi(2) + (b - a).powi(2)).sqrt();
    }
    1.0 + l.ln() / (2.0 * n1).ln()
}

/// Liang–Barsky test: does the segment p0→p1 meet the closed box?
pub fn segment_meets_box(p0: (f64, f64), p1: (f64, f64), bx: (f64, f64, f64, f64)) -> bool {
    let (xmin, xmax, ymin, ymax) = bx;
    let dx = p1.0 - p0.0;
    let dy = p1.1 - p0.1;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-dx, p0.0 - xmin),
        (dx, xmax - p0.0),
        (-dy, p0.1 - ymin),
        (dy, ymax - p0.1),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Brute force: every box is tested against every segment.
pub fn box_count(y: &[f64], cells: usize) -> usize {
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n1 = (y.len() - 1) as f64;
    let pts: Vec<(f64, f64)> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64 / n1, (v - lo) / (hi - lo)))
        .collect();
    let side = 1.0 / cells as f64;
    let mut count = 0;
    for c in 0..cells {
        for r in 0..cells {
            let bx = (
                c as f64 * side,
                (c + 1) as f64 * side,
                r as f64 * side,
                (r + 1) as f64 * side,
            );
            if pts.windows(2).any(|s| segment_meets_box(s[0], s[1], bx)) {
                count += 1;
            }
        }
    }
    count
}

pub fn bcd(y: &[f64], max_scales: usize) -> f64 {
    let j_max = max_scales.min((y.len() as f64).log2().floor() as usize);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 1..=j_max {
        xs.push((0.5f64).powi(j as i32).ln());
        ys.push((box_count(y, 1 << j) as f64).ln());
    }
    -slope(&xs, &ys)
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}
