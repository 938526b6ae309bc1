//! Epoched EEG ingestion, synthetic signal generators and stratified folds.
//!
//! The on-disk layout is plain UTF-8 text:
//!
//! ```text
//! trials=<T> channels=<C> samples=<N> rate=<Hz>
//! label=<Left|Right>
//! <N space-separated floats>      # repeated C times
//! ...                             # repeated T times
//! ```
//!
//! Lines starting with `#` and blank lines are ignored.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::rng;

/// Motor-imagery class of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Left,
    Right,
}

impl Label {
    /// Left ↦ −1, Right ↦ +1.
    pub fn sign(self) -> f64 {
        match self {
            Label::Left => -1.0,
            Label::Right => 1.0,
        }
    }

    pub fn from_sign(v: f64) -> Self {
        if v > 0.0 {
            Label::Right
        } else {
            Label::Left
        }
    }

    fn rank(self) -> usize {
        match self {
            Label::Left => 0,
            Label::Right => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Left => "Left",
            Label::Right => "Right",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Left" => Ok(Label::Left),
            "Right" => Ok(Label::Right),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: expected {expected} values, got {got}")]
    DimensionMismatch { line: usize, expected: usize, got: usize },
    #[error("line {line}: unknown label '{value}'")]
    UnknownLabel { line: usize, value: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("hurst exponent {0} outside (0, 1)")]
    InvalidHurst(f64),
    #[error("signal too short: need at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("fold count {0} must be at least 2")]
    TooFewTrials(usize),
    #[error("class {class} has {count} trials, fewer than the fold count")]
    ClassUnderflow { class: Label, count: usize },
}

/// Trials × channels × samples, with one label per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochedDataset {
    n_trials: usize,
    n_channels: usize,
    n_samples: usize,
    data: Vec<f64>,
    labels: Vec<Label>,
    sample_rate_hz: f64,
    channel_names: Vec<String>,
}

/// Conventional names for the three recorded electrodes.
pub const DEFAULT_CHANNELS: [&str; 3] = ["C3", "Cz", "C4"];

fn default_channel_names(n: usize) -> Vec<String> {
    if n == DEFAULT_CHANNELS.len() {
        DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect()
    } else {
        (0..n).map(|i| format!("ch{i}")).collect()
    }
}

impl EpochedDataset {
    /// `trials[t][c]` is the sample vector of channel `c` in trial `t`.
    pub fn new(trials: Vec<Vec<Vec<f64>>>, labels: Vec<Label>, sample_rate_hz: f64) -> Result<Self, DataError> {
        let n_trials = trials.len();
        if n_trials == 0 {
            return Err(DataError::Invalid("no trials".into()));
        }
        if labels.len() != n_trials {
            return Err(DataError::Invalid(format!(
                "{} labels for {} trials",
                labels.len(),
                n_trials
            )));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(DataError::Invalid(format!(
                "sample rate {sample_rate_hz} must be positive"
            )));
        }
        let n_channels = trials[0].len();
        let n_samples = trials[0].first().map_or(0, Vec::len);
        if n_channels == 0 || n_samples == 0 {
            return Err(DataError::Invalid("empty trial".into()));
        }
        let mut data = Vec::with_capacity(n_trials * n_channels * n_samples);
        for (t, trial) in trials.iter().enumerate() {
            if trial.len() != n_channels {
                return Err(DataError::Invalid(format!(
                    "trial {t} has {} channels, expected {n_channels}",
                    trial.len()
                )));
            }
            for ch in trial {
                if ch.len() != n_samples {
                    return Err(DataError::Invalid(format!(
                        "trial {t} has a channel of {} samples, expected {n_samples}",
                        ch.len()
                    )));
                }
                if ch.iter().any(|v| !v.is_finite()) {
                    return Err(DataError::Invalid(format!("trial {t} has non-finite samples")));
                }
                data.extend_from_slice(ch);
            }
        }
        Ok(Self {
            n_trials,
            n_channels,
            n_samples,
            data,
            labels,
            sample_rate_hz,
            channel_names: default_channel_names(n_channels),
        })
    }

    pub fn n_trials(&self) -> usize {
        self.n_trials
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn signal(&self, trial: usize, channel: usize) -> &[f64] {
        let start = (trial * self.n_channels + channel) * self.n_samples;
        &self.data[start..start + self.n_samples]
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize, usize, f64), DataError> {
    let mut trials = None;
    let mut channels = None;
    let mut samples = None;
    let mut rate = None;
    let bad = |reason: String| DataError::MalformedRow { line: lineno, reason };
    for tok in line.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("header token '{tok}' is not key=value")))?;
        let as_count = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| bad(format!("'{key}' must be a non-negative integer, got '{v}'")))
        };
        match key {
            "trials" => trials = Some(as_count(value)?),
            "channels" => channels = Some(as_count(value)?),
            "samples" => samples = Some(as_count(value)?),
            "rate" => {
                rate = Some(
                    value
                        .parse::<f64>()
                        .map_err(|_| bad(format!("rate must be a number, got '{value}'")))?,
                )
            }
            other => return Err(bad(format!("unknown header key '{other}'"))),
        }
    }
    match (trials, channels, samples, rate) {
        (Some(t), Some(c), Some(n), Some(r)) => Ok((t, c, n, r)),
        _ => Err(bad("header needs trials, channels, samples and rate".into())),
    }
}

/// Parses the dataset text layout.
pub fn parse_dataset(text: &str) -> Result<EpochedDataset, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(DataError::MalformedRow {
        line: 1,
        reason: "missing header".into(),
    })?;
    let (n_trials, n_channels, n_samples, rate) = parse_header(header, hline)?;

    let mut trials = Vec::with_capacity(n_trials);
    let mut labels = Vec::with_capacity(n_trials);
    let mut last_line = hline;
    for _ in 0..n_trials {
        let (lno, lline) = lines.next().ok_or(DataError::DimensionMismatch {
            line: last_line + 1,
            expected: n_trials,
            got: trials.len(),
        })?;
        let value = lline.strip_prefix("label=").ok_or_else(|| DataError::MalformedRow {
            line: lno,
            reason: format!("expected 'label=<Left|Right>', got '{lline}'"),
        })?;
        let label = value
            .parse::<Label>()
            .map_err(|v| DataError::UnknownLabel { line: lno, value: v })?;
        last_line = lno;
        let mut channels = Vec::with_capacity(n_channels);
        for _ in 0..n_channels {
            let (lno, row) = lines.next().ok_or(DataError::DimensionMismatch {
                line: last_line + 1,
                expected: n_channels,
                got: channels.len(),
            })?;
            last_line = lno;
            let values = row
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| DataError::MalformedRow {
                        line: lno,
                        reason: format!("'{tok}' is not a number"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != n_samples {
                return Err(DataError::DimensionMismatch {
                    line: lno,
                    expected: n_samples,
                    got: values.len(),
                });
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(DataError::MalformedRow {
                    line: lno,
                    reason: format!("non-finite value {v}"),
                });
            }
            channels.push(values);
        }
        trials.push(channels);
        labels.push(label);
    }
    if let Some((lno, _)) = lines.next() {
        return Err(DataError::MalformedRow {
            line: lno,
            reason: format!("content after the declared {n_trials} trials"),
        });
    }
    EpochedDataset::new(trials, labels, rate)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<EpochedDataset, DataError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(DataError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text)
}

/// Writes the canonical text form (no comments, shortest round-trip floats).
pub fn write_dataset<W: Write>(ds: &EpochedDataset, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "trials={} channels={} samples={} rate={}",
        ds.n_trials, ds.n_channels, ds.n_samples, ds.sample_rate_hz
    )?;
    for t in 0..ds.n_trials {
        writeln!(out, "label={}", ds.labels[t])?;
        for c in 0..ds.n_channels {
            let mut first = true;
            for v in ds.signal(t, c) {
                if !first {
                    out.write_all(b" ")?;
                }
                write!(out, "{v}")?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Exact fractional-Gaussian-noise increments by circulant embedding
/// (Davies–Harte), returning `n` unit-variance samples.
fn fgn_davies_harte(n: usize, hurst: f64, rng: &mut impl Rng) -> Vec<f64> {
    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex64::new(fgn_autocov(lag, hurst), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut row);
    // Eigenvalues of the circulant embedding are real and non-negative for fGn;
    // clamp round-off.
    let eig: Vec<f64> = row.iter().map(|c| c.re.max(0.0)).collect();

    let mut z = |_: ()| -> f64 { rng.sample(StandardNormal) };
    let mf = m as f64;
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    w[0] = Complex64::new((eig[0] / mf).sqrt() * z(()), 0.0);
    w[n] = Complex64::new((eig[n] / mf).sqrt() * z(()), 0.0);
    for k in 1..n {
        let s = (eig[k] / (2.0 * mf)).sqrt();
        let v = Complex64::new(s * z(()), s * z(()));
        w[k] = v;
        w[m - k] = v.conj();
    }
    planner.plan_fft_forward(m).process(&mut w);
    w.into_iter().take(n).map(|c| c.re).collect()
}

/// Length-`n` fractional Brownian motion path: cumulative sum of exact fGn.
pub fn synth_fbm(n: usize, hurst: f64, seed: u64) -> Result<Vec<f64>, DataError> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(DataError::InvalidHurst(hurst));
    }
    if n < 16 {
        return Err(DataError::TooShort { min: 16, got: n });
    }
    let mut r = rng::stream(seed, &[0xFB]);
    let incr = fgn_davies_harte(n, hurst, &mut r);
    let mut acc = 0.0;
    Ok(incr
        .into_iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect())
}

/// Exact fractional Gaussian noise (the increments of [`synth_fbm`]).
pub fn synth_fgn(n: usize, hurst: f64, seed: u64) -> Result<Vec<f64>, DataError> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(DataError::InvalidHurst(hurst));
    }
    if n < 16 {
        return Err(DataError::TooShort { min: 16, got: n });
    }
    let mut r = rng::stream(seed, &[0xFB]);
    Ok(fgn_davies_harte(n, hurst, &mut r))
}

/// `y_i = slope * i + intercept` for `i = 0..n`.
pub fn synth_line(n: usize, slope: f64, intercept: f64) -> Result<Vec<f64>, DataError> {
    if n < 2 {
        return Err(DataError::TooShort { min: 2, got: n });
    }
    Ok((0..n).map(|i| slope * i as f64 + intercept).collect())
}

/// Parameters of the synthetic motor-imagery dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub trials: usize,
    pub samples: usize,
    pub rate_hz: f64,
    pub seed: u64,
    /// Hurst offset between hemispheres; 0 makes the classes indistinguishable.
    pub contrast: f64,
    /// Half-width of the per-trial uniform Hurst jitter.
    pub jitter: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            trials: 280,
            samples: 1152,
            rate_hz: 128.0,
            seed: 1,
            contrast: 0.1,
            jitter: 0.1,
        }
    }
}

/// Three-channel synthetic dataset with lateralised complexity.
///
/// Each channel is an fBm path. For Left trials C3 is rougher (lower Hurst)
/// than C4, for Right trials the reverse; Cz carries no class information.
/// Classes alternate so the dataset is balanced.
pub fn synth_dataset(spec: &SynthSpec) -> Result<EpochedDataset, DataError> {
    let mut trials = Vec::with_capacity(spec.trials);
    let mut labels = Vec::with_capacity(spec.trials);
    for t in 0..spec.trials {
        let label = if t % 2 == 0 { Label::Left } else { Label::Right };
        let mut r = rng::stream(spec.seed, &[0xDA7A, t as u64]);
        let side = label.sign() * spec.contrast;
        let base = [0.5 - side, 0.5, 0.5 + side];
        let mut chans = Vec::with_capacity(3);
        for (c, h) in base.iter().enumerate() {
            let jitter = if spec.jitter > 0.0 {
                r.random_range(-spec.jitter..spec.jitter)
            } else {
                0.0
            };
            let h = (h + jitter).clamp(0.05, 0.95);
            let seed = rng::derive_seed(spec.seed, &[0x5161, t as u64, c as u64]);
            chans.push(synth_fbm(spec.samples, h, seed)?);
        }
        trials.push(chans);
        labels.push(label);
    }
    EpochedDataset::new(trials, labels, spec.rate_hz)
}

/// Trial-to-fold assignment for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of_trial: Vec<usize>,
    k: usize,
    seed: u64,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of_trial(&self) -> &[usize] {
        &self.fold_of_trial
    }

    pub fn n_trials(&self) -> usize {
        self.fold_of_trial.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_trial.len())
            .filter(|&i| self.fold_of_trial[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_trial.len())
            .filter(|&i| self.fold_of_trial[i] != fold)
            .collect()
    }
}

/// Seeded stratified k-fold assignment over a label vector.
///
/// Each class is shuffled independently, then the classes are dealt
/// round-robin onto folds in one continuous sequence, which keeps both the
/// per-class and the total fold sizes within one of each other.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<FoldAssignment, DataError> {
    if k < 2 {
        return Err(DataError::TooFewTrials(k));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.rank()].push(i);
    }
    for (class, members) in [Label::Left, Label::Right].iter().zip(&by_class) {
        if members.len() < k {
            return Err(DataError::ClassUnderflow {
                class: *class,
                count: members.len(),
            });
        }
    }
    let mut fold_of_trial = vec![0; labels.len()];
    let mut next = 0usize;
    for (c, members) in by_class.iter_mut().enumerate() {
        let mut r = rng::stream(seed, &[0xF01D, c as u64]);
        members.shuffle(&mut r);
        for &i in members.iter() {
            fold_of_trial[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { fold_of_trial, k, seed })
}

pub fn make_folds(ds: &EpochedDataset, k: usize, seed: u64) -> Result<FoldAssignment, DataError> {
    stratified_folds(ds.labels(), k, seed)
}
