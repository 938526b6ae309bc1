//! The fractal feature space: 5 estimators × (raw + A1..A10 + D1..D10) × channels.
//!
//! Column order is channel-major, then source `[Raw, A1..A10, D1..D10]`,
//! then estimator `[Katz, Higuchi, Petrosian, Sevcik, Bcd]`:
//! `index = channel · 105 + source_rank · 5 + estimator_rank`.

use std::fmt;
use std::io::{self, Write};
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::chromosome::Chromosome;
use crate::dataio::{EpochedDataset, Label};
use crate::dwt::{self, MAX_LEVELS};
use crate::fractal::{self, Estimator, EstimatorParams, FdEstimate};
use crate::linalg::Matrix;
use crate::rng;

pub const N_CHANNELS: usize = 3;
pub const N_SOURCES: usize = 1 + 2 * MAX_LEVELS;
pub const PER_CHANNEL: usize = N_SOURCES * 5;
/// 3 · (1 + 10 + 10) · 5.
pub const N_FEATURES: usize = N_CHANNELS * PER_CHANNEL;

/// Signal a feature is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Raw,
    Approx(u8),
    Detail(u8),
}

impl Source {
    pub fn rank(self) -> usize {
        match self {
            Source::Raw => 0,
            Source::Approx(j) => j as usize,
            Source::Detail(j) => MAX_LEVELS + j as usize,
        }
    }

    pub fn from_rank(r: usize) -> Option<Self> {
        match r {
            0 => Some(Source::Raw),
            r if r <= MAX_LEVELS => Some(Source::Approx(r as u8)),
            r if r < N_SOURCES => Some(Source::Detail((r - MAX_LEVELS) as u8)),
            _ => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Raw => f.write_str("Raw"),
            Source::Approx(j) => write!(f, "A{j}"),
            Source::Detail(j) => write!(f, "D{j}"),
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "Raw" {
            return Ok(Source::Raw);
        }
        let level = |rest: &str| -> Result<u8, String> {
            rest.parse::<u8>()
                .ok()
                .filter(|j| (1..=MAX_LEVELS as u8).contains(j))
                .ok_or_else(|| format!("bad subband level in '{s}'"))
        };
        if let Some(rest) = s.strip_prefix('A') {
            Ok(Source::Approx(level(rest)?))
        } else if let Some(rest) = s.strip_prefix('D') {
            Ok(Source::Detail(level(rest)?))
        } else {
            Err(format!("unknown source '{s}'"))
        }
    }
}

/// One column of the feature space, e.g. `ch0:D1:Katz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureDescriptor {
    pub channel: usize,
    pub source: Source,
    pub estimator: Estimator,
}

impl FeatureDescriptor {
    pub fn new(channel: usize, source: Source, estimator: Estimator) -> Self {
        Self {
            channel,
            source,
            estimator,
        }
    }

    pub fn index(&self) -> usize {
        descriptor_index(self)
    }

    pub fn from_index(i: usize) -> Option<Self> {
        let channel = i / PER_CHANNEL;
        let rem = i % PER_CHANNEL;
        let source = Source::from_rank(rem / 5)?;
        Some(Self {
            channel,
            source,
            estimator: Estimator::ALL[rem % 5],
        })
    }

    /// All descriptors of an `n_channels` feature space, in column order.
    pub fn all(n_channels: usize) -> Vec<Self> {
        (0..n_channels * PER_CHANNEL)
            .map(|i| Self::from_index(i).unwrap())
            .collect()
    }
}

pub fn descriptor_index(d: &FeatureDescriptor) -> usize {
    d.channel * PER_CHANNEL + d.source.rank() * 5 + d.estimator.rank()
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}:{}:{}", self.channel, self.source, self.estimator)
    }
}

impl FromStr for FeatureDescriptor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [ch, src, est] = parts.as_slice() else {
            return Err(format!("descriptor '{s}' is not ch<k>:<source>:<estimator>"));
        };
        let channel = ch
            .strip_prefix("ch")
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| format!("bad channel in '{s}'"))?;
        Ok(Self {
            channel,
            source: src.parse()?,
            estimator: est.parse()?,
        })
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("window {start}:{end} outside the {samples}-sample trials")]
    WindowOutOfRange { start: usize, end: usize, samples: usize },
    #[error("dataset has {0} channels; the feature space needs {N_CHANNELS}")]
    ChannelCount(usize),
    #[error("empty feature selection")]
    EmptySelection,
    #[error("mask has {mask} genes but the matrix has {cols} columns")]
    MaskLength { mask: usize, cols: usize },
    #[error("estimator failure: {0}")]
    Estimator(#[from] fractal::FractalError),
    #[error("wavelet failure: {0}")]
    Wavelet(#[from] dwt::DwtError),
    #[error("line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("invalid feature matrix: {0}")]
    Invalid(String),
}

/// Trial × feature table with per-entry degenerate flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Matrix<f64>,
    degenerate: Vec<bool>,
    descriptors: Vec<FeatureDescriptor>,
    labels: Vec<Label>,
}

impl FeatureMatrix {
    pub fn new(
        values: Matrix<f64>,
        degenerate: Vec<bool>,
        descriptors: Vec<FeatureDescriptor>,
        labels: Vec<Label>,
    ) -> Result<Self, FeatureError> {
        if descriptors.len() != values.cols() {
            return Err(FeatureError::Invalid(format!(
                "{} descriptors for {} columns",
                descriptors.len(),
                values.cols()
            )));
        }
        if labels.len() != values.rows() {
            return Err(FeatureError::Invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                values.rows()
            )));
        }
        if degenerate.len() != values.rows() * values.cols() {
            return Err(FeatureError::Invalid("degenerate mask shape".into()));
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::Invalid("non-finite feature value".into()));
        }
        Ok(Self {
            values,
            degenerate,
            descriptors,
            labels,
        })
    }

    pub fn n_trials(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn is_degenerate(&self, trial: usize, col: usize) -> bool {
        self.degenerate[trial * self.n_features() + col]
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }

    /// Number of degenerate entries per column.
    pub fn degenerate_per_column(&self) -> Vec<usize> {
        let cols = self.n_features();
        let mut out = vec![0; cols];
        for (i, &d) in self.degenerate.iter().enumerate() {
            if d {
                out[i % cols] += 1;
            }
        }
        out
    }

    /// Column position of a descriptor, if present.
    pub fn column_of(&self, d: &FeatureDescriptor) -> Option<usize> {
        self.descriptors.iter().position(|x| x == d)
    }

    /// `±1` targets, Left ↦ −1.
    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.sign()).collect()
    }

    /// Replaces the labels, keeping features. Used for chance-level checks.
    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self, FeatureError> {
        Self::new(
            self.values.clone(),
            self.degenerate.clone(),
            self.descriptors.clone(),
            labels,
        )
    }
}

fn estimate_or_degenerate(
    estimator: Estimator,
    signal: Option<&[f64]>,
    params: &EstimatorParams,
) -> Result<FdEstimate<f64>, FeatureError> {
    match signal {
        Some(s) if s.len() >= estimator.min_len() => Ok(fractal::estimate(estimator, s, params)?),
        _ => Ok(FdEstimate::degenerate(estimator)),
    }
}

/// Features of one channel window, in per-channel column order.
fn channel_features(signal: &[f64], params: &EstimatorParams) -> Result<Vec<FdEstimate<f64>>, FeatureError> {
    let decomp = if signal.len() >= 2 {
        Some(dwt::decompose(signal, MAX_LEVELS)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(PER_CHANNEL);
    for rank in 0..N_SOURCES {
        let band = match Source::from_rank(rank).unwrap() {
            Source::Raw => Some(signal),
            Source::Approx(j) => decomp.as_ref().and_then(|d| d.approximation(j as usize)),
            Source::Detail(j) => decomp.as_ref().and_then(|d| d.detail(j as usize)),
        };
        for est in Estimator::ALL {
            out.push(estimate_or_degenerate(est, band, params)?);
        }
    }
    Ok(out)
}

/// Computes the full 315-column feature matrix over `window` of every trial.
pub fn extract_features(
    ds: &EpochedDataset,
    window: Range<usize>,
    params: &EstimatorParams,
) -> Result<FeatureMatrix, FeatureError> {
    if window.start >= window.end || window.end > ds.n_samples() {
        return Err(FeatureError::WindowOutOfRange {
            start: window.start,
            end: window.end,
            samples: ds.n_samples(),
        });
    }
    if ds.n_channels() != N_CHANNELS {
        return Err(FeatureError::ChannelCount(ds.n_channels()));
    }
    let rows: Vec<Vec<FdEstimate<f64>>> = (0..ds.n_trials())
        .into_par_iter()
        .map(|t| {
            let mut row = Vec::with_capacity(N_FEATURES);
            for c in 0..N_CHANNELS {
                row.extend(channel_features(&ds.signal(t, c)[window.clone()], params)?);
            }
            Ok(row)
        })
        .collect::<Result<_, FeatureError>>()?;
    let mut values = Vec::with_capacity(rows.len() * N_FEATURES);
    let mut degenerate = Vec::with_capacity(rows.len() * N_FEATURES);
    for e in rows.iter().flatten() {
        values.push(e.value);
        degenerate.push(e.degenerate);
    }
    FeatureMatrix::new(
        Matrix::from_vec(ds.n_trials(), N_FEATURES, values),
        degenerate,
        FeatureDescriptor::all(N_CHANNELS),
        ds.labels().to_vec(),
    )
}

/// Columns whose gene is set, in column order.
pub fn select_columns(m: &FeatureMatrix, mask: &Chromosome) -> Result<Matrix<f64>, FeatureError> {
    if mask.len() != m.n_features() {
        return Err(FeatureError::MaskLength {
            mask: mask.len(),
            cols: m.n_features(),
        });
    }
    let active = mask.active();
    if active.is_empty() {
        return Err(FeatureError::EmptySelection);
    }
    Ok(m.values.select_cols(&active))
}

/// Writes the CSV export: descriptor header plus `label`, one row per trial.
pub fn write_csv<W: Write>(m: &FeatureMatrix, mut out: W) -> io::Result<()> {
    for d in &m.descriptors {
        write!(out, "{d},")?;
    }
    writeln!(out, "label")?;
    for (t, row) in m.values.iter_rows().enumerate() {
        for v in row {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", m.labels[t])?;
    }
    Ok(())
}

/// Parses the CSV export. Degenerate flags are not stored and read back as `false`.
pub fn read_csv(text: &str) -> Result<FeatureMatrix, FeatureError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FeatureError::Csv {
        line: 1,
        reason: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.last() != Some(&"label") || cols.len() < 2 {
        return Err(FeatureError::Csv {
            line: 1,
            reason: "header must end with 'label'".into(),
        });
    }
    let descriptors = cols[..cols.len() - 1]
        .iter()
        .map(|c| c.parse::<FeatureDescriptor>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|reason| FeatureError::Csv { line: 1, reason })?;
    let width = descriptors.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let lno = i + 1;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != width + 1 {
            return Err(FeatureError::Csv {
                line: lno,
                reason: format!("expected {} fields, got {}", width + 1, fields.len()),
            });
        }
        for f in &fields[..width] {
            values.push(f.parse::<f64>().map_err(|_| FeatureError::Csv {
                line: lno,
                reason: format!("'{f}' is not a number"),
            })?);
        }
        labels.push(fields[width].parse::<Label>().map_err(|v| FeatureError::Csv {
            line: lno,
            reason: format!("unknown label '{v}'"),
        })?);
    }
    let rows = labels.len();
    FeatureMatrix::new(
        Matrix::from_vec(rows, width, values),
        vec![false; rows * width],
        descriptors,
        labels,
    )
}

/// Synthetic matrix with one column that carries the label.
///
/// Column `planted` is `±1 + N(0, noise²)`; columns `0..weak` (other than the
/// planted one) are `0.5·(±1) + N(0, 1)`; all others are `N(0, 1)`. Labels
/// alternate Left/Right. Descriptors are the first `cols` of the feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub trials: usize,
    pub cols: usize,
    pub planted: usize,
    pub weak: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            trials: 100,
            cols: 12,
            planted: 7,
            weak: 0,
            noise: 0.2,
            seed: 1,
        }
    }
}

pub fn synth_planted(spec: &PlantedSpec) -> Result<FeatureMatrix, FeatureError> {
    if spec.planted >= spec.cols || spec.cols > N_FEATURES {
        return Err(FeatureError::Invalid(format!(
            "planted column {} outside {} columns",
            spec.planted, spec.cols
        )));
    }
    let mut r = rng::stream(spec.seed, &[0x9A7]);
    let labels: Vec<Label> = (0..spec.trials)
        .map(|t| if t % 2 == 0 { Label::Left } else { Label::Right })
        .collect();
    let mut values = Vec::with_capacity(spec.trials * spec.cols);
    for l in &labels {
        for c in 0..spec.cols {
            let z: f64 = r.sample(StandardNormal);
            let v = if c == spec.planted {
                l.sign() + spec.noise * z
            } else if c < spec.weak {
                0.5 * l.sign() + z
            } else {
                z
            };
            values.push(v);
        }
    }
    FeatureMatrix::new(
        Matrix::from_vec(spec.trials, spec.cols, values),
        vec![false; spec.trials * spec.cols],
        (0..spec.cols)
            .map(|i| FeatureDescriptor::from_index(i).unwrap())
            .collect(),
        labels,
    )
}
