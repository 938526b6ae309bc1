//! k-fold cross-validated scoring of a (feature subset, classifier) pair.
//!
//! The cost `T` covers prediction on the test folds only. In
//! [`TimingMode::Deterministic`] it is the closed-form op count of
//! [`classify::prediction_cost`] times a calibration constant; in
//! [`TimingMode::Wallclock`] it is measured.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::chromosome::Chromosome;
use crate::classify::{self, ClassifierKind, ClassifyError, Hyperparams};
use crate::dataio::FoldAssignment;
use crate::featspace::{select_columns, FeatureError, FeatureMatrix};
use crate::rng;

/// Accuracy floor in the FV denominator.
pub const ACCURACY_FLOOR: f64 = 1e-6;
/// Pseudo-seconds per op-unit in deterministic mode.
pub const DEFAULT_SECONDS_PER_UNIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TimingMode {
    #[default]
    Deterministic,
    Wallclock,
}

impl fmt::Display for TimingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimingMode::Deterministic => "deterministic",
            TimingMode::Wallclock => "wallclock",
        })
    }
}

impl FromStr for TimingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "deterministic" => Ok(TimingMode::Deterministic),
            "wallclock" => Ok(TimingMode::Wallclock),
            _ => Err(format!("unknown timing mode '{s}' (deterministic|wallclock)")),
        }
    }
}

/// Everything crossval needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub mode: TimingMode,
    pub hyper: Hyperparams,
    pub seconds_per_unit: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mode: TimingMode::Deterministic,
            hyper: Hyperparams::default(),
            seconds_per_unit: DEFAULT_SECONDS_PER_UNIT,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty feature selection")]
    EmptySelection,
    #[error("fold {fold}: training split lacks a class")]
    FoldClassMissing { fold: usize },
    #[error("{kind} failed to train on fold {fold}: {source}")]
    TrainFailure {
        kind: ClassifierKind,
        fold: usize,
        #[source]
        source: ClassifyError,
    },
    #[error("folds cover {folds} trials but the matrix has {trials}")]
    FoldMismatch { folds: usize, trials: usize },
    #[error(transparent)]
    Feature(FeatureError),
    #[error("no classifier kinds to evaluate")]
    NoKinds,
}

impl From<FeatureError> for EvalError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::EmptySelection => EvalError::EmptySelection,
            other => EvalError::Feature(other),
        }
    }
}

/// Score of one (chromosome, classifier) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessRecord {
    pub accuracy_pct: f64,
    pub cost: f64,
    pub fv: f64,
    pub chromosome: Chromosome,
    pub classifier: ClassifierKind,
    /// Per-fold accuracy in percent.
    pub fold_accuracies: Vec<f64>,
}

/// `FV = cost / max(accuracy_pct, ε)`; lower is better.
pub fn fitness(accuracy_pct: f64, cost: f64) -> f64 {
    cost / accuracy_pct.max(ACCURACY_FLOOR)
}

struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
}

fn splits(features: &FeatureMatrix, folds: &FoldAssignment) -> Result<Vec<Split>, EvalError> {
    if folds.n_trials() != features.n_trials() {
        return Err(EvalError::FoldMismatch {
            folds: folds.n_trials(),
            trials: features.n_trials(),
        });
    }
    let labels = features.labels();
    (0..folds.k())
        .map(|f| {
            let train = folds.train_indices(f);
            let pos = train.iter().filter(|&&i| labels[i].sign() > 0.0).count();
            if pos == 0 || pos == train.len() {
                return Err(EvalError::FoldClassMissing { fold: f });
            }
            Ok(Split {
                train,
                test: folds.test_indices(f),
            })
        })
        .collect()
}

/// Deterministic cost of `kind` on `mask` over all test folds, in pseudo-seconds.
/// Needs no training, so `cost / 100` bounds the achievable FV from below.
pub fn deterministic_cost(
    folds: &FoldAssignment,
    mask: &Chromosome,
    kind: ClassifierKind,
    seconds_per_unit: f64,
) -> f64 {
    let d = mask.count_ones();
    let n = folds.n_trials();
    (0..folds.k())
        .map(|f| {
            let n_test = folds.fold_of_trial().iter().filter(|&&x| x == f).count();
            classify::cost_units(kind, n_test, n - n_test, d)
        })
        .sum::<f64>()
        * seconds_per_unit
}

fn median3(mut v: [f64; 3]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[1]
}

/// Trains on each fold's complement, predicts the fold, and scores the pair.
pub fn crossval(
    features: &FeatureMatrix,
    mask: &Chromosome,
    kind: ClassifierKind,
    folds: &FoldAssignment,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<FitnessRecord, EvalError> {
    let x = select_columns(features, mask)?;
    let splits = splits(features, folds)?;
    let y = features.targets();
    let mut fold_accuracies = Vec::with_capacity(splits.len());
    let mut cost = 0.0;
    for (f, split) in splits.iter().enumerate() {
        let x_train = x.select_rows(&split.train);
        let y_train: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
        let model = classify::train(
            kind,
            &x_train,
            &y_train,
            &cfg.hyper,
            rng::derive_seed(seed, &[f as u64]),
        )
        .map_err(|source| EvalError::TrainFailure { kind, fold: f, source })?;
        let x_test = x.select_rows(&split.test);
        let predicted = match cfg.mode {
            TimingMode::Deterministic => {
                cost += classify::prediction_cost(&model, split.test.len()) * cfg.seconds_per_unit;
                classify::predict(&model, &x_test)
            }
            TimingMode::Wallclock => {
                let mut times = [0.0; 3];
                let mut out = None;
                for t in &mut times {
                    let start = Instant::now();
                    out = Some(classify::predict(&model, &x_test));
                    *t = start.elapsed().as_secs_f64();
                }
                cost += median3(times);
                out.unwrap()
            }
        }
        .map_err(|source| EvalError::TrainFailure { kind, fold: f, source })?;
        let correct = split.test.iter().zip(&predicted).filter(|(&i, &p)| y[i] == p).count();
        fold_accuracies.push(if split.test.is_empty() {
            0.0
        } else {
            100.0 * correct as f64 / split.test.len() as f64
        });
    }
    let accuracy_pct = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(FitnessRecord {
        accuracy_pct,
        cost,
        fv: fitness(accuracy_pct, cost),
        chromosome: mask.clone(),
        classifier: kind,
        fold_accuracies,
    })
}

/// Lowest-FV record across `kinds` (ties to the earlier kind).
///
/// In deterministic mode a kind is skipped when its FV lower bound
/// `cost / 100` cannot beat the best record so far; the result is the same
/// as evaluating every kind.
pub fn best_over_kinds(
    features: &FeatureMatrix,
    mask: &Chromosome,
    kinds: &[ClassifierKind],
    folds: &FoldAssignment,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<FitnessRecord, EvalError> {
    let mut best: Option<FitnessRecord> = None;
    for &kind in kinds {
        if let (TimingMode::Deterministic, Some(b)) = (cfg.mode, &best) {
            let bound = fitness(100.0, deterministic_cost(folds, mask, kind, cfg.seconds_per_unit));
            if bound >= b.fv {
                continue;
            }
        }
        let rec = crossval(features, mask, kind, folds, cfg, seed)?;
        if best.as_ref().is_none_or(|b| rec.fv < b.fv) {
            best = Some(rec);
        }
    }
    best.ok_or(EvalError::NoKinds)
}

pub const CSV_HEADER: &str = "features,classifier,accuracy_pct,time,fv";

/// Active descriptors of `mask`, joined by `+`.
pub fn feature_label(features: &FeatureMatrix, mask: &Chromosome) -> String {
    mask.active()
        .iter()
        .map(|&i| features.descriptors()[i].to_string())
        .collect::<Vec<_>>()
        .join("+")
}

/// Full-precision CSV row.
pub fn csv_row(features: &FeatureMatrix, rec: &FitnessRecord) -> String {
    format!(
        "{},{},{},{},{}",
        feature_label(features, &rec.chromosome),
        rec.classifier,
        rec.accuracy_pct,
        rec.cost,
        rec.fv
    )
}

pub fn write_records_csv<W: Write>(features: &FeatureMatrix, records: &[FitnessRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", csv_row(features, r))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::stratified_folds;
    use crate::featspace::{synth_planted, PlantedSpec};

    #[test]
    fn fitness_edge_cases() {
        assert_eq!(fitness(100.0, 0.0), 0.0);
        assert!((fitness(0.0, 0.1) - 1e5).abs() < 1e-6);
        assert!((fitness(80.0, 0.14) - 0.00175).abs() < 1e-15);
        assert!((fitness(84.0, 0.12) - 0.0014286).abs() < 1e-7);
        assert!((fitness(74.0, 0.29) - 0.0039189).abs() < 1e-7);
    }

    #[test]
    fn timing_mode_parses() {
        assert_eq!("wallclock".parse::<TimingMode>().unwrap(), TimingMode::Wallclock);
        assert!("fast".parse::<TimingMode>().is_err());
    }

    fn planted() -> (FeatureMatrix, FoldAssignment) {
        let m = synth_planted(&PlantedSpec::default()).unwrap();
        let folds = stratified_folds(m.labels(), 10, 3).unwrap();
        (m, folds)
    }

    #[test]
    fn separable_column_scores_full_accuracy() {
        let spec = PlantedSpec {
            noise: 0.05,
            ..PlantedSpec::default()
        };
        let m = synth_planted(&spec).unwrap();
        let folds = stratified_folds(m.labels(), 10, 3).unwrap();
        let mask = Chromosome::from_indices(12, &[spec.planted]);
        let rec = crossval(&m, &mask, ClassifierKind::Lda, &folds, &EvalConfig::default(), 0).unwrap();
        assert_eq!(rec.accuracy_pct, 100.0);
        assert_eq!(rec.fv, rec.cost / 100.0);
        assert_eq!(rec.fold_accuracies.len(), 10);
        // 100 rows, d = 1, one unit each.
        assert!((rec.cost - 100.0 * DEFAULT_SECONDS_PER_UNIT).abs() < 1e-18);
    }

    #[test]
    fn accuracy_is_mean_of_folds() {
        let (m, folds) = planted();
        let mask = Chromosome::from_indices(12, &[0, 4]);
        let rec = crossval(&m, &mask, ClassifierKind::Fknn, &folds, &EvalConfig::default(), 0).unwrap();
        let mean = rec.fold_accuracies.iter().sum::<f64>() / 10.0;
        assert_eq!(rec.accuracy_pct, mean);
    }

    #[test]
    fn empty_mask_rejected() {
        let (m, folds) = planted();
        let err = crossval(
            &m,
            &Chromosome::zeros(12),
            ClassifierKind::Lda,
            &folds,
            &EvalConfig::default(),
            0,
        );
        assert!(matches!(err, Err(EvalError::EmptySelection)));
    }

    #[test]
    fn pruning_matches_full_evaluation() {
        let (m, folds) = planted();
        let cfg = EvalConfig::default();
        for idx in [vec![7], vec![1, 2], vec![0, 5, 9]] {
            let mask = Chromosome::from_indices(12, &idx);
            let pruned = best_over_kinds(&m, &mask, &ClassifierKind::ALL, &folds, &cfg, 0).unwrap();
            let mut full: Option<FitnessRecord> = None;
            for k in ClassifierKind::ALL {
                let r = crossval(&m, &mask, k, &folds, &cfg, 0).unwrap();
                if full.as_ref().is_none_or(|b| r.fv < b.fv) {
                    full = Some(r);
                }
            }
            assert_eq!(pruned, full.unwrap());
        }
    }

    #[test]
    fn deterministic_cost_matches_crossval() {
        let (m, folds) = planted();
        let mask = Chromosome::from_indices(12, &[2, 3]);
        for k in ClassifierKind::ALL {
            let rec = crossval(&m, &mask, k, &folds, &EvalConfig::default(), 0).unwrap();
            assert!((rec.cost - deterministic_cost(&folds, &mask, k, DEFAULT_SECONDS_PER_UNIT)).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_row_format() {
        let (m, folds) = planted();
        let mask = Chromosome::from_indices(12, &[0, 7]);
        let rec = crossval(&m, &mask, ClassifierKind::Lda, &folds, &EvalConfig::default(), 0).unwrap();
        let row = csv_row(&m, &rec);
        assert!(row.starts_with("ch0:Raw:Katz+ch0:A1:Petrosian,LDA,"), "{row}");
    }
}
