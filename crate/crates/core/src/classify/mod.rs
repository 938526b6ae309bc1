//! Binary classifiers behind one train/predict contract.
//!
//! Labels are `±1` (Left ↦ −1, Right ↦ +1). Every trained model is immutable
//! and reports a closed-form prediction cost in abstract op-units.

mod anfis;
mod fknn;
mod lda;
mod svm;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub use anfis::{Anfis, MAX_ANFIS_INPUTS};
pub use fknn::Fknn;
pub use lda::Lda;
pub use svm::Svm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Lda,
    Fknn,
    Svm,
    Anfis,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Lda,
        ClassifierKind::Fknn,
        ClassifierKind::Svm,
        ClassifierKind::Anfis,
    ];

    /// Upper-case report name (`LDA`, `FKNN`, `SVM`, `ANFIS`).
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "LDA",
            ClassifierKind::Fknn => "FKNN",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Anfis => "ANFIS",
        }
    }

    /// Op-units charged per elementary prediction term.
    pub fn cost_constant(self) -> f64 {
        match self {
            ClassifierKind::Lda => COST_LDA,
            ClassifierKind::Fknn => COST_FKNN,
            ClassifierKind::Svm => COST_SVM,
            ClassifierKind::Anfis => COST_ANFIS,
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown classifier '{s}'"))
    }
}

/// One multiply-accumulate of the projection `w·x`.
pub const COST_LDA: f64 = 1.0;
/// One multiply-accumulate of `w·x`.
pub const COST_SVM: f64 = 1.0;
/// One coordinate of one test-to-train distance.
pub const COST_FKNN: f64 = 1.0;
/// One input of one rule's firing strength.
pub const COST_ANFIS: f64 = 1.0;

/// Closed-form prediction cost in op-units.
///
/// Lda and Svm: `n·d`; Fknn: `n·n_train·d`; Anfis: `n·2^d·d`; each times the
/// kind's constant.
pub fn cost_units(kind: ClassifierKind, n_rows: usize, n_train: usize, d: usize) -> f64 {
    let (n, d) = (n_rows as f64, d as f64);
    let terms = match kind {
        ClassifierKind::Lda | ClassifierKind::Svm => n * d,
        ClassifierKind::Fknn => n * n_train as f64 * d,
        ClassifierKind::Anfis => n * 2f64.powf(d) * d,
    };
    terms * kind.cost_constant()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("each class needs at least 2 samples (got {neg} negative, {pos} positive)")]
    DegenerateClass { neg: usize, pos: usize },
    #[error("{0}: linear system is singular after regularisation")]
    SingularSystem(ClassifierKind),
    #[error("ANFIS grid partition supports at most {MAX_ANFIS_INPUTS} inputs, got {0}")]
    DimensionTooLarge(usize),
    #[error("expected {expected} feature columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("inputs contain non-finite values")]
    NonFinite,
    #[error("labels must be -1 or +1 and match the row count")]
    BadLabels,
    #[error("need at least one feature column")]
    NoFeatures,
}

/// Classifier hyperparameters. Defaults: shrinkage 1e-3, k = 5, m = 2,
/// C = 1, KKT tolerance 1e-3, 30 ANFIS epochs at rate 0.01, no z-scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub lda_shrinkage: f64,
    pub fknn_k: usize,
    pub fknn_fuzzifier: f64,
    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
    pub anfis_epochs: usize,
    pub anfis_rate: f64,
    pub normalize: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            lda_shrinkage: 1e-3,
            fknn_k: 5,
            fknn_fuzzifier: 2.0,
            svm_c: 1.0,
            svm_tol: 1e-3,
            svm_max_iter: 100_000,
            anfis_epochs: 30,
            anfis_rate: 0.01,
            normalize: false,
        }
    }
}

/// Per-column z-score statistics from the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScore<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> ZScore<T> {
    pub fn fit(x: &Matrix<T>) -> Self {
        let n = T::from_usize_lossy(x.rows());
        let d = x.cols();
        let mut mean = vec![T::zero(); d];
        for row in x.iter_rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); d];
        for row in x.iter_rows() {
            for j in 0..d {
                let c = row[j] - mean[j];
                var[j] += c * c;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > T::zero() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        out
    }
}

/// Learned parameters of one classifier kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams<T> {
    Lda(Lda<T>),
    Fknn(Fknn<T>),
    Svm(Svm<T>),
    Anfis(Anfis<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    kind: ClassifierKind,
    params: ModelParams<T>,
    feature_dim: usize,
    norm: Option<ZScore<T>>,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn normalization(&self) -> Option<&ZScore<T>> {
        self.norm.as_ref()
    }

    /// Plain-text `key=value` dump of the learned parameters.
    pub fn dump(&self) -> String {
        let list = |v: &[T]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("kind={}\nfeature_dim={}\n", self.kind, self.feature_dim);
        if let Some(z) = &self.norm {
            out += &format!("norm_mean={}\nnorm_scale={}\n", list(&z.mean), list(&z.scale));
        }
        match &self.params {
            ModelParams::Lda(m) => {
                out += &format!("weights={}\nthreshold={}\n", list(&m.weights), m.threshold);
            }
            ModelParams::Svm(m) => {
                out += &format!(
                    "weights={}\nbias={}\nsupport_vectors={}\niterations={}\n",
                    list(&m.weights),
                    m.bias,
                    m.alphas.iter().filter(|a| **a > T::zero()).count(),
                    m.iterations
                );
            }
            ModelParams::Fknn(m) => {
                out += &format!("k={}\nfuzzifier={}\nn_train={}\n", m.k, m.fuzzifier, m.n_train());
            }
            ModelParams::Anfis(m) => {
                out += &format!(
                    "rules={}\ncenters={}\nwidths={}\nconsequents={}\n",
                    m.n_rules(),
                    list(&m.centers),
                    list(&m.widths),
                    list(&m.consequents)
                );
            }
        }
        out
    }
}

fn check_training<T: Scalar>(x: &Matrix<T>, y: &[T]) -> Result<(), ClassifyError> {
    if x.cols() == 0 {
        return Err(ClassifyError::NoFeatures);
    }
    if y.len() != x.rows() || y.iter().any(|&v| v != T::one() && v != -T::one()) {
        return Err(ClassifyError::BadLabels);
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(ClassifyError::NonFinite);
    }
    let pos = y.iter().filter(|&&v| v > T::zero()).count();
    let neg = y.len() - pos;
    if pos < 2 || neg < 2 {
        return Err(ClassifyError::DegenerateClass { neg, pos });
    }
    Ok(())
}

/// Trains a classifier on rows of `x` with `±1` targets `y`.
pub fn train<T: Scalar>(
    kind: ClassifierKind,
    x: &Matrix<T>,
    y: &[T],
    hyper: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel<T>, ClassifyError> {
    check_training(x, y)?;
    let d = x.cols();
    if kind == ClassifierKind::Anfis && d > MAX_ANFIS_INPUTS {
        return Err(ClassifyError::DimensionTooLarge(d));
    }
    let norm = hyper.normalize.then(|| ZScore::fit(x));
    let scaled;
    let xs = match &norm {
        Some(z) => {
            scaled = z.apply(x);
            &scaled
        }
        None => x,
    };
    let params = match kind {
        ClassifierKind::Lda => ModelParams::Lda(Lda::fit(xs, y, T::lit(hyper.lda_shrinkage))?),
        ClassifierKind::Fknn => ModelParams::Fknn(Fknn::fit(xs, y, hyper.fknn_k, T::lit(hyper.fknn_fuzzifier))),
        ClassifierKind::Svm => ModelParams::Svm(Svm::fit(
            xs,
            y,
            T::lit(hyper.svm_c),
            T::lit(hyper.svm_tol),
            hyper.svm_max_iter,
            seed,
        )),
        ClassifierKind::Anfis => ModelParams::Anfis(Anfis::fit(xs, y, hyper.anfis_epochs, T::lit(hyper.anfis_rate))?),
    };
    Ok(TrainedModel {
        kind,
        params,
        feature_dim: d,
        norm,
    })
}

/// Real-valued decision function; its sign is the predicted label. Fknn
/// returns the difference of the positive and negative memberships.
pub fn decision_values<T: Scalar>(model: &TrainedModel<T>, x: &Matrix<T>) -> Result<Vec<T>, ClassifyError> {
    if x.cols() != model.feature_dim {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.feature_dim,
            got: x.cols(),
        });
    }
    let scaled;
    let xs = match &model.norm {
        Some(z) => {
            scaled = z.apply(x);
            &scaled
        }
        None => x,
    };
    Ok(match &model.params {
        ModelParams::Lda(m) => xs.iter_rows().map(|r| m.decision(r)).collect(),
        ModelParams::Svm(m) => xs.iter_rows().map(|r| m.decision(r)).collect(),
        ModelParams::Fknn(m) => xs.iter_rows().map(|r| m.decision(r)).collect(),
        ModelParams::Anfis(m) => xs.iter_rows().map(|r| m.output(r)).collect(),
    })
}

/// Predicted `±1` labels; a zero decision value maps to +1.
pub fn predict<T: Scalar>(model: &TrainedModel<T>, x: &Matrix<T>) -> Result<Vec<T>, ClassifyError> {
    Ok(decision_values(model, x)?
        .into_iter()
        .map(|v| if v >= T::zero() { T::one() } else { -T::one() })
        .collect())
}

/// Closed-form prediction cost of `model` on `n_rows` rows.
pub fn prediction_cost<T: Scalar>(model: &TrainedModel<T>, n_rows: usize) -> f64 {
    let n_train = match &model.params {
        ModelParams::Fknn(m) => m.n_train(),
        _ => 0,
    };
    cost_units(model.kind, n_rows, n_train, model.feature_dim)
}
