//! Classifiers over the scaled feature matrix: nearest shrunken centroids and
//! a random forest, plus centering/scaling, class balancing and model
//! persistence.

mod forest;
mod nc;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::RteLabel;
use crate::rng;

pub use forest::{rf_predict, rf_train, Node, RfModel, Tree};
pub use nc::{nc_predict, nc_train, NcModel};

/// Bumped whenever the persisted model layout changes.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("class {0} has no instances")]
    ClassMissing(RteLabel),
    #[error("need at least two classes with instances")]
    TooFewClasses,
    #[error("training set is empty")]
    EmptyTraining,
    #[error("{features} rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mtry {mtry} outside 1..={features}")]
    BadMtry { mtry: usize, features: usize },
    #[error("a forest needs at least one tree")]
    NoTrees,
    #[error("shrinkage delta must be finite and non-negative, got {0}")]
    BadDelta(f64),
    #[error("every feature has zero variance in the training data")]
    NoUsableFeatures,
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

fn check_dim(expected: usize, got: usize) -> Result<(), LearnError> {
    if expected == got {
        Ok(())
    } else {
        Err(LearnError::DimensionMismatch { expected, got })
    }
}

/// Per-feature centering and scaling fitted on training rows. Columns with
/// zero variance are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub n_input: usize,
    /// Retained input columns.
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Fits on `rows`; returns the scaler and one warning per dropped column.
    pub fn fit(rows: &[Vec<f64>]) -> Result<(Scaler, Vec<String>), LearnError> {
        let first = rows.first().ok_or(LearnError::EmptyTraining)?;
        let d = first.len();
        for r in rows {
            check_dim(d, r.len())?;
        }
        let n = rows.len() as f64;
        let mut scaler = Scaler { n_input: d, columns: Vec::new(), mean: Vec::new(), std: Vec::new() };
        let mut warnings = Vec::new();
        for c in 0..d {
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = if rows.len() > 1 {
                rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let std = var.sqrt();
            if std > 0.0 && std.is_finite() {
                scaler.columns.push(c);
                scaler.mean.push(mean);
                scaler.std.push(std);
            } else {
                warnings.push(format!("feature column {c} has zero variance and was dropped"));
            }
        }
        if scaler.columns.is_empty() {
            return Err(LearnError::NoUsableFeatures);
        }
        Ok((scaler, warnings))
    }

    pub fn n_output(&self) -> usize {
        self.columns.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        check_dim(self.n_input, x.len())?;
        Ok(self
            .columns
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&c, (m, s))| (x[c] - m) / s)
            .collect())
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LearnError> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedSample {
    /// Retained positions in the input, ascending.
    pub indices: Vec<usize>,
    pub per_class: usize,
    pub seed: u64,
}

/// Downsamples every class without replacement to the size of the smallest.
pub fn balance(labels: &[RteLabel], seed: u64) -> Result<BalancedSample, LearnError> {
    let mut by_class: [Vec<usize>; 3] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    for label in RteLabel::ALL {
        if by_class[label.index()].is_empty() {
            return Err(LearnError::ClassMissing(label));
        }
    }
    let per_class = by_class.iter().map(Vec::len).min().unwrap_or(0);
    let mut indices = Vec::with_capacity(3 * per_class);
    for (k, members) in by_class.iter().enumerate() {
        let mut r = rng::indexed_substream(seed, "balance", k as u64);
        indices.extend(index::sample(&mut r, members.len(), per_class).into_iter().map(|i| members[i]));
    }
    indices.sort_unstable();
    Ok(BalancedSample { indices, per_class, seed })
}

/// Classifier choice and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Nc { delta: f64 },
    Rf { n_trees: usize, mtry: usize },
}

impl ClassifierSpec {
    pub const DEFAULT_NC: ClassifierSpec = ClassifierSpec::Nc { delta: 0.0 };
    pub const DEFAULT_RF: ClassifierSpec = ClassifierSpec::Rf { n_trees: 500, mtry: 2 };

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Nc { .. } => "nc",
            ClassifierSpec::Rf { .. } => "rf",
        }
    }
}

pub trait Predict {
    fn predict(&self, x: &[f64]) -> Result<RteLabel, LearnError>;
}

/// Something that can be fitted on a scaled training matrix.
pub trait Learner: Sync {
    type Model: Predict + Send;

    fn fit(&self, x: &[Vec<f64>], y: &[RteLabel], seed: u64) -> Result<Self::Model, LearnError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Nc(NcModel),
    Rf(RfModel),
}

impl Predict for Model {
    fn predict(&self, x: &[f64]) -> Result<RteLabel, LearnError> {
        match self {
            Model::Nc(m) => nc_predict(m, x),
            Model::Rf(m) => rf_predict(m, x),
        }
    }
}

impl Learner for ClassifierSpec {
    type Model = Model;

    fn fit(&self, x: &[Vec<f64>], y: &[RteLabel], seed: u64) -> Result<Model, LearnError> {
        match *self {
            ClassifierSpec::Nc { delta } => nc_train(x, y, delta).map(Model::Nc),
            ClassifierSpec::Rf { n_trees, mtry } => rf_train(x, y, n_trees, mtry, seed).map(Model::Rf),
        }
    }
}

/// A fitted model with everything needed to classify raw feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub classifier: ClassifierSpec,
    pub seed: u64,
    pub feature_names: Vec<String>,
    /// Alignment threshold the features were extracted with.
    pub align_threshold: usize,
    pub scaler: Scaler,
    pub model: Model,
}

impl TrainedModel {
    /// Fits the scaler and the classifier on raw (unscaled) rows.
    pub fn train(
        spec: ClassifierSpec,
        rows: &[Vec<f64>],
        labels: &[RteLabel],
        feature_names: Vec<String>,
        align_threshold: usize,
        seed: u64,
    ) -> Result<(TrainedModel, Vec<String>), LearnError> {
        if rows.len() != labels.len() {
            return Err(LearnError::LengthMismatch { features: rows.len(), labels: labels.len() });
        }
        let (scaler, warnings) = Scaler::fit(rows)?;
        let scaled = scaler.transform_all(rows)?;
        let model = spec.fit(&scaled, labels, seed)?;
        let trained = TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            classifier: spec,
            seed,
            feature_names,
            align_threshold,
            scaler,
            model,
        };
        Ok((trained, warnings))
    }

    pub fn predict_raw(&self, x: &[f64]) -> Result<RteLabel, LearnError> {
        self.model.predict(&self.scaler.transform(x)?)
    }

    pub fn to_json(&self) -> Result<String, LearnError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a persisted model, rejecting other format versions before
    /// looking at the rest of the document.
    pub fn from_json(text: &str) -> Result<TrainedModel, LearnError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("format_version").and_then(serde_json::Value::as_u64).unwrap_or(0);
        if found != u64::from(MODEL_FORMAT_VERSION) {
            return Err(LearnError::VersionMismatch { found, expected: MODEL_FORMAT_VERSION });
        }
        Ok(serde_json::from_value(value)?)
    }
}
