//! Event-held-out cross-validation and per-class metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::RteLabel;
use crate::learn::{balance, ClassifierSpec, LearnError, Learner, Predict, Scaler};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("need at least two events with pairs, found {0}")]
    TooFewEvents(usize),
    #[error("{rows} rows, {labels} labels, {events} events")]
    LengthMismatch { rows: usize, labels: usize, events: usize },
    #[error("empty search grid")]
    EmptyGrid,
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Rows are gold labels, columns predictions, both in label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_pairs<I: IntoIterator<Item = (RteLabel, RteLabel)>>(pairs: I) -> Self {
        let mut cm = Self::default();
        for (gold, pred) in pairs {
            cm.add(gold, pred);
        }
        cm
    }

    pub fn add(&mut self, gold: RteLabel, predicted: RteLabel) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances; a fold mean when averaged.
    pub support: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub per_class: BTreeMap<RteLabel, ClassMetrics>,
    pub accuracy: f64,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub weighted: Averages,
}

fn div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn score(cm: &ConfusionMatrix) -> Result<Scores, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut s = Scores::default();
    let mut trace = 0;
    for label in RteLabel::ALL {
        let k = label.index();
        let tp = cm.counts[k][k] as f64;
        let predicted: usize = cm.counts.iter().map(|row| row[k]).sum();
        let support: usize = cm.counts[k].iter().sum();
        trace += cm.counts[k][k];
        let precision = div(tp, predicted as f64);
        let recall = div(tp, support as f64);
        let f1 = div(2.0 * precision * recall, precision + recall);
        s.per_class.insert(label, ClassMetrics { precision, recall, f1, support: support as f64 });
    }
    s.accuracy = trace as f64 / total as f64;
    for m in s.per_class.values() {
        s.macro_avg.precision += m.precision / 3.0;
        s.macro_avg.recall += m.recall / 3.0;
        s.macro_avg.f1 += m.f1 / 3.0;
        let w = m.support / total as f64;
        s.weighted.precision += w * m.precision;
        s.weighted.recall += w * m.recall;
        s.weighted.f1 += w * m.f1;
    }
    Ok(s)
}

/// Arithmetic mean of every metric over folds.
pub fn mean_scores(all: &[Scores]) -> Scores {
    let n = all.len().max(1) as f64;
    let mut out = Scores::default();
    for s in all {
        for (label, m) in &s.per_class {
            let acc = out.per_class.entry(*label).or_default();
            acc.precision += m.precision / n;
            acc.recall += m.recall / n;
            acc.f1 += m.f1 / n;
            acc.support += m.support / n;
        }
        out.accuracy += s.accuracy / n;
        for (acc, m) in [(&mut out.macro_avg, &s.macro_avg), (&mut out.weighted, &s.weighted)] {
            acc.precision += m.precision / n;
            acc.recall += m.recall / n;
            acc.f1 += m.f1 / n;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub event: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per event, in event-name order. Events listed in `declared` but
/// absent from the data produce a warning instead of a fold.
pub fn event_holdout_folds(
    events: &[String],
    declared: Option<&[String]>,
) -> Result<(Vec<Fold>, Vec<String>), EvalError> {
    let mut by_event: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        by_event.entry(e.as_str()).or_default().push(i);
    }
    let mut warnings = Vec::new();
    for name in declared.unwrap_or_default() {
        if !by_event.contains_key(name.as_str()) {
            warnings.push(format!("event {name} has no pairs; fold skipped"));
        }
    }
    if by_event.len() < 2 {
        return Err(EvalError::TooFewEvents(by_event.len()));
    }
    let folds = by_event
        .iter()
        .map(|(event, test)| Fold {
            event: event.to_string(),
            train: (0..events.len()).filter(|i| events[*i] != *event).collect(),
            test: test.clone(),
        })
        .collect();
    Ok((folds, warnings))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceMode {
    /// Balance each training portion separately.
    #[default]
    PerFold,
    /// Balance the whole dataset once, then split.
    Global,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub seed: u64,
    pub balance: BalanceMode,
    /// Also report metrics of the confusion matrix pooled over folds.
    pub pooled: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { seed: 0, balance: BalanceMode::PerFold, pooled: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub event: String,
    pub n_train: usize,
    pub n_test: usize,
    pub scaler: Scaler,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: Option<ClassifierSpec>,
    pub options: CvOptions,
    pub folds: Vec<FoldReport>,
    pub mean: Scores,
    pub pooled: Option<Scores>,
    pub warnings: Vec<String>,
}

/// Seed for the balancing draw of fold `f`.
pub fn fold_balance_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, "fold-balance", fold as u64)
}

/// Seed handed to the learner for fold `f`.
pub fn fold_learner_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, "fold-learner", fold as u64)
}

/// Training indices of a fold after balancing.
pub fn fold_training_indices(
    fold: &Fold,
    fold_no: usize,
    labels: &[RteLabel],
    opts: &CvOptions,
) -> Result<Vec<usize>, EvalError> {
    if opts.balance != BalanceMode::PerFold {
        return Ok(fold.train.clone());
    }
    let train_labels: Vec<RteLabel> = fold.train.iter().map(|&i| labels[i]).collect();
    let sample = balance(&train_labels, fold_balance_seed(opts.seed, fold_no))?;
    Ok(sample.indices.iter().map(|&k| fold.train[k]).collect())
}

fn run_fold<L: Learner>(
    fold: &Fold,
    fold_no: usize,
    rows: &[Vec<f64>],
    labels: &[RteLabel],
    learner: &L,
    opts: &CvOptions,
) -> Result<(FoldReport, Vec<String>), EvalError> {
    let train = fold_training_indices(fold, fold_no, labels, opts)?;
    let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
    let train_labels: Vec<RteLabel> = train.iter().map(|&i| labels[i]).collect();
    let (scaler, warnings) = Scaler::fit(&train_rows)?;
    let warnings = warnings.into_iter().map(|w| format!("fold {}: {w}", fold.event)).collect();
    let model = learner.fit(&scaler.transform_all(&train_rows)?, &train_labels, fold_learner_seed(opts.seed, fold_no))?;
    let mut confusion = ConfusionMatrix::default();
    for &i in &fold.test {
        confusion.add(labels[i], model.predict(&scaler.transform(&rows[i])?)?);
    }
    let report = FoldReport {
        event: fold.event.clone(),
        n_train: train.len(),
        n_test: fold.test.len(),
        scaler,
        scores: score(&confusion)?,
        confusion,
    };
    Ok((report, warnings))
}

/// Leave-one-event-out cross-validation. Folds are independent and run in
/// parallel when the `parallel` feature is on; results are collected in fold
/// order, so the report does not depend on scheduling.
pub fn cross_validate<L: Learner>(
    rows: &[Vec<f64>],
    labels: &[RteLabel],
    events: &[String],
    learner: &L,
    opts: CvOptions,
) -> Result<EvalReport, EvalError> {
    if rows.len() != labels.len() || rows.len() != events.len() {
        return Err(EvalError::LengthMismatch { rows: rows.len(), labels: labels.len(), events: events.len() });
    }
    let mut warnings = Vec::new();
    let (rows, labels, events): (Vec<Vec<f64>>, Vec<RteLabel>, Vec<String>) = if opts.balance == BalanceMode::Global {
        let keep = balance(labels, derive_seed(opts.seed, "global-balance", 0))?.indices;
        (
            keep.iter().map(|&i| rows[i].clone()).collect(),
            keep.iter().map(|&i| labels[i]).collect(),
            keep.iter().map(|&i| events[i].clone()).collect(),
        )
    } else {
        (rows.to_vec(), labels.to_vec(), events.to_vec())
    };
    let (folds, fold_warnings) = event_holdout_folds(&events, None)?;
    warnings.extend(fold_warnings);

    let work = |(k, fold): (usize, &Fold)| run_fold(fold, k, &rows, &labels, learner, &opts);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(FoldReport, Vec<String>), EvalError>> = {
        use rayon::prelude::*;
        folds.par_iter().enumerate().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(FoldReport, Vec<String>), EvalError>> = folds.iter().enumerate().map(work).collect();

    let mut reports = Vec::with_capacity(folds.len());
    for r in results {
        let (report, w) = r?;
        warnings.extend(w);
        reports.push(report);
    }
    let fold_scores: Vec<Scores> = reports.iter().map(|r| r.scores.clone()).collect();
    let pooled = if opts.pooled {
        let mut cm = ConfusionMatrix::default();
        for r in &reports {
            cm.merge(&r.confusion);
        }
        Some(score(&cm)?)
    } else {
        None
    };
    Ok(EvalReport { classifier: None, options: opts, mean: mean_scores(&fold_scores), folds: reports, pooled, warnings })
}

/// Cross-validates `spec` and records it in the report.
pub fn cross_validate_spec(
    rows: &[Vec<f64>],
    labels: &[RteLabel],
    events: &[String],
    spec: ClassifierSpec,
    opts: CvOptions,
) -> Result<EvalReport, EvalError> {
    let mut report = cross_validate(rows, labels, events, &spec, opts)?;
    report.classifier = Some(spec);
    Ok(report)
}

/// Candidate hyperparameters around the defaults, defaults first.
pub fn default_grid(spec: ClassifierSpec) -> Vec<ClassifierSpec> {
    match spec {
        ClassifierSpec::Nc { .. } => [0.0, 0.5, 1.0, 2.0].map(|delta| ClassifierSpec::Nc { delta }).to_vec(),
        ClassifierSpec::Rf { n_trees, .. } => [2, 1, 3].map(|mtry| ClassifierSpec::Rf { n_trees, mtry }).to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub spec: ClassifierSpec,
    pub macro_f1: f64,
}

/// Picks the candidate with the best mean macro F1 under event-held-out CV;
/// earlier candidates win ties. Candidates needing more features than the
/// data has are skipped.
pub fn grid_search(
    rows: &[Vec<f64>],
    labels: &[RteLabel],
    events: &[String],
    grid: &[ClassifierSpec],
    opts: CvOptions,
) -> Result<(ClassifierSpec, Vec<GridPoint>), EvalError> {
    let mut points = Vec::new();
    for spec in grid {
        match cross_validate(rows, labels, events, spec, opts) {
            Ok(r) => points.push(GridPoint { spec: *spec, macro_f1: r.mean.macro_avg.f1 }),
            Err(EvalError::Learn(LearnError::BadMtry { .. })) => continue,
            Err(e) => return Err(e),
        }
    }
    let best = points
        .iter()
        .fold(None::<&GridPoint>, |best, p| match best {
            Some(b) if b.macro_f1 >= p.macro_f1 => Some(b),
            _ => Some(p),
        })
        .ok_or(EvalError::EmptyGrid)?;
    Ok((best.spec, points))
}

/// Display order of the result tables.
const TABLE_ORDER: [RteLabel; 3] = [RteLabel::Con, RteLabel::Ent, RteLabel::Unk];

/// Plain-text table: per-class F1, precision and recall, then accuracy and
/// the support-weighted means.
pub fn format_table(title: &str, s: &Scores) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{:<10} {:>6} {:>6} {:>6}", "", "CON", "ENT", "UNK");
    let class_row = |out: &mut String, name: &str, get: fn(&ClassMetrics) -> f64| {
        let _ = write!(out, "{name:<10}");
        for l in TABLE_ORDER {
            let _ = write!(out, " {:>6.2}", s.per_class.get(&l).map_or(0.0, get));
        }
        out.push('\n');
    };
    class_row(&mut out, "F1", |m| m.f1);
    class_row(&mut out, "precision", |m| m.precision);
    class_row(&mut out, "recall", |m| m.recall);
    for (name, v) in [
        ("accuracy", s.accuracy),
        ("wgt F1", s.weighted.f1),
        ("wgt prec.", s.weighted.precision),
        ("wgt rec.", s.weighted.recall),
    ] {
        let _ = writeln!(out, "{name:<10} {v:>20.2}");
    }
    out
}

pub fn format_report(report: &EvalReport) -> String {
    let name = report.classifier.map_or("classifier", |c| c.name());
    let mut out = format_table(&format!("{name}: mean over {} event folds", report.folds.len()), &report.mean);
    if let Some(p) = &report.pooled {
        out.push('\n');
        out.push_str(&format_table(&format!("{name}: pooled over folds"), p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use RteLabel::*;

    #[test]
    fn perfect_diagonal() {
        let cm = ConfusionMatrix { counts: [[3, 0, 0], [0, 2, 0], [0, 0, 5]] };
        let s = score(&cm).unwrap();
        assert_eq!(s.accuracy, 1.0);
        assert!(s.per_class.values().all(|m| m.f1 == 1.0 && m.precision == 1.0 && m.recall == 1.0));
        assert_eq!((s.macro_avg.f1, s.weighted.f1), (1.0, 1.0));
    }

    #[test]
    fn f1_from_precision_and_recall() {
        // ENT: 1 TP, 3 FN, 1 FP -> precision 0.5, recall 0.25
        let cm = ConfusionMatrix { counts: [[1, 3, 0], [1, 0, 0], [0, 0, 0]] };
        let m = score(&cm).unwrap().per_class[&Ent];
        assert_eq!((m.precision, m.recall), (0.5, 0.25));
        assert!((m.f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_class_predictions_on_balanced_gold() {
        let cm = ConfusionMatrix::from_pairs(RteLabel::ALL.into_iter().flat_map(|g| [(g, Unk); 4]));
        let s = score(&cm).unwrap();
        assert!((s.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.per_class[&Ent].precision, 0.0);
        assert_eq!(s.weighted.recall, s.accuracy);
        assert!(matches!(score(&ConfusionMatrix::default()), Err(EvalError::EmptyMatrix)));
    }

    #[test]
    fn folds_partition_events() {
        let events: Vec<String> = ["b", "a", "b", "c", "a", "d"].map(String::from).to_vec();
        let declared: Vec<String> = ["a", "b", "c", "d", "e"].map(String::from).to_vec();
        let (folds, warnings) = event_holdout_folds(&events, Some(&declared)).unwrap();
        assert_eq!(folds.len(), 4);
        assert_eq!(warnings.len(), 1);
        let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
        for f in &folds {
            assert!(f.test.iter().all(|&i| events[i] == f.event));
            assert!(f.train.iter().all(|&i| events[i] != f.event));
            assert_eq!(f.train.len() + f.test.len(), 6);
        }
        let one: Vec<String> = vec!["x".into(); 3];
        assert!(matches!(event_holdout_folds(&one, None), Err(EvalError::TooFewEvents(1))));
    }

    #[test]
    fn table_layout() {
        let cm = ConfusionMatrix { counts: [[3, 0, 0], [0, 2, 0], [0, 0, 5]] };
        let t = format_table("t", &score(&cm).unwrap());
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 9);
        assert!(lines[1].trim_start().starts_with("CON"));
        assert!(lines[5].starts_with("accuracy"));
    }
}
