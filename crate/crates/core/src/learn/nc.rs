//! Nearest shrunken centroids.

use serde::{Deserialize, Serialize};

use super::{check_dim, LearnError};
use crate::corpus::RteLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcModel {
    /// Classes with training instances, in label order.
    pub classes: Vec<RteLabel>,
    /// Shrunken centroids, one per entry of `classes`.
    pub centroids: Vec<Vec<f64>>,
    pub raw_centroids: Vec<Vec<f64>>,
    pub overall: Vec<f64>,
    /// Pooled within-class standard deviation per feature.
    pub s: Vec<f64>,
    pub s0: f64,
    pub delta: f64,
    pub priors: Vec<f64>,
}

impl NcModel {
    fn denom(&self, i: usize) -> f64 {
        guarded(self.s[i] + self.s0)
    }
}

// all-zero spread only happens on degenerate data; fall back to plain
// Euclidean distance for that feature
fn guarded(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn nc_train(x: &[Vec<f64>], y: &[RteLabel], delta: f64) -> Result<NcModel, LearnError> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(LearnError::BadDelta(delta));
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch { features: x.len(), labels: y.len() });
    }
    let d = x.first().ok_or(LearnError::EmptyTraining)?.len();
    for row in x {
        check_dim(d, row.len())?;
    }
    let n = x.len();
    let mut sums = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 3];
    for (row, label) in x.iter().zip(y) {
        counts[label.index()] += 1;
        for (acc, v) in sums[label.index()].iter_mut().zip(row) {
            *acc += v;
        }
    }
    let classes: Vec<RteLabel> = RteLabel::ALL.into_iter().filter(|l| counts[l.index()] > 0).collect();
    if classes.len() < 2 {
        return Err(LearnError::TooFewClasses);
    }
    let k = classes.len();
    let raw: Vec<Vec<f64>> = classes
        .iter()
        .map(|l| sums[l.index()].iter().map(|s| s / counts[l.index()] as f64).collect())
        .collect();
    let overall: Vec<f64> = (0..d).map(|i| x.iter().map(|r| r[i]).sum::<f64>() / n as f64).collect();

    let mut ss = vec![0.0; d];
    for (row, label) in x.iter().zip(y) {
        let c = &raw[classes.iter().position(|l| l == label).expect("class present")];
        for i in 0..d {
            ss[i] += (row[i] - c[i]).powi(2);
        }
    }
    let s: Vec<f64> = if n > k {
        ss.iter().map(|v| (v / (n - k) as f64).sqrt()).collect()
    } else {
        vec![0.0; d]
    };
    let s0 = median(&s);

    let centroids = if delta == 0.0 {
        raw.clone()
    } else {
        classes
            .iter()
            .zip(&raw)
            .map(|(l, c)| {
                let m_k = (1.0 / counts[l.index()] as f64 - 1.0 / n as f64).sqrt();
                (0..d)
                    .map(|i| {
                        let scale = m_k * guarded(s[i] + s0);
                        let dik = (c[i] - overall[i]) / scale;
                        let shrunk = dik.signum() * (dik.abs() - delta).max(0.0);
                        overall[i] + scale * shrunk
                    })
                    .collect()
            })
            .collect()
    };
    let priors = classes.iter().map(|l| counts[l.index()] as f64 / n as f64).collect();
    Ok(NcModel { classes, centroids, raw_centroids: raw, overall, s, s0, delta, priors })
}

/// Discriminant score of every modelled class; lower is closer.
pub fn nc_scores(model: &NcModel, x: &[f64]) -> Result<Vec<f64>, LearnError> {
    check_dim(model.s.len(), x.len())?;
    Ok(model
        .centroids
        .iter()
        .zip(&model.priors)
        .map(|(c, prior)| {
            let dist: f64 = (0..x.len()).map(|i| ((x[i] - c[i]) / model.denom(i)).powi(2)).sum();
            dist - 2.0 * prior.ln()
        })
        .collect())
}

pub fn nc_predict(model: &NcModel, x: &[f64]) -> Result<RteLabel, LearnError> {
    let scores = nc_scores(model, x)?;
    let mut best = 0;
    for (k, v) in scores.iter().enumerate() {
        if *v < scores[best] {
            best = k;
        }
    }
    Ok(model.classes[best])
}
