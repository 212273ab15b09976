//! The six similarity features of a tweet pair: cosine and F1 overlap of
//! content-word stem types and of content-word tag types, plus two local
//! alignment proportions.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{iterative_align, AlignError, AlignParams, AlignmentResult};
use crate::corpus::{RteLabel, Scenario, TweetPair};
use crate::normalize::{content_pos, content_stems, NormalizedTweet, TagError};

pub const FEATURE_NAMES: [&str; 6] = ["cosine", "f_score", "cosine_pos", "f_score_pos", "laProp", "laPropS"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub cosine: f64,
    pub f_score: f64,
    pub cosine_pos: f64,
    pub f_score_pos: f64,
    #[serde(rename = "laProp")]
    pub la_prop: f64,
    #[serde(rename = "laPropS")]
    pub la_prop_s: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 6] {
        [self.cosine, self.f_score, self.cosine_pos, self.f_score_pos, self.la_prop, self.la_prop_s]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            cosine: a[0],
            f_score: a[1],
            cosine_pos: a[2],
            f_score_pos: a[3],
            la_prop: a[4],
            la_prop_s: a[5],
        }
    }
}

/// `|X ∩ Y| / sqrt(|X| |Y|)`, 0 when either set is empty.
pub fn cosine_overlap<T: Ord>(x: &BTreeSet<T>, y: &BTreeSet<T>) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let common = x.intersection(y).count() as f64;
    common / ((x.len() as f64) * (y.len() as f64)).sqrt()
}

/// Harmonic mean of the two coverage ratios, `2|X ∩ Y| / (|X| + |Y|)`.
pub fn f1_overlap<T: Ord>(x: &BTreeSet<T>, y: &BTreeSet<T>) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let common = x.intersection(y).count() as f64;
    2.0 * common / (x.len() + y.len()) as f64
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(laProp, laPropS)` from an alignment of sequences of lengths `n_x`, `n_y`.
///
/// For sequences of equal length neither tweet is the shorter one; both
/// proportions are averaged, which keeps the value independent of argument
/// order.
pub fn alignment_proportions(al: &AlignmentResult, n_x: usize, n_y: usize) -> (f64, f64) {
    let (m_x, m_y) = (al.m_x(), al.m_y());
    let la_prop = ratio(m_x + m_y, n_x + n_y);
    let la_prop_s = match n_x.cmp(&n_y) {
        std::cmp::Ordering::Less => ratio(m_x, n_x),
        std::cmp::Ordering::Greater => ratio(m_y, n_y),
        std::cmp::Ordering::Equal => la_prop,
    };
    (la_prop, la_prop_s)
}

pub fn featurize(a: &NormalizedTweet, b: &NormalizedTweet, params: AlignParams) -> Result<FeatureVector, AlignError> {
    featurize_with_alignment(a, b, params).map(|(f, _)| f)
}

/// Features plus the alignment over stems they were computed from.
pub fn featurize_with_alignment(
    a: &NormalizedTweet,
    b: &NormalizedTweet,
    params: AlignParams,
) -> Result<(FeatureVector, AlignmentResult), AlignError> {
    let (stems_a, stems_b) = (content_stems(a), content_stems(b));
    let (pos_a, pos_b) = (content_pos(a), content_pos(b));
    let al = iterative_align(&a.stems, &b.stems, params)?;
    let (la_prop, la_prop_s) = alignment_proportions(&al, a.len(), b.len());
    let f = FeatureVector {
        cosine: cosine_overlap(&stems_a, &stems_b),
        f_score: f1_overlap(&stems_a, &stems_b),
        cosine_pos: cosine_overlap(&pos_a, &pos_b),
        f_score_pos: f1_overlap(&pos_a, &pos_b),
        la_prop,
        la_prop_s,
    };
    Ok((f, al))
}

/// Which element of a pair a tweet is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Text,
    Hypothesis,
}

impl Side {
    /// Key of this side of `pair_id` in pre-tagged sidecar files.
    pub fn key(self, pair_id: &str) -> String {
        match self {
            Side::Text => format!("{pair_id}:t"),
            Side::Hypothesis => format!("{pair_id}:h"),
        }
    }
}

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("pair {id}: {source}")]
    Tag {
        id: String,
        #[source]
        source: TagError,
    },
    #[error(transparent)]
    Align(#[from] AlignError),
}

/// Normalizes and featurizes every pair, in input order. `normalize` maps a
/// pair side to its normalized tweet.
pub fn featurize_pairs<F>(
    pairs: &[TweetPair],
    params: AlignParams,
    normalize: F,
) -> Result<Vec<(FeatureRow, AlignmentResult)>, FeaturizeError>
where
    F: Fn(&TweetPair, Side) -> Result<NormalizedTweet, TagError> + Sync,
{
    let one = |p: &TweetPair| -> Result<(FeatureRow, AlignmentResult), FeaturizeError> {
        let tag_err = |source| FeaturizeError::Tag { id: p.id.clone(), source };
        let t = normalize(p, Side::Text).map_err(tag_err)?;
        let h = normalize(p, Side::Hypothesis).map_err(tag_err)?;
        let (features, al) = featurize_with_alignment(&t, &h, params)?;
        let row = FeatureRow {
            pair_id: p.id.clone(),
            event: p.event.clone(),
            scenario: p.scenario,
            label: p.label,
            features,
        };
        Ok((row, al))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pairs.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    pairs.iter().map(one).collect()
}

/// One line of the feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub pair_id: String,
    pub event: String,
    pub scenario: Scenario,
    pub label: Option<RteLabel>,
    pub features: FeatureVector,
}

pub const CSV_HEADER: [&str; 10] = [
    "pair_id", "event", "scenario", "label", "cosine", "f_score", "cosine_pos", "f_score_pos", "laProp", "laPropS",
];

#[derive(Debug, Error)]
pub enum FeatureCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("feature CSV header mismatch: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

pub fn write_feature_csv<W: Write>(rows: &[FeatureRow], out: W) -> Result<(), FeatureCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let mut record = vec![
            r.pair_id.clone(),
            r.event.clone(),
            r.scenario.to_string(),
            r.label.map(|l| l.to_string()).unwrap_or_default(),
        ];
        record.extend(r.features.to_array().iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>, FeatureCsvError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(FeatureCsvError::Header { expected: CSV_HEADER.join(","), found: header.join(",") });
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |message: String| FeatureCsvError::Row { row, message };
        let scenario = rec[2].parse::<Scenario>().map_err(|e| bad(e.to_string()))?;
        let label = match rec[3].trim() {
            "" => None,
            l => Some(l.parse::<RteLabel>().map_err(|e| bad(e.to_string()))?),
        };
        let mut values = [0.0; 6];
        for (k, v) in values.iter_mut().enumerate() {
            let field = &rec[4 + k];
            *v = field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("bad {} value {field:?}", FEATURE_NAMES[k])))?;
        }
        rows.push(FeatureRow {
            pair_id: rec[0].to_string(),
            event: rec[1].to_string(),
            scenario,
            label,
            features: FeatureVector::from_array(values),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{normalize, normalize_tagged, BaselineTagger, PennTag};

    fn set(items: &[&'static str]) -> BTreeSet<&'static str> {
        items.iter().copied().collect()
    }

    fn tweet(s: &str) -> NormalizedTweet {
        normalize(s, &BaselineTagger::default()).unwrap()
    }

    #[test]
    fn overlap_formulas() {
        let (x, y) = (set(&["a", "b", "c"]), set(&["b", "c", "d"]));
        assert!((cosine_overlap(&x, &y) - 2.0 / 3.0).abs() < 1e-15);
        assert!((f1_overlap(&x, &y) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cosine_overlap(&x, &x), 1.0);
        assert_eq!(f1_overlap(&x, &x), 1.0);
        assert_eq!(cosine_overlap(&set(&[]), &y), 0.0);
        assert_eq!(f1_overlap(&set(&["a"]), &set(&["z"])), 0.0);
        // unequal sizes separate the two measures: 1/sqrt(2) vs 2/3
        let (p, q) = (set(&["a"]), set(&["a", "b"]));
        assert!((cosine_overlap(&p, &q) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((f1_overlap(&p, &q) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cat_and_mouse_proportions() {
        let a = tweet("the cat chased the mouse");
        let b = tweet("the mouse was chased by the cat");
        let f = featurize(&a, &b, AlignParams::default()).unwrap();
        assert_eq!(f.la_prop, 10.0 / 12.0);
        assert_eq!(f.la_prop_s, 1.0);
    }

    #[test]
    fn identical_tweets_score_one() {
        let a = tweet("Up to 20 held hostage in Sydney Lindt Cafe siege URL URL");
        let f = featurize(&a, &a.clone(), AlignParams::default()).unwrap();
        assert_eq!(f.to_array(), [1.0; 6]);
    }

    #[test]
    fn disjoint_tweets_score_zero() {
        let a = normalize_tagged([("alpha".to_string(), PennTag::Nn), ("ran".to_string(), PennTag::Vbd)]);
        let b = normalize_tagged([("quickly".to_string(), PennTag::Rb), ("blue".to_string(), PennTag::Jj)]);
        let f = featurize(&a, &b, AlignParams::default()).unwrap();
        assert_eq!(f.to_array(), [0.0; 6]);
    }

    #[test]
    fn empty_tweets_give_zero_alignment_features() {
        let empty = NormalizedTweet::default();
        let f = featurize(&empty, &empty, AlignParams::default()).unwrap();
        assert_eq!(f.to_array(), [0.0; 6]);
        let f = featurize(&empty, &tweet("something happened"), AlignParams::default()).unwrap();
        assert_eq!((f.la_prop, f.la_prop_s), (0.0, 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            FeatureRow {
                pair_id: "p1".into(),
                event: "chebdo".into(),
                scenario: Scenario::Iposts,
                label: Some(RteLabel::Con),
                features: FeatureVector::from_array([0.1, 0.2, 1.0 / 3.0, 0.0, 0.8333333333333334, 1.0]),
            },
            FeatureRow {
                pair_id: "p,2".into(),
                event: "ssiege".into(),
                scenario: Scenario::Threads,
                label: None,
                features: FeatureVector::default(),
            },
        ];
        let mut buf = Vec::new();
        write_feature_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pair_id,event,scenario,label,cosine,f_score,cosine_pos,f_score_pos,laProp,laPropS\n"));
        assert_eq!(read_feature_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(read_feature_csv("a,b\n".as_bytes()), Err(FeatureCsvError::Header { .. })));
        let bad = format!("{}\nx,e,iposts,ENT,0,0,0,0,0,nan\n", CSV_HEADER.join(","));
        assert!(matches!(read_feature_csv(bad.as_bytes()), Err(FeatureCsvError::Row { row: 2, .. })));
    }

    #[test]
    fn batch_featurization_keeps_order_and_reports_ids() {
        let pairs: Vec<TweetPair> = (0..5)
            .map(|i| TweetPair {
                id: format!("p{i}"),
                text: "the cat chased the mouse".into(),
                hypothesis: if i == 3 { "".into() } else { "the mouse was chased by the cat".into() },
                label: Some(RteLabel::Ent),
                event: "e".into(),
                scenario: Scenario::Iposts,
            })
            .collect();
        let tagger = BaselineTagger::default();
        let rows = featurize_pairs(&pairs, AlignParams::default(), |p, side| match side {
            Side::Text => normalize(&p.text, &tagger),
            Side::Hypothesis => normalize(&p.hypothesis, &tagger),
        })
        .unwrap();
        assert_eq!(rows.iter().map(|(r, _)| r.pair_id.as_str()).collect::<Vec<_>>(), ["p0", "p1", "p2", "p3", "p4"]);
        assert_eq!(rows[0].0.features.la_prop, 10.0 / 12.0);
        assert_eq!(rows[0].1.pairs.len(), 5);
        let err = featurize_pairs(&pairs, AlignParams::default(), |p, side| {
            if p.id == "p2" && side == Side::Hypothesis {
                Err(TagError::Untagged("x".into()))
            } else {
                normalize(&p.text, &tagger)
            }
        })
        .unwrap_err();
        assert!(err.to_string().starts_with("pair p2:"));
        assert_eq!(Side::Text.key("p2"), "p2:t");
    }

    #[test]
    fn equal_length_proportions_are_order_free() {
        let x = ["a", "b", "c"];
        let y = ["a", "a", "d"];
        let al = iterative_align(&x, &y, AlignParams::default()).unwrap();
        let swapped = iterative_align(&y, &x, AlignParams::default()).unwrap();
        assert_eq!(alignment_proportions(&al, 3, 3), alignment_proportions(&swapped, 3, 3));
        assert_eq!(alignment_proportions(&al, 3, 3), (0.5, 0.5));
    }
}
