use proptest::collection::vec;
use proptest::prelude::*;

use rte_contra::align::{AlignParams, AlignmentResult};
use rte_contra::evaluate::{event_holdout_folds, score, ConfusionMatrix};
use rte_contra::features::{alignment_proportions, featurize};
use rte_contra::learn::{balance, nc_predict, nc_train, rf_predict, rf_train, Scaler};
use rte_contra::normalize::{normalize, normalize_tagged, BaselineTagger, PennTag};
use rte_contra::stats::{fdr_adjust, kruskal_wallis, FdrMethod};
use rte_contra::{NormalizedTweet, RteLabel};

const WORDS: &[&str] = &[
    "police", "shot", "paris", "hostages", "cafe", "not", "the", "a", "killed", "12", "gunmen", "flag", "fake",
    "URL", "siege", "crash", "pilot", "quickly", "was", "of",
];

fn tag_strategy() -> impl Strategy<Value = PennTag> {
    prop::sample::select(PennTag::ALL.to_vec())
}

fn tweet() -> impl Strategy<Value = NormalizedTweet> {
    vec((prop::sample::select(WORDS), tag_strategy()), 0..14)
        .prop_map(|toks| normalize_tagged(toks.into_iter().map(|(w, t)| (w.to_string(), t))))
}

fn label() -> impl Strategy<Value = RteLabel> {
    (0usize..3).prop_map(|i| RteLabel::from_index(i).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn features_bounded_ordered_symmetric(a in tweet(), b in tweet()) {
        let f = featurize(&a, &b, AlignParams::default()).unwrap();
        for v in f.to_array() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(f.cosine >= f.f_score - 1e-12);
        prop_assert!(f.cosine_pos >= f.f_score_pos - 1e-12);
        let g = featurize(&b, &a, AlignParams::default()).unwrap();
        prop_assert_eq!(f.to_array(), g.to_array());
    }

    #[test]
    fn one_to_one_alignment_keeps_shorter_proportion_above_overall(a in tweet(), b in tweet()) {
        let params = AlignParams { block_crossing: true, ..AlignParams::default() };
        let f = featurize(&a, &b, params).unwrap();
        prop_assert!(f.la_prop_s >= f.la_prop - 1e-12);
    }

    #[test]
    fn proportions_in_unit_interval(m_x in 0usize..10, extra_x in 0usize..10, m_y in 0usize..10, extra_y in 0usize..10) {
        let al = AlignmentResult {
            pairs: Vec::new(),
            covered_x: (0..m_x).collect(),
            covered_y: (0..m_y).collect(),
        };
        let (p, s) = alignment_proportions(&al, m_x + extra_x, m_y + extra_y);
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&s));
    }

    #[test]
    fn normalization_is_deterministic_and_aligned(words in vec(prop::sample::select(WORDS), 0..12), caps in any::<bool>()) {
        let raw = words.iter().map(|w| if caps { w.to_uppercase() } else { w.to_string() }).collect::<Vec<_>>().join(" ");
        let tagger = BaselineTagger::default();
        let t = normalize(&raw, &tagger).unwrap();
        prop_assert_eq!(&t, &normalize(&raw, &tagger).unwrap());
        prop_assert_eq!(t.tokens.len(), t.pos.len());
        prop_assert_eq!(t.tokens.len(), t.stems.len());
        prop_assert_eq!(t.tokens.len(), t.is_content.len());
        for tok in &t.tokens {
            prop_assert_eq!(tok.to_lowercase(), tok.clone());
        }
    }

    #[test]
    fn kruskal_wallis_rank_invariant(groups in vec(vec(-50.0f64..50.0, 1..8), 2..4)) {
        let total: usize = groups.iter().map(Vec::len).sum();
        prop_assume!(total >= 3);
        let refs: Vec<&[f64]> = groups.iter().map(Vec::as_slice).collect();
        let base = kruskal_wallis(&refs).unwrap();
        let transformed: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| (v / 10.0).exp() * 3.0 + 1.0).collect()).collect();
        let trefs: Vec<&[f64]> = transformed.iter().map(Vec::as_slice).collect();
        let t = kruskal_wallis(&trefs).unwrap();
        prop_assert!((base.h - t.h).abs() < 1e-9 * base.h.max(1.0));
        prop_assert!((base.p - t.p).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&base.p));
    }

    #[test]
    fn fdr_order_free_and_ordered(p in vec(0.0f64..=1.0, 1..20), rot in 0usize..20) {
        let bh = fdr_adjust(&p, FdrMethod::Bh).unwrap();
        let by = fdr_adjust(&p, FdrMethod::By).unwrap();
        for i in 0..p.len() {
            prop_assert!(by[i] >= bh[i] - 1e-15);
            prop_assert!(bh[i] >= p[i] - 1e-15);
            prop_assert!(by[i] <= 1.0);
        }
        let k = rot % p.len();
        let mut rotated = p.clone();
        rotated.rotate_left(k);
        let mut bh_rot = bh.clone();
        bh_rot.rotate_left(k);
        prop_assert_eq!(fdr_adjust(&rotated, FdrMethod::Bh).unwrap(), bh_rot);
        // adjusted values keep the order of the raw values
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in idx.windows(2) {
            prop_assert!(bh[w[0]] <= bh[w[1]] + 1e-15);
        }
    }

    #[test]
    fn scaler_standardizes_training_rows(rows in vec(vec(-5.0f64..5.0, 3), 3..30)) {
        let Ok((s, _)) = Scaler::fit(&rows) else { return Ok(()) };
        let t = s.transform_all(&rows).unwrap();
        let n = t.len() as f64;
        for c in 0..s.n_output() {
            let mean = t.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = t.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn balance_equalizes_without_repeats(labels in vec(label(), 3..80), seed in any::<u64>()) {
        let Ok(b) = balance(&labels, seed) else {
            prop_assert!(RteLabel::ALL.iter().any(|l| !labels.contains(l)));
            return Ok(());
        };
        let mut counts = [0; 3];
        for &i in &b.indices {
            counts[labels[i].index()] += 1;
        }
        prop_assert_eq!(counts, [b.per_class; 3]);
        prop_assert!(b.indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(b.indices.iter().all(|&i| i < labels.len()));
    }

    #[test]
    fn nc_prediction_invariant_under_rescaling(
        x in vec(vec(-3.0f64..3.0, 2), 6..30),
        y in vec(label(), 30),
        q in vec(-4.0f64..4.0, 2),
        c in 0.1f64..10.0,
    ) {
        let y = &y[..x.len()];
        let Ok(m) = nc_train(&x, y, 0.0) else { return Ok(()) };
        let mut scaled = m.clone();
        for cent in &mut scaled.centroids {
            cent.iter_mut().for_each(|v| *v *= c);
        }
        scaled.s.iter_mut().for_each(|v| *v *= c);
        scaled.s0 *= c;
        let qs: Vec<f64> = q.iter().map(|v| v * c).collect();
        if m.s.iter().all(|s| s + m.s0 > 0.0) {
            prop_assert_eq!(nc_predict(&m, &q).unwrap(), nc_predict(&scaled, &qs).unwrap());
        }
    }

    #[test]
    fn nc_matches_midpoint_rule_in_one_dimension(
        a in vec(0.0f64..1.0, 5),
        b in vec(3.0f64..4.0, 5),
        q in -2.0f64..6.0,
    ) {
        let x: Vec<Vec<f64>> = a.iter().chain(&b).map(|v| vec![*v]).collect();
        let y: Vec<RteLabel> = [RteLabel::Ent; 5].into_iter().chain([RteLabel::Con; 5]).collect();
        let m = nc_train(&x, &y, 0.0).unwrap();
        let (ca, cb) = (a.iter().sum::<f64>() / 5.0, b.iter().sum::<f64>() / 5.0);
        let mid = (ca + cb) / 2.0;
        prop_assume!((q - mid).abs() > 1e-9);
        let expected = if q < mid { RteLabel::Ent } else { RteLabel::Con };
        prop_assert_eq!(nc_predict(&m, &[q]).unwrap(), expected);
    }

    #[test]
    fn forest_is_reproducible(x in vec(vec(-3.0f64..3.0, 3), 10..40), y in vec(label(), 40), seed in any::<u64>()) {
        let y = &y[..x.len()];
        let a = rf_train(&x, y, 8, 2, seed).unwrap();
        let b = rf_train(&x, y, 8, 2, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for row in &x {
            prop_assert_eq!(rf_predict(&a, row).unwrap(), rf_predict(&b, row).unwrap());
        }
    }

    #[test]
    fn scores_follow_relabeling(counts in vec(0usize..20, 9), perm in Just([1usize, 2, 0]).prop_union(Just([2, 0, 1])).or(Just([0, 2, 1]))) {
        let mut cm = ConfusionMatrix::default();
        let mut pm = ConfusionMatrix::default();
        for g in 0..3 {
            for p in 0..3 {
                cm.counts[g][p] = counts[g * 3 + p];
                pm.counts[perm[g]][perm[p]] = counts[g * 3 + p];
            }
        }
        prop_assume!(cm.total() > 0);
        let (s, t) = (score(&cm).unwrap(), score(&pm).unwrap());
        for l in RteLabel::ALL {
            let moved = RteLabel::from_index(perm[l.index()]).unwrap();
            prop_assert_eq!(s.per_class[&l], t.per_class[&moved]);
        }
        prop_assert!((s.accuracy - t.accuracy).abs() < 1e-15);
        prop_assert!((s.weighted.recall - s.accuracy).abs() < 1e-12);
        for m in s.per_class.values() {
            prop_assert!((0.0..=1.0).contains(&m.f1));
        }
    }

    #[test]
    fn folds_partition_pairs(events in vec(prop::sample::select(vec!["a", "b", "c", "d"]), 2..40)) {
        let events: Vec<String> = events.into_iter().map(String::from).collect();
        let Ok((folds, _)) = event_holdout_folds(&events, None) else {
            prop_assert!(events.iter().all(|e| *e == events[0]));
            return Ok(());
        };
        let mut seen = vec![0; events.len()];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            prop_assert!(f.train.iter().all(|&i| events[i] != f.event));
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }
}
