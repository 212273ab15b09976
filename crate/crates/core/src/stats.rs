//! Corpus statistics over the feature matrix: Kruskal-Wallis tests per
//! (dataset, event, feature) cell with false-discovery-rate control, pairwise
//! Mann-Whitney post hoc tests between the three classes, and boxplot
//! summaries with an SVG rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::{erf::erfc, gamma::gamma_ur};
use thiserror::Error;

use crate::corpus::{RteLabel, Scenario};
use crate::features::{FeatureRow, FEATURE_NAMES};

/// Significance level of the post hoc decisions.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("need at least 3 observations, got {0}")]
    TooFewObservations(usize),
    #[error("p-value {0} outside [0, 1]")]
    PValueOutOfRange(f64),
    #[error("non-finite observation")]
    NonFinite,
    #[error("unknown FDR method {0:?}")]
    UnknownMethod(String),
}

/// Average ranks (1-based) and the tie term `sum(t^3 - t)`.
fn rank_with_ties(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    (ranks, tie_term)
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df / 2.0, x / 2.0)
    }
}

/// Upper tail of the standard normal distribution.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p: f64,
    pub df: usize,
}

/// Tie-corrected Kruskal-Wallis H test. If every value is identical the tie
/// correction vanishes and the result is `H = 0, p = 1`.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<KruskalWallis, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: groups.len() });
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup(i));
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    if all.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = all.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations(n));
    }
    let df = groups.len() - 1;
    let (ranks, tie_term) = rank_with_ties(&all);
    let nf = n as f64;
    let correction = 1.0 - tie_term / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, p: 1.0, df });
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0)) / correction;
    let h = h.max(0.0);
    Ok(KruskalWallis { h, p: chi2_sf(h, df as f64), df })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FdrMethod {
    /// Benjamini-Hochberg step-up.
    #[serde(rename = "BH")]
    Bh,
    /// Benjamini-Yekutieli, valid under arbitrary dependence.
    #[serde(rename = "BY")]
    #[default]
    By,
}

impl FromStr for FdrMethod {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "BH" => Ok(FdrMethod::Bh),
            "BY" => Ok(FdrMethod::By),
            _ => Err(StatsError::UnknownMethod(s.to_string())),
        }
    }
}

/// Step-up FDR adjustment; output is in input order.
pub fn fdr_adjust(pvalues: &[f64], method: FdrMethod) -> Result<Vec<f64>, StatsError> {
    if let Some(&p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::PValueOutOfRange(p));
    }
    let m = pvalues.len();
    let c_m = match method {
        FdrMethod::Bh => 1.0,
        FdrMethod::By => (1..=m).map(|i| 1.0 / i as f64).sum(),
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = pvalues[idx] * m as f64 * c_m / (rank + 1) as f64;
        running = running.min(candidate);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p: f64,
}

/// Two-sided Mann-Whitney U test with the tie-corrected normal approximation
/// and continuity correction.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptyGroup(0));
    }
    if b.is_empty() {
        return Err(StatsError::EmptyGroup(1));
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    if all.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let (ranks, tie_term) = rank_with_ties(&all);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0 });
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(MannWhitney { u, p: (2.0 * normal_sf(z)).min(1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDecision {
    pub first: RteLabel,
    pub second: RteLabel,
    pub u: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    pub significant: bool,
}

/// Class pairs in report order: ENT-CON, ENT-UNK, CON-UNK.
pub const CLASS_PAIRS: [(RteLabel, RteLabel); 3] = [
    (RteLabel::Ent, RteLabel::Con),
    (RteLabel::Ent, RteLabel::Unk),
    (RteLabel::Con, RteLabel::Unk),
];

/// Pairwise rank tests between the three class groups (indexed by label),
/// FDR-adjusted within the family of three.
pub fn posthoc_pairwise(groups: [&[f64]; 3], method: FdrMethod) -> Result<[PairwiseDecision; 3], StatsError> {
    let mut tests = Vec::with_capacity(3);
    for (a, b) in CLASS_PAIRS {
        tests.push(mann_whitney(groups[a.index()], groups[b.index()])?);
    }
    let raw: Vec<f64> = tests.iter().map(|t| t.p).collect();
    let adj = fdr_adjust(&raw, method)?;
    Ok(std::array::from_fn(|k| PairwiseDecision {
        first: CLASS_PAIRS[k].0,
        second: CLASS_PAIRS[k].1,
        u: tests[k].u,
        p_raw: raw[k],
        p_adj: adj[k],
        significant: adj[k] < ALPHA,
    }))
}

/// Linear interpolation between order statistics (`(n-1)q` positions) of a
/// sorted, nonempty slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub dataset: Scenario,
    pub event: String,
    pub feature: String,
    pub class: RteLabel,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme observations within 1.5 IQR of the box.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumbers {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

/// Five-number summary plus 1.5 IQR whiskers and outliers; `None` for an
/// empty sample.
pub fn five_numbers(values: &[f64]) -> Option<(FiveNumbers, Vec<f64>)> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || sorted.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence);
    let whisker_low = inside().next().unwrap_or(q1);
    let whisker_high = inside().next_back().unwrap_or(q3);
    let outliers = sorted.iter().copied().filter(|v| *v < lo_fence || *v > hi_fence).collect();
    let summary = FiveNumbers {
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        whisker_low,
        whisker_high,
    };
    Some((summary, outliers))
}

/// One Kruskal-Wallis row of the statistics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub dataset: Scenario,
    pub event: String,
    pub feature: String,
    pub h: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    /// Present only when all three classes have observations.
    pub posthoc: Option<[PairwiseDecision; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub tests: Vec<TestResult>,
    pub boxplots: Vec<BoxplotSummary>,
    pub warnings: Vec<String>,
}

type CellKey = (Scenario, String);

/// Per-class values of every feature, keyed by (dataset, event).
fn group_rows(rows: &[FeatureRow]) -> BTreeMap<CellKey, [[Vec<f64>; 3]; 6]> {
    let mut cells: BTreeMap<CellKey, [[Vec<f64>; 3]; 6]> = BTreeMap::new();
    for row in rows {
        let Some(label) = row.label else { continue };
        let cell = cells.entry((row.scenario, row.event.clone())).or_default();
        for (f, v) in row.features.to_array().into_iter().enumerate() {
            cell[f][label.index()].push(v);
        }
    }
    cells
}

/// Runs every test and summary over a labelled feature matrix. The FDR
/// adjustment treats all Kruskal-Wallis tests of the run as one family.
pub fn corpus_statistics(rows: &[FeatureRow], method: FdrMethod) -> Result<StatsReport, StatsError> {
    let mut report = StatsReport::default();
    let unlabeled = rows.iter().filter(|r| r.label.is_none()).count();
    if unlabeled > 0 {
        report.warnings.push(format!("{unlabeled} unlabeled rows ignored"));
    }
    let cells = group_rows(rows);
    for ((dataset, event), features) in &cells {
        for (f, classes) in features.iter().enumerate() {
            let feature = FEATURE_NAMES[f].to_string();
            for label in RteLabel::ALL {
                let values = &classes[label.index()];
                match five_numbers(values) {
                    Some((s, outliers)) => report.boxplots.push(BoxplotSummary {
                        dataset: *dataset,
                        event: event.clone(),
                        feature: feature.clone(),
                        class: label,
                        n: values.len(),
                        min: s.min,
                        q1: s.q1,
                        median: s.median,
                        q3: s.q3,
                        max: s.max,
                        whisker_low: s.whisker_low,
                        whisker_high: s.whisker_high,
                        outliers,
                    }),
                    None if f == 0 => report
                        .warnings
                        .push(format!("{dataset}/{event}: no {label} instances, summaries omitted")),
                    None => {}
                }
            }
            let present: Vec<&[f64]> = classes.iter().filter(|g| !g.is_empty()).map(Vec::as_slice).collect();
            let total: usize = present.iter().map(|g| g.len()).sum();
            if present.len() < 2 || total < 3 {
                report
                    .warnings
                    .push(format!("{dataset}/{event}/{feature}: too few classes or observations for a test"));
                continue;
            }
            let kw = kruskal_wallis(&present)?;
            let posthoc = if present.len() == 3 {
                Some(posthoc_pairwise([&classes[0], &classes[1], &classes[2]], method)?)
            } else {
                None
            };
            report.tests.push(TestResult {
                dataset: *dataset,
                event: event.clone(),
                feature,
                h: kw.h,
                p_raw: kw.p,
                p_adj: kw.p,
                posthoc,
            });
        }
    }
    let raw: Vec<f64> = report.tests.iter().map(|t| t.p_raw).collect();
    for (t, adj) in report.tests.iter_mut().zip(fdr_adjust(&raw, method)?) {
        t.p_adj = adj;
    }
    Ok(report)
}

pub const STATS_CSV_HEADER: &str = "dataset,event,feature,H,p_raw,p_adj,sig_ENT_CON,sig_ENT_UNK,sig_CON_UNK";

/// Stats report CSV; significance columns are empty when a class is missing.
pub fn stats_csv(report: &StatsReport) -> String {
    let mut out = String::from(STATS_CSV_HEADER);
    out.push('\n');
    for t in &report.tests {
        let sig: Vec<String> = match &t.posthoc {
            Some(d) => d.iter().map(|x| x.significant.to_string()).collect(),
            None => vec![String::new(); 3],
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.dataset,
            csv_field(&t.event),
            t.feature,
            t.h,
            t.p_raw,
            t.p_adj,
            sig.join(",")
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the boxplots of one (dataset, event) as a 2 x 3 grid of panels,
/// one per feature, each with a box per class.
pub fn boxplot_svg(dataset: Scenario, event: &str, summaries: &[BoxplotSummary]) -> String {
    const PANEL_W: f64 = 220.0;
    const PANEL_H: f64 = 200.0;
    const MARGIN: f64 = 40.0;
    const TOP: f64 = 50.0;
    let colors = ["#4c72b0", "#dd8452", "#55a868"];
    let width = MARGIN + 3.0 * (PANEL_W + MARGIN);
    let height = TOP + 2.0 * (PANEL_H + MARGIN);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{} / {}</text>"#,
        width / 2.0,
        dataset,
        xml_text(event)
    );
    for (f, name) in FEATURE_NAMES.iter().enumerate() {
        let x0 = MARGIN + (f % 3) as f64 * (PANEL_W + MARGIN);
        let y0 = TOP + (f / 3) as f64 * (PANEL_H + MARGIN);
        let panel: Vec<&BoxplotSummary> = summaries
            .iter()
            .filter(|s| s.dataset == dataset && s.event == event && s.feature == *name)
            .collect();
        let lo = panel.iter().map(|s| s.min).fold(0.0_f64, f64::min);
        let hi = panel.iter().map(|s| s.max).fold(1.0_f64, f64::max);
        let y = |v: f64| y0 + PANEL_H - (v - lo) / (hi - lo) * PANEL_H;
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.1}" y="{y0:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{name}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 6.0
        );
        for tick in [lo, (lo + hi) / 2.0, hi] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9">{tick:.2}</text>"#,
                x0 - 4.0,
                y(tick) + 3.0
            );
        }
        let slot = PANEL_W / 3.0;
        for label in RteLabel::ALL {
            let cx = x0 + slot * (label.index() as f64 + 0.5);
            let _ = writeln!(
                svg,
                r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
                y0 + PANEL_H + 14.0
            );
            let Some(s) = panel.iter().find(|s| s.class == label) else { continue };
            let color = colors[label.index()];
            let half = slot * 0.3;
            let _ = writeln!(
                svg,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                y(s.whisker_low),
                y(s.whisker_high)
            );
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.6" stroke="black"/>"#,
                cx - half,
                y(s.q3),
                2.0 * half,
                (y(s.q1) - y(s.q3)).max(0.5)
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
                cx - half,
                y(s.median),
                cx + half,
                y(s.median)
            );
            for o in &s.outliers {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{cx:.1}" cy="{:.1}" r="2" fill="none" stroke="{color}"/>"#,
                    y(*o)
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}
