//! The `rte-contra` command line: corpus conversion, feature extraction,
//! corpus statistics, cross-validation, training and prediction.
//!
//! Settings resolve in three layers: built-in defaults, an optional TOML file
//! given with `--config`, then flags. The resolved settings, seed included,
//! are written next to every output as JSON.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use rte_contra::align::AlignmentResult;
use rte_contra::corpus::{convert_threads, load_rte_pairs, write_rte_pairs};
use rte_contra::evaluate::{
    cross_validate_spec, default_grid, format_report, format_table, grid_search, score, ConfusionMatrix, CvOptions,
    GridPoint,
};
use rte_contra::features::{featurize_pairs, read_feature_csv, write_feature_csv, FeatureRow, Side, FEATURE_NAMES};
use rte_contra::learn::{balance, ClassifierSpec, TrainedModel};
use rte_contra::normalize::{normalize, normalize_pretagged, BaselineTagger, PretaggedIndex, TagError};
use rte_contra::rng::derive_seed;
use rte_contra::stats::{boxplot_svg, corpus_statistics, stats_csv, BoxplotSummary};
use rte_contra::{NormalizedTweet, RteLabel, TweetPair};

pub use config::{BalanceArg, ClassifierKind, FdrArg, RunConfig, TaggerKind};

#[derive(Debug, Parser)]
#[command(name = "rte-contra", version, about = "Contradiction detection between tweet pairs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random draw of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub tagger: Option<TaggerKind>,
    /// TOML file with run settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Thread records (JSON lines) to an RTE pair file.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// RTE pair file to a feature CSV.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        align: AlignArgs,
        #[command(flatten)]
        pretagged: PretaggedArgs,
        /// Also write every pair's alignment as JSON.
        #[arg(long)]
        align_dump: Option<PathBuf>,
    },
    /// Rank tests and boxplots of a labelled feature CSV.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum)]
        fdr: Option<FdrArg>,
    },
    /// Leave-one-event-out cross-validation.
    Cv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Also score the confusion matrix pooled over folds.
        #[arg(long)]
        pooled: bool,
        /// Pick hyperparameters from a small grid first.
        #[arg(long)]
        tune: bool,
    },
    /// Fit a classifier on a labelled feature CSV.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        params: ModelArgs,
        /// Alignment threshold the features were extracted with.
        #[arg(long)]
        threshold: Option<usize>,
    },
    /// Label pairs or feature rows with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "features", required_unless_present = "features")]
        pairs: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        block_crossing: bool,
        #[arg(long)]
        first_only: bool,
        #[command(flatten)]
        pretagged: PretaggedArgs,
    },
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Minimum aligned substring length.
    #[arg(long)]
    pub threshold: Option<usize>,
    #[arg(long)]
    pub block_crossing: bool,
    #[arg(long)]
    pub first_only: bool,
}

#[derive(Debug, Args)]
pub struct PretaggedArgs {
    /// Tagged tweets, one `word/TAG ...` line per tweet.
    #[arg(long)]
    pub pretagged: Option<PathBuf>,
    /// `id<TAB>line` rows mapping `<pair_id>:t` and `<pair_id>:h` to lines.
    #[arg(long)]
    pub pretagged_index: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierKind>,
    /// Shrinkage of the nearest centroid classifier.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long, value_enum)]
    pub balance: Option<BalanceArg>,
}

impl Cli {
    pub fn parse_from_args<I, T>(args: I) -> Result<Cli, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        Cli::try_parse_from(args)
    }
}

/// What a finished command has to say.
#[derive(Debug, Default)]
pub struct Outcome {
    pub warnings: Vec<String>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

impl Outcome {
    fn warn_all(&mut self, w: impl IntoIterator<Item = String>) {
        self.warnings.extend(w);
    }
}

/// Parses `args` and runs the command; warnings are returned, not printed.
pub fn run<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    execute(Cli::try_parse_from(args)?)
}

pub fn execute(cli: Cli) -> Result<Outcome> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    if let Some(s) = cli.global.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.global.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(t) = cli.global.tagger {
        cfg.tagger = t;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().context("starting worker threads")?;
    pool.install(|| dispatch(cli.command, cfg))
}

fn dispatch(command: Command, mut cfg: RunConfig) -> Result<Outcome> {
    match command {
        Command::Convert { input, output } => {
            cfg.command = "convert".into();
            cfg.path("input", &input);
            cfg.path("output", &output);
            cmd_convert(&cfg, &input, &output)
        }
        Command::Featurize { input, output, align, pretagged, align_dump } => {
            cfg.command = "featurize".into();
            apply_align(&mut cfg, &align);
            apply_pretagged(&mut cfg, &pretagged);
            cfg.path("input", &input);
            cfg.path("output", &output);
            if let Some(d) = &align_dump {
                cfg.path("align_dump", d);
            }
            cmd_featurize(&cfg, &input, &output, align_dump.as_deref())
        }
        Command::Stats { input, out_dir, fdr } => {
            cfg.command = "stats".into();
            if let Some(f) = fdr {
                cfg.fdr = f;
            }
            cfg.path("input", &input);
            cfg.path("out_dir", &out_dir);
            cmd_stats(&cfg, &input, &out_dir)
        }
        Command::Cv { input, out_dir, model, pooled, tune } => {
            cfg.command = "cv".into();
            apply_model(&mut cfg, &model);
            cfg.pooled |= pooled;
            cfg.tune |= tune;
            cfg.path("input", &input);
            cfg.path("out_dir", &out_dir);
            cmd_cv(&cfg, &input, &out_dir)
        }
        Command::Train { input, model, params, threshold } => {
            cfg.command = "train".into();
            apply_model(&mut cfg, &params);
            if let Some(t) = threshold {
                cfg.threshold = t;
            }
            cfg.path("input", &input);
            cfg.path("model", &model);
            cmd_train(&cfg, &input, &model)
        }
        Command::Predict { model, pairs, features, output, block_crossing, first_only, pretagged } => {
            cfg.command = "predict".into();
            cfg.block_crossing |= block_crossing;
            cfg.first_only |= first_only;
            apply_pretagged(&mut cfg, &pretagged);
            cfg.path("model", &model);
            cfg.path("output", &output);
            let input = match (pairs, features) {
                (Some(p), _) => {
                    cfg.path("pairs", &p);
                    PredictInput::Pairs(p)
                }
                (None, Some(f)) => {
                    cfg.path("features", &f);
                    PredictInput::Features(f)
                }
                (None, None) => bail!("predict needs --pairs or --features"),
            };
            cmd_predict(&cfg, &model, &input, &output)
        }
    }
}

fn apply_align(cfg: &mut RunConfig, a: &AlignArgs) {
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    cfg.block_crossing |= a.block_crossing;
    cfg.first_only |= a.first_only;
}

fn apply_pretagged(cfg: &mut RunConfig, p: &PretaggedArgs) {
    if let Some(f) = &p.pretagged {
        cfg.path("pretagged", f);
    }
    if let Some(f) = &p.pretagged_index {
        cfg.path("pretagged_index", f);
    }
}

fn apply_model(cfg: &mut RunConfig, m: &ModelArgs) {
    if let Some(c) = m.classifier {
        cfg.classifier = c;
    }
    if let Some(d) = m.delta {
        cfg.delta = d;
    }
    if let Some(v) = m.mtry {
        cfg.mtry = v;
    }
    if let Some(n) = m.n_trees {
        cfg.n_trees = n;
    }
    if let Some(b) = m.balance {
        cfg.balance = b;
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// `<output>.<suffix>` next to a single-file output.
fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

fn save_config_beside(cfg: &RunConfig, output: &Path) -> Result<()> {
    write_json(&sidecar(output, "run_config.json"), cfg)
}

pub fn cmd_convert(cfg: &RunConfig, input: &Path, output: &Path) -> Result<Outcome> {
    let (pairs, mut report) = convert_threads(&read(input)?);
    if pairs.is_empty() && report.warnings.is_empty() {
        report.warn("no pairs produced");
    }
    write(output, write_rte_pairs(&pairs))?;
    write_json(&sidecar(output, "load_report.json"), &report)?;
    save_config_beside(cfg, output)?;
    let mut out = Outcome::default();
    for r in &report.rejected {
        out.warnings.push(format!("{}: line {} skipped: {}", input.display(), r.line, r.reason));
    }
    out.warn_all(report.warnings.iter().cloned());
    out.summary = format!(
        "{} pairs (ENT {}, CON {}, UNK {}); {} non-direct replies dropped; {} records rejected\n",
        pairs.len(),
        report.per_label.get(RteLabel::Ent),
        report.per_label.get(RteLabel::Con),
        report.per_label.get(RteLabel::Unk),
        report.dropped_non_direct,
        report.rejected.len()
    );
    Ok(out)
}

/// Per-pair normalization according to the configured tagger.
enum Normalizer {
    Baseline(BaselineTagger),
    Pretagged(PretaggedIndex),
}

impl Normalizer {
    fn from_config(cfg: &RunConfig) -> Result<Normalizer> {
        match cfg.tagger {
            TaggerKind::Baseline => Ok(Normalizer::Baseline(BaselineTagger::default())),
            TaggerKind::Pretagged => {
                let (Some(tagged), Some(index)) = (cfg.paths.get("pretagged"), cfg.paths.get("pretagged_index")) else {
                    bail!("--tagger pretagged needs --pretagged and --pretagged-index");
                };
                let idx = PretaggedIndex::load(&read(Path::new(tagged))?, &read(Path::new(index))?)?;
                info!("{} pre-tagged tweets loaded", idx.len());
                Ok(Normalizer::Pretagged(idx))
            }
        }
    }

    fn normalize(&self, pair: &TweetPair, side: Side) -> Result<NormalizedTweet, TagError> {
        match self {
            Normalizer::Baseline(tagger) => {
                let raw = match side {
                    Side::Text => &pair.text,
                    Side::Hypothesis => &pair.hypothesis,
                };
                normalize(raw, tagger)
            }
            Normalizer::Pretagged(idx) => Ok(normalize_pretagged(idx.get(&side.key(&pair.id))?.to_vec())),
        }
    }
}

#[derive(Serialize)]
struct AlignmentDump<'a> {
    pair_id: &'a str,
    #[serde(flatten)]
    alignment: &'a AlignmentResult,
}

type Featurized = Vec<(FeatureRow, AlignmentResult)>;

/// Feature rows with their alignments, and the load warnings.
fn featurize_file(cfg: &RunConfig, input: &Path) -> Result<(Featurized, Vec<String>)> {
    let (pairs, report) = load_rte_pairs(input)?;
    let normalizer = Normalizer::from_config(cfg)?;
    let rows = featurize_pairs(&pairs, cfg.align_params(), |p, side| normalizer.normalize(p, side))?;
    Ok((rows, report.warnings))
}

fn csv_bytes(rows: &[FeatureRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_feature_csv(rows, &mut buf)?;
    Ok(buf)
}

pub fn cmd_featurize(cfg: &RunConfig, input: &Path, output: &Path, align_dump: Option<&Path>) -> Result<Outcome> {
    let (rows, warnings) = featurize_file(cfg, input)?;
    let (rows, alignments): (Vec<FeatureRow>, Vec<AlignmentResult>) = rows.into_iter().unzip();
    write(output, csv_bytes(&rows)?)?;
    if let Some(dump) = align_dump {
        let entries: Vec<AlignmentDump> = rows
            .iter()
            .zip(&alignments)
            .map(|(r, a)| AlignmentDump { pair_id: &r.pair_id, alignment: a })
            .collect();
        write_json(dump, &entries)?;
    }
    save_config_beside(cfg, output)?;
    Ok(Outcome { warnings, summary: format!("{} feature rows written\n", rows.len()) })
}

fn read_features(input: &Path) -> Result<Vec<FeatureRow>> {
    let file = fs::File::open(input).with_context(|| format!("reading {}", input.display()))?;
    read_feature_csv(file).with_context(|| format!("parsing {}", input.display()))
}

pub fn cmd_stats(cfg: &RunConfig, input: &Path, out_dir: &Path) -> Result<Outcome> {
    let rows = read_features(input)?;
    if !rows.iter().any(|r| r.label.is_some()) {
        bail!("{}: no labelled rows; statistics need gold labels", input.display());
    }
    let report = corpus_statistics(&rows, cfg.fdr.into())?;
    write(&out_dir.join("stats.csv"), stats_csv(&report))?;
    write_json(&out_dir.join("boxplots.json"), &report.boxplots)?;
    let mut cells: BTreeMap<(String, String), Vec<BoxplotSummary>> = BTreeMap::new();
    for b in &report.boxplots {
        cells.entry((b.dataset.to_string(), b.event.clone())).or_default().push(b.clone());
    }
    for ((dataset, event), summaries) in &cells {
        let svg = boxplot_svg(summaries[0].dataset, event, summaries);
        write(&out_dir.join("boxplots").join(format!("{dataset}_{event}.svg")), svg)?;
    }
    write_json(&out_dir.join("run_config.json"), cfg)?;
    let significant = report.tests.iter().filter(|t| t.p_adj < rte_contra::stats::ALPHA).count();
    Ok(Outcome {
        warnings: report.warnings,
        summary: format!("{} tests, {significant} significant after adjustment\n", report.tests.len()),
    })
}

/// Labelled rows as matrices.
struct Labelled {
    x: Vec<Vec<f64>>,
    y: Vec<RteLabel>,
    events: Vec<String>,
    warnings: Vec<String>,
}

/// Keeps the labelled rows, with a warning for any unlabelled rows dropped.
fn labelled(rows: &[FeatureRow]) -> Result<Labelled> {
    let mut warnings = Vec::new();
    let unlabelled = rows.iter().filter(|r| r.label.is_none()).count();
    if unlabelled > 0 {
        warnings.push(format!("{unlabelled} unlabelled rows ignored"));
    }
    let kept: Vec<&FeatureRow> = rows.iter().filter(|r| r.label.is_some()).collect();
    if kept.is_empty() {
        bail!("no labelled rows");
    }
    Ok(Labelled {
        x: kept.iter().map(|r| r.features.to_array().to_vec()).collect(),
        y: kept.iter().filter_map(|r| r.label).collect(),
        events: kept.iter().map(|r| r.event.clone()).collect(),
        warnings,
    })
}

#[derive(Serialize)]
struct GridReport {
    chosen: ClassifierSpec,
    points: Vec<GridPoint>,
}

pub fn cmd_cv(cfg: &RunConfig, input: &Path, out_dir: &Path) -> Result<Outcome> {
    let rows = read_features(input)?;
    let Labelled { x, y, events, mut warnings } = labelled(&rows)?;
    let opts = CvOptions { seed: cfg.seed, balance: cfg.balance.into(), pooled: cfg.pooled };
    let mut spec = cfg.classifier_spec();
    if cfg.tune {
        let (best, points) = grid_search(&x, &y, &events, &default_grid(spec), opts)?;
        info!("grid search chose {best:?}");
        write_json(&out_dir.join("grid.json"), &GridReport { chosen: best, points })?;
        spec = best;
    }
    let report = cross_validate_spec(&x, &y, &events, spec, opts)?;
    warnings.extend(report.warnings.iter().cloned());
    let text = format_report(&report);
    write_json(&out_dir.join("cv_report.json"), &report)?;
    write(&out_dir.join("cv_report.txt"), &text)?;
    write_json(&out_dir.join("run_config.json"), cfg)?;
    Ok(Outcome { warnings, summary: text })
}

pub fn cmd_train(cfg: &RunConfig, input: &Path, model_path: &Path) -> Result<Outcome> {
    let rows = read_features(input)?;
    let Labelled { mut x, mut y, mut warnings, .. } = labelled(&rows)?;
    if cfg.balance != BalanceArg::None {
        let keep = balance(&y, derive_seed(cfg.seed, "train-balance", 0))?.indices;
        x = keep.iter().map(|&i| x[i].clone()).collect();
        y = keep.iter().map(|&i| y[i]).collect();
    }
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let (model, w) = TrainedModel::train(cfg.classifier_spec(), &x, &y, names, cfg.threshold, cfg.seed)?;
    warnings.extend(w);
    write(model_path, model.to_json()? + "\n")?;
    save_config_beside(cfg, model_path)?;
    Ok(Outcome { warnings, summary: format!("{} trained on {} rows\n", model.classifier.name(), y.len()) })
}

pub enum PredictInput {
    Pairs(PathBuf),
    Features(PathBuf),
}

pub fn cmd_predict(cfg: &RunConfig, model_path: &Path, input: &PredictInput, output: &Path) -> Result<Outcome> {
    let model = TrainedModel::from_json(&read(model_path)?).with_context(|| format!("loading {}", model_path.display()))?;
    let mut warnings = Vec::new();
    let rows = match input {
        PredictInput::Features(f) => read_features(f)?,
        PredictInput::Pairs(p) => {
            let mut fcfg = cfg.clone();
            fcfg.threshold = model.align_threshold;
            let (rows, w) = featurize_file(&fcfg, p)?;
            warnings.extend(w);
            rows.into_iter().map(|(r, _)| r).collect()
        }
    };
    let mut csv = String::from("pair_id,event,predicted,gold\n");
    let mut cm = ConfusionMatrix::default();
    for r in &rows {
        let predicted = model.predict_raw(&r.features.to_array())?;
        let gold = r.label.map(|l| l.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{predicted},{gold}\n", csv_field(&r.pair_id), csv_field(&r.event)));
        if let Some(g) = r.label {
            cm.add(g, predicted);
        }
    }
    write(output, csv)?;
    save_config_beside(cfg, output)?;
    let mut summary = format!("{} pairs labelled\n", rows.len());
    if cm.total() > 0 {
        if cm.total() < rows.len() {
            warnings.push(format!("metrics cover the {} labelled rows only", cm.total()));
        }
        let scores = score(&cm)?;
        write_json(&sidecar(output, "metrics.json"), &scores)?;
        summary.push_str(&format_table("predictions against gold labels", &scores));
    }
    Ok(Outcome { warnings, summary })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("out/x.csv"), "run_config.json"), PathBuf::from("out/x.csv.run_config.json"));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("run.toml");
        fs::write(&conf, "seed = 3\nclassifier = \"rf\"\nn_trees = 40\n").unwrap();
        let cli = Cli::parse_from_args([
            "rte-contra",
            "--config",
            conf.to_str().unwrap(),
            "--seed",
            "9",
            "cv",
            "--input",
            "a.csv",
            "--out-dir",
            "o",
            "--mtry",
            "1",
        ])
        .unwrap();
        let mut cfg = RunConfig::load(cli.global.config.as_deref()).unwrap();
        cfg.seed = cli.global.seed.unwrap();
        let Command::Cv { model, .. } = cli.command else { panic!() };
        apply_model(&mut cfg, &model);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.classifier_spec(), ClassifierSpec::Rf { n_trees: 40, mtry: 1 });
    }

    #[test]
    fn unknown_classifier_is_a_usage_error() {
        let err = Cli::parse_from_args(["rte-contra", "cv", "--input", "a", "--out-dir", "b", "--classifier", "svm"])
            .unwrap_err();
        assert_eq!(err.kind(), clap::error::ErrorKind::InvalidValue);
    }

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
