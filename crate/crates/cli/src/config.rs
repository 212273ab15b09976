use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use rte_contra::align::AlignParams;
use rte_contra::evaluate::BalanceMode;
use rte_contra::learn::ClassifierSpec;
use rte_contra::stats::FdrMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaggerKind {
    #[default]
    Baseline,
    Pretagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Nc,
    Rf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum FdrArg {
    #[value(name = "BH", alias = "bh")]
    #[serde(rename = "BH")]
    Bh,
    #[value(name = "BY", alias = "by")]
    #[serde(rename = "BY")]
    By,
}

impl From<FdrArg> for FdrMethod {
    fn from(a: FdrArg) -> Self {
        match a {
            FdrArg::Bh => FdrMethod::Bh,
            FdrArg::By => FdrMethod::By,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceArg {
    PerFold,
    Global,
    None,
}

impl From<BalanceArg> for BalanceMode {
    fn from(a: BalanceArg) -> Self {
        match a {
            BalanceArg::PerFold => BalanceMode::PerFold,
            BalanceArg::Global => BalanceMode::Global,
            BalanceArg::None => BalanceMode::None,
        }
    }
}

/// Fully resolved settings of one run: defaults, then the TOML config file,
/// then command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub tagger: TaggerKind,
    pub threshold: usize,
    pub block_crossing: bool,
    pub first_only: bool,
    pub classifier: ClassifierKind,
    pub delta: f64,
    pub mtry: usize,
    pub n_trees: usize,
    pub balance: BalanceArg,
    pub fdr: FdrArg,
    pub pooled: bool,
    pub tune: bool,
    /// Input and output paths by role.
    pub paths: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            seed: 42,
            jobs: None,
            tagger: TaggerKind::Baseline,
            threshold: 1,
            block_crossing: false,
            first_only: false,
            classifier: ClassifierKind::Nc,
            delta: 0.0,
            mtry: 2,
            n_trees: 500,
            balance: BalanceArg::PerFold,
            fdr: FdrArg::By,
            pooled: false,
            tune: false,
            paths: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn align_params(&self) -> AlignParams {
        AlignParams { threshold: self.threshold, block_crossing: self.block_crossing, first_only: self.first_only }
    }

    pub fn classifier_spec(&self) -> ClassifierSpec {
        match self.classifier {
            ClassifierKind::Nc => ClassifierSpec::Nc { delta: self.delta },
            ClassifierKind::Rf => ClassifierSpec::Rf { n_trees: self.n_trees, mtry: self.mtry },
        }
    }

    pub fn path(&mut self, role: &str, p: &Path) {
        self.paths.insert(role.to_string(), p.display().to_string());
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_defaults() {
        let c: RunConfig = toml::from_str("seed = 7\nclassifier = \"rf\"\nbalance = \"global\"\nfdr = \"BH\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.classifier_spec(), ClassifierSpec::Rf { n_trees: 500, mtry: 2 });
        assert_eq!(c.balance, BalanceArg::Global);
        assert_eq!(c.fdr, FdrArg::Bh);
        assert_eq!(c.threshold, 1);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }
}
