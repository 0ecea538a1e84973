use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::binary::{CellPrior, CountData};
use crate::error::{Error, Result};
use crate::factor::FactorSettings;
use crate::kernel::{RbSettings, TWO_CLUSTER_NOISE, TWO_CLUSTER_SIZE};
use crate::mixture::{McmcSettings, NiwMixturePrior};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    MixtureFig1,
    #[serde(rename = "digits-6v9")]
    Digits6v9,
    KernelSynthetic,
    BinaryCell,
    Relevance,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] =
        [Self::MixtureFig1, Self::Digits6v9, Self::KernelSynthetic, Self::BinaryCell, Self::Relevance];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MixtureFig1 => "mixture-fig1",
            Self::Digits6v9 => "digits-6v9",
            Self::KernelSynthetic => "kernel-synthetic",
            Self::BinaryCell => "binary-cell",
            Self::Relevance => "relevance",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gaussian-mixture regression scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureScenario {
    pub prior: NiwMixturePrior,
    pub n: usize,
    pub labeled_lo: f64,
    pub labeled_hi: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    pub mcmc: McmcSettings,
}

impl Default for MixtureScenario {
    fn default() -> Self {
        Self {
            prior: NiwMixturePrior::illustrative(2),
            n: 175,
            labeled_lo: -1.0,
            labeled_hi: 1.0,
            grid_lo: -2.0,
            grid_hi: 2.0,
            grid_points: 81,
            mcmc: McmcSettings::default(),
        }
    }
}

/// Two-class image problem solved with empirical factors and probit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DigitsScenario {
    pub first_digit: u8,
    pub second_digit: u8,
    pub pool_per_class: usize,
    pub labeled_per_class: usize,
    /// Test rows per class taken after the pool; all remaining rows if unset.
    pub test_per_class: Option<usize>,
    pub factor: FactorSettings,
    /// Run on simulated factor data instead of IDX files.
    pub synthetic: bool,
    pub synthetic_test_size: usize,
}

impl Default for DigitsScenario {
    fn default() -> Self {
        Self {
            first_digit: 6,
            second_digit: 9,
            pool_per_class: 400,
            labeled_per_class: 2,
            test_per_class: Some(1000),
            factor: FactorSettings::default(),
            synthetic: false,
            synthetic_test_size: 500,
        }
    }
}

/// Two-cluster kernel benchmark and its labeled-fraction sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelScenario {
    pub n_points: usize,
    pub noise: f64,
    pub settings: RbSettings,
    pub grid_size: usize,
    pub wide_labeled_per_class: usize,
    pub sweep: bool,
}

impl Default for KernelScenario {
    fn default() -> Self {
        Self {
            n_points: TWO_CLUSTER_SIZE,
            noise: TWO_CLUSTER_NOISE,
            settings: RbSettings::default(),
            grid_size: 40,
            wide_labeled_per_class: 4,
            sweep: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinaryScenario {
    pub prior: CellPrior,
    pub data: CountData,
}

impl Default for BinaryScenario {
    fn default() -> Self {
        Self {
            prior: CellPrior::DirichletMixture { a: 0.5, dir0: [16.0, 2.0, 1.0, 1.0], dir1: [1.0, 1.0, 2.0, 16.0] },
            data: CountData { labeled: [[3, 1], [1, 3]], unlabeled: [12, 4] },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelevanceScenario {
    /// Model specification file; the built-in catalogue when unset.
    pub spec_file: Option<PathBuf>,
}

/// External data files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputPaths {
    pub idx_images: Option<PathBuf>,
    pub idx_labels: Option<PathBuf>,
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioId,
    pub seed: u64,
    pub replicates: usize,
    /// Labeled fractions for sweeps, each in (0, 1].
    pub labeled_fractions: Vec<f64>,
    /// Explicit labeled count; overrides the fractions when set.
    pub labeled_count: Option<usize>,
    pub output: Option<PathBuf>,
    pub inputs: InputPaths,
    pub mixture: MixtureScenario,
    pub digits: DigitsScenario,
    pub kernel: KernelScenario,
    pub binary: BinaryScenario,
    pub relevance: RelevanceScenario,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioId::KernelSynthetic,
            seed: 20260101,
            replicates: 50,
            labeled_fractions: (1..=9).rev().map(|i| f64::from(i) / 10.0).collect(),
            labeled_count: None,
            output: None,
            inputs: InputPaths::default(),
            mixture: MixtureScenario::default(),
            digits: DigitsScenario::default(),
            kernel: KernelScenario::default(),
            binary: BinaryScenario::default(),
            relevance: RelevanceScenario::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_scenario(scenario: ScenarioId) -> Self {
        let replicates = match scenario {
            ScenarioId::MixtureFig1 => 10,
            ScenarioId::Digits6v9 => 20,
            ScenarioId::BinaryCell | ScenarioId::Relevance => 1,
            ScenarioId::KernelSynthetic => 50,
        };
        Self { scenario, replicates, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.labeled_count == Some(0) {
            return Err(Error::Config("labeled_count must be at least 1".into()));
        }
        if self.labeled_count.is_none() && self.labeled_fractions.is_empty() {
            return Err(Error::Config("give labeled_fractions or labeled_count".into()));
        }
        if let Some(f) = self.labeled_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::Config(format!("labeled fraction {f} is outside (0, 1]")));
        }
        self.mixture.prior.validate().map_err(|e| Error::Config(format!("mixture prior: {e}")))?;
        self.binary.prior.validate().map_err(|e| Error::Config(format!("binary prior: {e}")))?;
        Ok(())
    }

    /// TOML text, or the `config` member of a JSON run manifest.
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        let cfg: Self = if json {
            let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            let inner = v.get("config").cloned().unwrap_or(v);
            serde_json::from_value(inner).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.extension().is_some_and(|e| e == "json"))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
