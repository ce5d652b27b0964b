//! Benchmark run configuration, read from a JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dynsel_core::baselines::McbParams;
use dynsel_core::{MetaDesParams, PerceptronConfig};

fn default_replications() -> usize {
    20
}

fn default_pool_size() -> usize {
    100
}

fn default_k() -> usize {
    7
}

fn default_kp() -> usize {
    5
}

fn default_h_c() -> f64 {
    0.70
}

fn default_epochs() -> usize {
    100
}

fn default_learning_rate() -> f64 {
    1.0
}

fn default_adaboost_rounds() -> usize {
    100
}

fn default_mcb_similarity() -> f64 {
    0.7
}

fn default_mcb_threshold() -> f64 {
    0.6
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

/// Everything one replication cell needs besides the data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProtocolParams {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_kp")]
    pub kp: usize,
    #[serde(default = "default_h_c")]
    pub h_c: f64,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_adaboost_rounds")]
    pub adaboost_rounds: usize,
    #[serde(default = "default_mcb_similarity")]
    pub mcb_similarity: f64,
    #[serde(default = "default_mcb_threshold")]
    pub mcb_threshold: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            k: default_k(),
            kp: default_kp(),
            h_c: default_h_c(),
            pool_size: default_pool_size(),
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            adaboost_rounds: default_adaboost_rounds(),
            mcb_similarity: default_mcb_similarity(),
            mcb_threshold: default_mcb_threshold(),
        }
    }
}

impl ProtocolParams {
    pub fn metades(&self) -> MetaDesParams {
        MetaDesParams {
            k: self.k,
            kp: self.kp,
            h_c: self.h_c,
        }
    }

    pub fn perceptron(&self) -> PerceptronConfig {
        PerceptronConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
        }
    }

    pub fn mcb(&self) -> McbParams {
        McbParams {
            similarity: self.mcb_similarity,
            threshold: self.mcb_threshold,
        }
    }
}

/// A benchmark run: which datasets, which techniques, how many replications.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub datasets: Vec<String>,
    pub techniques: Vec<String>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub params: ProtocolParams,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.replications >= 1, "replications must be at least 1");
        anyhow::ensure!(!self.datasets.is_empty(), "no datasets configured");
        anyhow::ensure!(!self.techniques.is_empty(), "no techniques configured");
        for t in &self.techniques {
            t.parse::<dynsel_core::baselines::Technique>()
                .map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        Ok(())
    }
}
