use salience::analysis::{EmbedParams, KMeansParams};
use salience::models::ModelKind;
use salience::simulator::SimulationConfig;
use salience::training::{SearchSpace, TrainConfig};
use salience::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One file, one section per stage. Every seed is derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub simulate: SimulationConfig,
    pub prepare: PrepareConfig,
    pub train: TrainConfig,
    pub tune: TuneConfig,
    pub crossval: CrossvalConfig,
    pub encode: EncodeConfig,
    pub embed: EmbedConfig,
    pub partition: PartitionConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            simulate: SimulationConfig::default(),
            prepare: PrepareConfig::default(),
            train: TrainConfig::default(),
            tune: TuneConfig::default(),
            crossval: CrossvalConfig::default(),
            encode: EncodeConfig::default(),
            embed: EmbedConfig::default(),
            partition: PartitionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareConfig {
    /// Percentile above which agents are dropped as outliers.
    pub filter_percentile: f64,
    /// Share of agents held out for hyperparameter search.
    pub tuning_fraction: f64,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        Self { filter_percentile: 99.0, tuning_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub budget: usize,
    pub eta: usize,
    pub models: Vec<ModelKind>,
    pub space: SearchSpace,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            budget: 40,
            eta: 3,
            models: vec![ModelKind::ElasticNet, ModelKind::Mlp, ModelKind::Rnn],
            space: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalConfig {
    pub folds: usize,
    pub models: Vec<ModelKind>,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        Self { folds: 10, models: ModelKind::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    /// Target whose discounted future predictions accompany the representations.
    pub target: String,
    pub gamma: f64,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self { target: "session_time".into(), gamma: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    /// Steps `1..=steps` are analysed.
    pub steps: usize,
    /// Agents sampled for the embedding.
    pub max_points: usize,
    pub pca_components: usize,
    pub transducer_units: usize,
    pub n_bins: usize,
    pub trajectories: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub epochs: usize,
    pub negative_samples: usize,
    pub warm_learning_rate: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        let e = EmbedParams::default();
        Self {
            steps: 4,
            max_points: 2000,
            pca_components: 20,
            transducer_units: 10,
            n_bins: 10,
            trajectories: 100,
            n_neighbors: e.n_neighbors,
            min_dist: e.min_dist,
            epochs: e.epochs,
            negative_samples: e.negative_samples,
            warm_learning_rate: e.warm_learning_rate,
        }
    }
}

impl EmbedConfig {
    pub fn params(&self, seed: u64) -> EmbedParams {
        EmbedParams {
            n_neighbors: self.n_neighbors,
            min_dist: self.min_dist,
            epochs: self.epochs,
            negative_samples: self.negative_samples,
            warm_learning_rate: self.warm_learning_rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub step: usize,
    /// Restrict to one object; all objects when absent.
    pub object: Option<String>,
    /// Average each agent's representation over steps `1..=step` instead of using `step` alone.
    pub pooled: bool,
    pub k_min: usize,
    pub k_max: usize,
    pub batch_size: usize,
    pub n_init: usize,
    pub max_epochs: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        let k = KMeansParams::default();
        Self {
            step: 4,
            object: None,
            pooled: false,
            k_min: 2,
            k_max: 10,
            batch_size: k.batch_size,
            n_init: k.n_init,
            max_epochs: k.max_epochs,
        }
    }
}

impl PartitionConfig {
    pub fn params(&self, seed: u64) -> KMeansParams {
        KMeansParams { batch_size: self.batch_size, n_init: self.n_init, max_epochs: self.max_epochs, seed }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: Config = match path {
            None => Config::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let p = &self.prepare;
        if !(p.filter_percentile > 0.0 && p.filter_percentile <= 100.0) {
            return Err(Error::Config("prepare.filter_percentile must lie in (0, 100]".into()));
        }
        if !(p.tuning_fraction > 0.0 && p.tuning_fraction < 1.0) {
            return Err(Error::Config("prepare.tuning_fraction must lie in (0, 1)".into()));
        }
        if self.crossval.folds < 2 {
            return Err(Error::Config("crossval.folds must be at least 2".into()));
        }
        if !salience::data::TARGET_NAMES.contains(&self.encode.target.as_str()) {
            return Err(Error::Config(format!("encode.target {:?} is not a target name", self.encode.target)));
        }
        if !(0.0..1.0).contains(&self.encode.gamma) {
            return Err(Error::Config("encode.gamma must lie in [0, 1)".into()));
        }
        if self.embed.steps == 0 || self.partition.step == 0 {
            return Err(Error::Config("steps are 1-based".into()));
        }
        if self.partition.k_min < 1 || self.partition.k_max < self.partition.k_min + 2 {
            return Err(Error::Config("partition needs k_min >= 1 and at least three k values".into()));
        }
        Ok(())
    }
}
