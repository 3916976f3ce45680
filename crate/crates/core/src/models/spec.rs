use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lag1,
    Median,
    ElasticNet,
    Mlp,
    Rnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Lag1,
        ModelKind::Median,
        ModelKind::ElasticNet,
        ModelKind::Mlp,
        ModelKind::Rnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lag1 => "lag1",
            ModelKind::Median => "median",
            ModelKind::ElasticNet => "elastic_net",
            ModelKind::Mlp => "mlp",
            ModelKind::Rnn => "rnn",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(self, ModelKind::ElasticNet | ModelKind::Mlp | ModelKind::Rnn)
    }

    pub fn has_encoder(self) -> bool {
        matches!(self, ModelKind::Mlp | ModelKind::Rnn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

/// Model kind plus its hyperparameters. Fields irrelevant to a kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default = "one")]
    pub layers: usize,
    #[serde(default = "default_units")]
    pub units: usize,
    #[serde(default = "default_emb")]
    pub emb_dim: usize,
    #[serde(default)]
    pub l1: f64,
    #[serde(default)]
    pub l2: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Median model: sessions after which an observation's weight halves.
    #[serde(default = "default_halflife")]
    pub halflife: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn default_units() -> usize {
    32
}
fn default_emb() -> usize {
    8
}
fn default_lr() -> f64 {
    1e-3
}
fn default_halflife() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            layers: one(),
            units: default_units(),
            emb_dim: default_emb(),
            l1: 0.0,
            l2: 0.0,
            lr: default_lr(),
            halflife: default_halflife(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("{}: {m}", self.kind)));
        match self.kind {
            ModelKind::Lag1 => {}
            ModelKind::Median => {
                if !(self.halflife > 0.0) {
                    return bad("halflife must be positive");
                }
            }
            ModelKind::ElasticNet | ModelKind::Mlp | ModelKind::Rnn => {
                if self.emb_dim == 0 {
                    return bad("emb_dim must be at least 1");
                }
                if !(self.lr > 0.0 && self.lr.is_finite()) {
                    return bad("learning rate must be positive");
                }
                if !(self.l1 >= 0.0 && self.l2 >= 0.0) {
                    return bad("l1 and l2 must be non-negative");
                }
                if self.kind != ModelKind::ElasticNet && (self.layers == 0 || self.units == 0) {
                    return bad("layers and units must be at least 1");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn validation() {
        let mut s = ModelSpec::new(ModelKind::ElasticNet);
        s.l1 = -1.0;
        assert!(s.validate().is_err());
        let mut s = ModelSpec::new(ModelKind::Rnn);
        s.layers = 0;
        assert!(s.validate().is_err());
        assert!(ModelSpec::new(ModelKind::Mlp).validate().is_ok());
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"rnn","units":64}"#).unwrap();
        assert_eq!((s.units, s.layers, s.emb_dim), (64, 1, 8));
    }
}
