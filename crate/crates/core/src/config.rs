//! Training configuration, stored as TOML with one section per subsystem.

use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::eval::ColdScoring;
use crate::model::{EncoderKind, ModelDims};
use crate::objective::{BatchSpec, LossWeights};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub objective: ObjectiveConfig,
    pub optim: OptimConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interactions: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    /// Split manifest; when absent the split is drawn from `cold_fraction`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<PathBuf>,
    pub cold_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderName {
    Mf,
    Lightgcn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderName,
    pub layers: usize,
    pub dim: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Clcrec,
    /// Pairwise BPR on z only: one negative, τ = 1, no R-E term, no hybrid.
    Bpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    pub tau_ui: f64,
    pub tau_re: f64,
    pub lambda: f64,
    pub eta: f64,
    pub rho: f64,
    pub k_ui: usize,
    pub k_re: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    pub cold_scoring: ColdScoring,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            objective: ObjectiveConfig::default(),
            optim: OptimConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            interactions: None,
            features: None,
            split: None,
            cold_fraction: 0.15,
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderName::Mf,
            layers: 2,
            dim: 64,
            hidden: 256,
        }
    }
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            kind: ObjectiveKind::Clcrec,
            tau_ui: 0.1,
            tau_re: 0.1,
            lambda: 0.5,
            eta: 1e-4,
            rho: 0.5,
            k_ui: 128,
            k_re: 256,
        }
    }
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 1024,
            max_epochs: 1000,
            patience: 10,
        }
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 10,
            cold_scoring: ColdScoring::Raw,
        }
    }
}

/// The subset of the model/objective hashed into snapshots.
#[derive(Serialize)]
struct HashedPart<'a> {
    seed: u64,
    model: &'a ModelConfig,
    objective: &'a ObjectiveConfig,
    optim: &'a OptimConfig,
}

impl TrainConfig {
    pub fn encoder(&self) -> EncoderKind {
        match self.model.encoder {
            EncoderName::Mf => EncoderKind::Mf,
            EncoderName::Lightgcn => EncoderKind::LightGcn {
                layers: self.model.layers,
            },
        }
    }

    /// Loss weights actually optimized; BPR pins λ = 0 and τ_ui = 1.
    pub fn weights(&self) -> LossWeights {
        let o = &self.objective;
        match o.kind {
            ObjectiveKind::Clcrec => LossWeights {
                lambda: o.lambda,
                eta: o.eta,
                tau_ui: o.tau_ui,
                tau_re: o.tau_re,
            },
            ObjectiveKind::Bpr => LossWeights {
                lambda: 0.0,
                eta: o.eta,
                tau_ui: 1.0,
                tau_re: o.tau_re,
            },
        }
    }

    /// Negative counts and hybrid rate; BPR samples one U-I negative, no
    /// R-E negatives and never substitutes f.
    pub fn batch_spec(&self) -> BatchSpec {
        let o = &self.objective;
        match o.kind {
            ObjectiveKind::Clcrec => BatchSpec {
                k_ui: o.k_ui,
                k_re: o.k_re,
                rho: o.rho,
            },
            ObjectiveKind::Bpr => BatchSpec {
                k_ui: 1,
                k_re: 0,
                rho: 0.0,
            },
        }
    }

    pub fn dims(&self, n_users: usize, n_items: usize, feat_dim: usize) -> ModelDims {
        ModelDims {
            n_users,
            n_items,
            dim: self.model.dim,
            hidden: self.model.hidden,
            feat_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if i64::try_from(self.seed).is_err() {
            return bad(format!("seed must be at most {}, got {}", i64::MAX, self.seed));
        }
        let o = &self.objective;
        if !(0.0..=1.0).contains(&o.lambda) {
            return bad(format!("objective.lambda must lie in [0, 1], got {}", o.lambda));
        }
        if !(0.0..=1.0).contains(&o.rho) {
            return bad(format!("objective.rho must lie in [0, 1], got {}", o.rho));
        }
        if !(o.tau_ui > 0.0 && o.tau_re > 0.0) {
            return bad("objective temperatures must be > 0".into());
        }
        if !(o.eta >= 0.0) {
            return bad(format!("objective.eta must be >= 0, got {}", o.eta));
        }
        if o.k_ui == 0 || o.k_re == 0 {
            return bad("objective.k_ui and objective.k_re must be >= 1".into());
        }
        if self.model.dim == 0 || self.model.hidden == 0 {
            return bad("model.dim and model.hidden must be >= 1".into());
        }
        if self.model.encoder == EncoderName::Lightgcn && self.model.layers == 0 {
            return bad("model.layers must be >= 1 for lightgcn".into());
        }
        if !(self.optim.lr > 0.0) {
            return bad(format!("optim.lr must be > 0, got {}", self.optim.lr));
        }
        if self.optim.batch_size == 0 || self.optim.patience == 0 {
            return bad("optim.batch_size and optim.patience must be >= 1".into());
        }
        if self.eval.k == 0 {
            return bad("eval.k must be >= 1".into());
        }
        let f = self.data.cold_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad(format!("data.cold_fraction must lie in (0, 1), got {f}"));
        }
        Ok(())
    }

    /// Overrides one field by its flat name (`lr`, `lambda`, `encoder`, ...).
    /// Does not validate the result.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
        }
        let o = &mut self.objective;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "cold_fraction" => self.data.cold_fraction = parse(key, value)?,
            "encoder" => {
                self.model.encoder = match value {
                    "mf" => EncoderName::Mf,
                    "lightgcn" => EncoderName::Lightgcn,
                    _ => return Err(Error::Config(format!("unknown encoder {value:?} (mf, lightgcn)"))),
                }
            }
            "layers" => self.model.layers = parse(key, value)?,
            "dim" => self.model.dim = parse(key, value)?,
            "hidden" => self.model.hidden = parse(key, value)?,
            "objective" => {
                o.kind = match value {
                    "clcrec" => ObjectiveKind::Clcrec,
                    "bpr" => ObjectiveKind::Bpr,
                    _ => return Err(Error::Config(format!("unknown objective {value:?} (clcrec, bpr)"))),
                }
            }
            "tau_ui" => o.tau_ui = parse(key, value)?,
            "tau_re" => o.tau_re = parse(key, value)?,
            "lambda" => o.lambda = parse(key, value)?,
            "eta" => o.eta = parse(key, value)?,
            "rho" => o.rho = parse(key, value)?,
            "k_ui" => o.k_ui = parse(key, value)?,
            "k_re" => o.k_re = parse(key, value)?,
            "lr" => self.optim.lr = parse(key, value)?,
            "batch_size" => self.optim.batch_size = parse(key, value)?,
            "max_epochs" => self.optim.max_epochs = parse(key, value)?,
            "patience" => self.optim.patience = parse(key, value)?,
            "k" => self.eval.k = parse(key, value)?,
            "cold_scoring" => {
                self.eval.cold_scoring = match value {
                    "raw" => ColdScoring::Raw,
                    "cosine" => ColdScoring::Cosine,
                    _ => return Err(Error::Config(format!("unknown cold scoring {value:?} (raw, cosine)"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown parameter {key:?}"))),
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    /// FNV-1a digest of everything that shapes the trained parameters
    /// (seed, model, objective, optimizer), as 16 hex digits.
    pub fn config_hash(&self) -> String {
        let part = HashedPart {
            seed: self.seed,
            model: &self.model,
            objective: &self.objective,
            optim: &self.optim,
        };
        let text = toml::to_string(&part).expect("config serializes");
        let mut h = FnvHasher::default();
        h.write(text.as_bytes());
        format!("{:016x}", h.finish())
    }
}
