//! Experiment configuration files.
//!
//! TOML with the sections `[system]`, `[basis]`, `[quadrature]`, `[model]`,
//! `[train]` and `[oracle]`. Every key is optional; unknown keys are errors.
//!
//! ```toml
//! [system]
//! a = 1.0
//! alpha = 8.0
//!
//! [model]
//! architecture = "perturbed"
//!
//! [train]
//! max_iters = 6000
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::basis::BoxSystem;
use crate::error::{Error, Result};
use crate::model::Architecture;
use crate::trainer::{Optimizer, TrainConfig};

pub const DEFAULT_FD_POINTS: usize = 4000;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub a: f64,
    pub mu: f64,
    pub hbar: f64,
    pub alpha: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            a: 1.0,
            mu: 1.0,
            hbar: 1.0,
            alpha: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self { n: 100 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    #[serde(rename = "G")]
    pub g: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self { g: 2048 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub architecture: Architecture,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            architecture: Architecture::Box,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub optimizer: Optimizer,
    pub eta: f64,
    pub max_iters: usize,
    pub window: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub checkpoint_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::AdaptiveMoments,
            eta: 1e-3,
            max_iters: 20_000,
            window: 200,
            tolerance: 1e-9,
            seed: 0,
            checkpoint_every: 1000,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Interior points of the finite-difference grid.
    #[serde(rename = "M")]
    pub m: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            m: DEFAULT_FD_POINTS,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub basis: BasisSection,
    pub quadrature: QuadratureSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub oracle: OracleSection,
}

/// Bundled presets for the three reference wells: `(file name, contents)`.
pub const PRESETS: [(&str, &str); 3] = [
    ("unperturbed.cfg", include_str!("../presets/unperturbed.cfg")),
    ("perturbed_a.cfg", include_str!("../presets/perturbed_a.cfg")),
    ("perturbed_b.cfg", include_str!("../presets/perturbed_b.cfg")),
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.system()?;
        cfg.train_config()?.validate()?;
        if cfg.oracle.m < 16 {
            return Err(Error::Config(format!("[oracle] M must be at least 16, got {}", cfg.oracle.m)));
        }
        Ok(cfg)
    }

    /// Reads `path`; a missing file whose name matches a bundled preset
    /// falls back to that preset.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            }),
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
                match Self::preset(name) {
                    Some(cfg) => Ok(cfg),
                    None => Err(Error::Config(format!("{}: {err}", path.display()))),
                }
            }
            Err(err) => Err(Error::Config(format!("{}: {err}", path.display()))),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        let name = name.strip_suffix(".cfg").unwrap_or(name);
        PRESETS
            .iter()
            .find(|(file, _)| file.strip_suffix(".cfg") == Some(name))
            .map(|(_, text)| Self::parse(text).expect("bundled preset parses"))
    }

    pub fn system(&self) -> Result<BoxSystem> {
        let s = &self.system;
        BoxSystem::with_units(s.a, s.mu, s.hbar, s.alpha)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::new(self.system()?, self.model.architecture);
        cfg.basis_size = self.basis.n;
        cfg.grid_size = self.quadrature.g;
        cfg.optimizer = self.train.optimizer;
        cfg.learning_rate = self.train.eta;
        cfg.max_iters = self.train.max_iters;
        cfg.window = self.train.window;
        cfg.tolerance = self.train.tolerance;
        cfg.seed = self.train.seed;
        cfg.checkpoint_every = self.train.checkpoint_every;
        Ok(cfg)
    }

    pub fn train_config_with_checkpoint(&self, checkpoint: PathBuf) -> Result<TrainConfig> {
        let mut cfg = self.train_config()?;
        cfg.checkpoint = Some(checkpoint);
        Ok(cfg)
    }
}
