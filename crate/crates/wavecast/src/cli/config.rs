//! Run configuration shared by the training-family subcommands, read from a
//! `key = value` file. Unknown keys are rejected so typos fail loudly instead
//! of silently training with defaults.

use crate::optim::{OptimizerConfig, OptimizerVariant, RegularizerConfig};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("line {0}: expected 'key = value', got '{1}'")]
    BadLine(usize, String),
    #[error("line {0}: unknown key '{1}'")]
    UnknownKey(usize, String),
    #[error("line {0}: bad value for '{1}': {2}")]
    BadValue(usize, String, String),
}

/// All tunable run settings with the experiment defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub hidden: usize,
    pub layers: usize,
    pub input_steps: usize,
    pub output_steps: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub optimizer: OptimizerVariant,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Teacher-forcing decay constant as a fraction of the epoch budget.
    pub k_fraction: f64,
    pub forget_bias: f64,
    pub stride: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hidden: 64,
            layers: 1,
            input_steps: 10,
            output_steps: 5,
            batch_size: 16,
            epochs: 30,
            learning_rate: 0.001,
            lr_decay: 1.0,
            optimizer: OptimizerVariant::Adam,
            lambda1: 0.001,
            lambda2: 0.0,
            k_fraction: 0.4,
            forget_bias: 1.0,
            stride: 1,
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::BadLine(i + 1, raw.to_string()))?;
            cfg.apply(i + 1, key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.parse()
                .map_err(|e: T::Err| ConfigError::BadValue(line, key.to_string(), e.to_string()))
        }
        match key {
            "hidden" => self.hidden = parse(line, key, value)?,
            "layers" => self.layers = parse(line, key, value)?,
            "input_steps" => self.input_steps = parse(line, key, value)?,
            "output_steps" => self.output_steps = parse(line, key, value)?,
            "batch_size" => self.batch_size = parse(line, key, value)?,
            "epochs" => self.epochs = parse(line, key, value)?,
            "learning_rate" => self.learning_rate = parse(line, key, value)?,
            "lr_decay" => self.lr_decay = parse(line, key, value)?,
            "optimizer" => {
                self.optimizer = value
                    .parse()
                    .map_err(|e: String| ConfigError::BadValue(line, key.to_string(), e))?
            }
            "lambda1" => self.lambda1 = parse(line, key, value)?,
            "lambda2" => self.lambda2 = parse(line, key, value)?,
            "k_fraction" => self.k_fraction = parse(line, key, value)?,
            "forget_bias" => self.forget_bias = parse(line, key, value)?,
            "stride" => self.stride = parse(line, key, value)?,
            "train_frac" => self.train_frac = parse(line, key, value)?,
            "val_frac" => self.val_frac = parse(line, key, value)?,
            "test_frac" => self.test_frac = parse(line, key, value)?,
            other => return Err(ConfigError::UnknownKey(line, other.to_string())),
        }
        Ok(())
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig::new(self.optimizer, self.learning_rate).with_decay(self.lr_decay)
    }

    pub fn regularizer(&self) -> RegularizerConfig {
        RegularizerConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
        }
    }

    /// Teacher-forcing decay constant k, at least 1.
    pub fn schedule_k(&self) -> f64 {
        (self.k_fraction * self.epochs as f64).max(1.0)
    }
}
