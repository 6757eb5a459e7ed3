use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sampling parameters for one extraction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequestConfig {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Seed for demonstration sampling.
    pub seed: u64,
    /// Number of demonstrations; 0 means zero-shot.
    pub k: usize,
}

impl Default for LlmRequestConfig {
    fn default() -> Self {
        Self {
            model: "gpt-4.1".into(),
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 4000,
            seed: 42,
            k: 5,
        }
    }
}

impl LlmRequestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::Config(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        if self.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Everything an `extract` run reads from its TOML config file. Missing keys
/// take their defaults.
///
/// ```toml
/// endpoint = "https://example.openai.azure.com/openai/deployments/gpt-4.1"
/// path = "/chat/completions?api-version=2025-01-01-preview"
/// model = "gpt-4.1"
/// k = 5
/// seed = 42
/// temperature = 0.0
/// top_p = 1.0
/// max_tokens = 4000
/// parallelism = 4
/// assertion_variant = false
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub endpoint: String,
    pub path: String,
    pub model: String,
    pub k: usize,
    pub seed: u64,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub parallelism: usize,
    pub assertion_variant: bool,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// Documents longer than this many chars contribute a single section as
    /// a demonstration.
    pub example_char_budget: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        let req = LlmRequestConfig::default();
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            path: "/chat/completions".into(),
            model: req.model,
            k: req.k,
            seed: req.seed,
            temperature: req.temperature,
            top_p: req.top_p,
            max_tokens: req.max_tokens,
            parallelism: 4,
            assertion_variant: false,
            max_retries: 2,
            timeout_secs: 120,
            example_char_budget: 2000,
        }
    }
}

impl ExtractConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.request().validate()?;
        if cfg.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn request(&self) -> LlmRequestConfig {
        LlmRequestConfig {
            model: self.model.clone(),
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
            seed: self.seed,
            k: self.k,
        }
    }

    pub fn url(&self) -> String {
        format!("{}{}", self.endpoint.trim_end_matches('/'), self.path)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}
