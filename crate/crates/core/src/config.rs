use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    #[default]
    Base,
    Patterns,
}

impl std::str::FromStr for PromptStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "base" => Ok(PromptStyle::Base),
            "patterns" => Ok(PromptStyle::Patterns),
            other => Err(format!("unknown prompt style `{other}` (expected base or patterns)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Flat key-value configuration shared by all subcommands. Gateway keys sit
/// at the top level next to the pipeline keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub anchors_k: usize,
    pub candidates_k: usize,
    pub hops: usize,
    pub superclass_depth: usize,
    pub token_budget: usize,
    pub prompt_style: PromptStyle,
    pub seed: u64,
    pub max_depth: usize,
    pub damping: f64,
    #[serde(flatten)]
    pub gateway: GatewayConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            anchors_k: 10,
            candidates_k: 5,
            hops: 1,
            superclass_depth: 5,
            token_budget: 6500,
            prompt_style: PromptStyle::Base,
            seed: 0,
            max_depth: 3,
            damping: 0.85,
            gateway: GatewayConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads a config file; a relative `fixtures` path resolves against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|message| ConfigError::Parse { path: path.display().to_string(), message })?;
        if let Some(f) = cfg.gateway.fixtures.as_mut() {
            if f.is_relative() {
                *f = path.parent().map(|d| d.join(&*f)).unwrap_or_else(|| f.clone());
            }
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let counts = [
            ("anchors_k", self.anchors_k),
            ("candidates_k", self.candidates_k),
            ("superclass_depth", self.superclass_depth),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
        }
        if self.token_budget < 256 {
            return Err(ConfigError::Invalid("token_budget must be at least 256".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(ConfigError::Invalid("damping must lie in (0, 1)".into()));
        }
        self.gateway.check().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn with_fixtures(mut self, path: PathBuf) -> Self {
        self.gateway.fixtures = Some(path);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::BackendKind;

    #[test]
    fn flat_toml() {
        let cfg = RunConfig::from_toml(
            "anchors_k = 3\nhops = 0\nprompt_style = \"patterns\"\nbackend = \"http\"\nmodel = \"m\"\nmax_concurrent = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.anchors_k, 3);
        assert_eq!(cfg.hops, 0);
        assert_eq!(cfg.prompt_style, PromptStyle::Patterns);
        assert_eq!(cfg.gateway.backend, BackendKind::Http);
        assert_eq!(cfg.gateway.max_concurrent, 2);
        assert_eq!(cfg.token_budget, 6500);
        assert_eq!(cfg.superclass_depth, 5);
        cfg.check().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = RunConfig { token_budget: 100, ..RunConfig::default() };
        assert!(cfg.check().is_err());
        assert!(RunConfig::from_toml("anchors_k = \"many\"").is_err());
    }

    #[test]
    fn fixtures_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "fixtures = \"mock.json\"\n").unwrap();
        assert_eq!(RunConfig::load(&p).unwrap().gateway.fixtures, Some(dir.path().join("mock.json")));
    }
}
