//! Experiment configuration files (TOML). A config names one experiment with
//! the same descriptor strings the flags use; `parse(serialize(c)) == c`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// One of: spectral, persist, fbrw.
    pub command: String,
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgraph: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn serialize(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::numeric(format!("serialize failed: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != crate::report::SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported schema_version {} (expected {})",
                self.schema_version,
                crate::report::SCHEMA_VERSION
            )));
        }
        for (name, value) in [
            ("trials", self.trials),
            ("horizon", self.horizon),
            ("cap", self.cap),
        ] {
            if value == Some(0) {
                return Err(CliError::config(format!("{name} must be positive")));
            }
        }
        if self.depth == Some(0) {
            return Err(CliError::config("depth must be positive".into()));
        }
        match self.command.as_str() {
            "spectral" | "persist" | "fbrw" => Ok(()),
            other => Err(CliError::config(format!(
                "config command {other:?} not supported (spectral | persist | fbrw)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip() {
        let config = ExperimentConfig {
            schema_version: 1,
            command: "persist".into(),
            family: "product:d1=3,d2=100".into(),
            subgraph: Some("fiber:2".into()),
            law: Some("mean:2".into()),
            seed: 42,
            trials: Some(1000),
            horizon: Some(200),
            cap: Some(1_000_000),
            depth: None,
            radius: None,
            route: Some("quotient".into()),
        };
        let text = config.serialize().unwrap();
        let parsed = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn zero_trials_rejected() {
        let text = r#"
schema_version = 1
command = "persist"
family = "tree:d=3"
seed = 1
trials = 0
"#;
        assert!(ExperimentConfig::parse(text).is_err());
    }
}
