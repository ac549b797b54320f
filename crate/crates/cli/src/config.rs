use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use spandisfl::eval::Arm;
use spandisfl::synth::SynthConfig;
use spandisfl::train::TrainConfig;

use crate::CliError;

/// Settings file accepted by `--config`. Every key is optional; flags win.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides both `synth.seed` and `train.seed` when set.
    pub seed: Option<u64>,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub arm: Option<Arm>,
    pub corpus: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub dev_features: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some(seed) = config.seed {
            config.synth.seed = seed;
            config.train.seed = seed;
        }
        Ok(config)
    }
}

/// First of `flag`, then `file`, else a usage error naming the flag.
pub fn require(
    flag: Option<PathBuf>,
    file: &Option<PathBuf>,
    name: &str,
) -> Result<PathBuf, CliError> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| CliError::Usage(format!("missing --{name} (flag or config key)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_all_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn nested_sections_fill_defaults() {
        let c: RunConfig =
            serde_json::from_str(r#"{"train": {"epochs": 3, "model": {"max_span_len": 4}}}"#)
                .unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.model.max_span_len, 4);
        assert_eq!(c.train.batch_size, 32);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"epochz": 3}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"train": {"lr": 1}}"#).is_err());
    }
}
