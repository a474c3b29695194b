//! Experiment configuration, read from TOML or JSON by file extension.
//!
//! Training fields sit at the top level under their `TrainConfig` names;
//! the model and the data preparation have their own tables:
//!
//! ```toml
//! learning_rate = 0.005
//! batch_size = 256
//! seed = 1
//!
//! [model]
//! mode = "inception"
//! n_s = 8
//! k_u = 2
//!
//! [data]
//! height = 14
//! width = 14
//! cardinality = 16
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use inception_core::data::{reduce, Dataset};
use inception_core::engine::Mode;
use inception_core::train::TrainConfig;
use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};

use crate::{read_file, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `monotone`, `squared-real`, `squared-complex` or `inception`.
    pub mode: String,
    pub n_s: usize,
    pub k_u: usize,
    /// Initialization seed; the training seed when absent.
    pub init_seed: Option<u64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { mode: "inception".into(), n_s: 8, k_u: 2, init_seed: None }
    }
}

impl ModelConfig {
    pub fn mode(&self) -> Result<Mode> {
        Mode::parse(&self.mode).ok_or_else(|| {
            let names: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
            Error::Invalid(format!("unknown mode {:?}; expected one of {}", self.mode, names.join(", ")))
        })
    }
}

/// Optional reduction applied to loaded data before training or evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub height: Option<usize>,
    pub width: Option<usize>,
    pub cardinality: Option<u32>,
    /// Keep only the first `limit` rows.
    pub limit: Option<usize>,
}

impl DataConfig {
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        let mut d = match self.limit {
            Some(n) if n < data.len() => data.select(&(0..n).collect::<Vec<_>>()),
            _ => data.clone(),
        };
        let h = self.height.unwrap_or(d.height());
        let w = self.width.unwrap_or(d.width());
        let c = self.cardinality.unwrap_or(d.cardinality());
        if (h, w, c) != (d.height(), d.width(), d.cardinality()) {
            d = reduce(&d, h, w, c)?;
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
}

// Flattened fields do not honour `deny_unknown_fields`; whatever the train
// fields leave over lands in `extra` and is rejected here.
#[derive(Deserialize)]
struct RawConfig {
    #[serde(flatten)]
    train: TrainConfig,
    #[serde(default)]
    model: ModelConfig,
    #[serde(default)]
    data: DataConfig,
    #[serde(flatten)]
    extra: BTreeMap<String, IgnoredAny>,
}

impl TryFrom<RawConfig> for ExperimentConfig {
    type Error = String;

    fn try_from(raw: RawConfig) -> std::result::Result<Self, String> {
        if let Some(key) = raw.extra.keys().next() {
            return Err(format!("unknown field `{key}`"));
        }
        Ok(Self { train: raw.train, model: raw.model, data: raw.data })
    }
}

impl ExperimentConfig {
    pub fn init_seed(&self) -> u64 {
        self.model.init_seed.unwrap_or(self.train.seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.model.mode()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::format("TOML config", e))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::format("JSON config", e))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::format(path.display().to_string(), e))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let parsed = match ext.as_str() {
            "toml" => Self::from_toml(text),
            "json" => Self::from_json(text),
            _ => return Err(Error::Invalid(format!("{}: config files must end in .toml or .json", path.display()))),
        };
        parsed.map_err(|e| match e {
            Error::Format { message, .. } => Error::Format { what: path.display().to_string(), message },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let t = ExperimentConfig::from_toml(
            "learning_rate = 0.01\nseed = 4\n[model]\nmode = \"monotone\"\nn_s = 3\nk_u = 1\n[data]\nheight = 14\n",
        )
        .unwrap();
        let j = ExperimentConfig::from_json(
            r#"{"learning_rate": 0.01, "seed": 4, "model": {"mode": "monotone", "n_s": 3, "k_u": 1}, "data": {"height": 14}}"#,
        )
        .unwrap();
        assert_eq!(t, j);
        assert_eq!(t.train.batch_size, 256);
        assert_eq!(t.init_seed(), 4);
    }

    #[test]
    fn defaults_are_the_reference_protocol() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c.train, TrainConfig::default());
    }

    #[test]
    fn mistakes_are_reported() {
        assert!(matches!(ExperimentConfig::from_toml("learning_rte = 0.1"), Err(Error::Format { .. })));
        assert!(matches!(ExperimentConfig::from_toml("[model]\nmode = \"squared\""), Err(Error::Invalid(_))));
        assert!(ExperimentConfig::from_toml("patience = 0").unwrap_err().is_validation());
    }

    #[test]
    fn data_reduction() {
        let d = Dataset::new(vec![255; 3 * 16], 4, 4, 256).unwrap();
        let cfg = DataConfig { height: Some(2), width: Some(2), cardinality: Some(4), limit: Some(2) };
        let r = cfg.apply(&d).unwrap();
        assert_eq!((r.len(), r.height(), r.cardinality()), (2, 2, 4));
        assert!(r.as_bytes().iter().all(|&v| v == 3));
    }
}
