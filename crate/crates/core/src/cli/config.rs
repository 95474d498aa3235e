use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::ingest::SyntheticConfig;
use crate::valuation::{ClassicConfig, StabilityConfig};
use crate::winprob::{GbtConfig, LogisticConfig};

/// Optional TOML overrides. Every table and key may be omitted.
///
/// ```toml
/// [classic]
/// trade_window_seconds = 3.0
///
/// [gbt]
/// max_depth = 6
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub classic: ClassicConfig,
    pub gbt: GbtConfig,
    pub logistic: LogisticConfig,
    pub synthetic: SyntheticConfig,
    pub stability: StabilityConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}
