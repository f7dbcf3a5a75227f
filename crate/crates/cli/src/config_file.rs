//! JSON configuration document: `{"system": {...}, "power": {...},
//! "sweep": {...}}`, all sections optional. CLI flags override individual
//! keys after loading.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sweep::{ReceiverKind, SweepKind, SweepSpec};
use qmimo_core::config::SystemConfig;
use qmimo_core::power::PowerModel;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ConfigDocument {
    pub system: SystemConfig,
    pub power: PowerModel,
    pub sweep: SweepSection,
}

/// Sweep defaults carried by the config file; the subcommand and flags fill
/// in or override the rest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub kind: Option<SweepKind>,
    pub values: Option<Vec<f64>>,
    pub receivers: Vec<ReceiverKind>,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub mc_oracle: bool,
    pub mc_frames: usize,
    pub grid_betas: Vec<usize>,
    pub timing: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kind: None,
            values: None,
            receivers: ReceiverKind::all(),
            n_realizations: 100,
            master_seed: 1,
            mc_oracle: false,
            mc_frames: 200,
            grid_betas: vec![1, 2, 4, 8, 16],
            timing: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

impl ConfigDocument {
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigFileError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Default sweep values when neither the file nor the flags give any:
    /// the reproduction grids (SNR -10..20 dB, bandwidth 10..45 GHz,
    /// OSR 1..5, bits 1..8).
    pub fn default_values(kind: SweepKind) -> Vec<f64> {
        match kind {
            SweepKind::Snr => vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            SweepKind::Bandwidth => vec![10e9, 15e9, 20e9, 25e9, 30e9, 35e9, 40e9, 45e9],
            SweepKind::Osr => vec![1.0, 2.0, 3.0, 4.0, 5.0],
            SweepKind::EeGrid => (1..=8).map(f64::from).collect(),
        }
    }

    /// Build the sweep spec for `kind`, using file values where present.
    pub fn sweep_spec(&self, kind: SweepKind) -> SweepSpec {
        let values = self
            .sweep
            .values
            .clone()
            .unwrap_or_else(|| Self::default_values(kind));
        SweepSpec {
            kind,
            values,
            receivers: self.sweep.receivers.clone(),
            n_realizations: self.sweep.n_realizations,
            master_seed: self.sweep.master_seed,
            mc_oracle: self.sweep.mc_oracle,
            mc_frames: self.sweep.mc_frames,
            grid_betas: self.sweep.grid_betas.clone(),
            timing: self.sweep.timing,
        }
    }
}
