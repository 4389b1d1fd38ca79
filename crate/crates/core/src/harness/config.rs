use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array_model::SourceScene;
use crate::error::{Error, Result};
use crate::estimators::{Method, DEFAULT_ETA};

/// Monte Carlo experiment read from a TOML file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random draw of the run derives from it.
    pub seed: u64,
    /// Monte Carlo trials per sweep value.
    pub trials: usize,
    #[serde(default = "default_grid_size")]
    pub grid_size: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub mu: MuRule,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Adds the Cramér–Rao reference column.
    #[serde(default = "default_true")]
    pub crb: bool,
    pub array: ArraySpec,
    pub scene: SceneSpec,
    pub sweep: Sweep,
}

/// `M` sensors drawn from an `N`-element half-wavelength ULA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub total_sensors: usize,
    /// Ignored by sensor-count sweeps.
    #[serde(default)]
    pub num_sensors: Option<usize>,
    /// Defaults to `fixed` for SNR sweeps and `per_trial` for sensor sweeps.
    #[serde(default)]
    pub selection: Option<Selection>,
    #[serde(default)]
    pub selection_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// One sensor subset per sweep value, shared by all trials.
    Fixed,
    /// A fresh subset in every trial.
    PerTrial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub frequencies: Vec<f64>,
    /// Unit amplitudes when omitted.
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
}

impl SceneSpec {
    pub fn amplitudes(&self) -> Vec<f64> {
        self.amplitudes
            .clone()
            .unwrap_or_else(|| vec![1.0; self.frequencies.len()])
    }

    /// Scene at noise level `σ`.
    pub fn scene(&self, noise_std: f64) -> Result<SourceScene> {
        SourceScene::new(self.frequencies.clone(), self.amplitudes(), noise_std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    /// SNR values in dB with a fixed sensor count.
    Snr { values: Vec<f64> },
    /// Sensor counts at a fixed SNR.
    Sensors { values: Vec<usize>, snr_db: f64 },
}

impl Sweep {
    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::Snr { .. } => "snr_db",
            Sweep::Sensors { .. } => "num_sensors",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Snr { values } => values.clone(),
            Sweep::Sensors { values, .. } => values.iter().map(|&m| m as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Snr { values } => values.len(),
            Sweep::Sensors { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Regularisation weight as a function of the noise level and sensor count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MuRule {
    /// `μ = σ √(M ln M)`.
    #[default]
    NoiseScaled,
    /// `μ = factor · σ √(M ln M)`.
    ScaledBy(f64),
    Fixed(f64),
}

impl MuRule {
    pub fn mu(&self, noise_std: f64, num_sensors: usize) -> f64 {
        let m = num_sensors as f64;
        let base = noise_std * (m * m.ln()).sqrt();
        match *self {
            MuRule::NoiseScaled => base,
            MuRule::ScaledBy(f) => f * base,
            MuRule::Fixed(mu) => mu,
        }
    }
}

fn default_grid_size() -> f64 {
    0.01
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Reference scenario: 16 of 20 sensors, sources at 0.1815 and 0.7942,
    /// `δ = 0.01`, SNR sweep.
    pub fn reference_snr_sweep(snr_db: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            seed,
            trials,
            grid_size: default_grid_size(),
            methods: default_methods(),
            mu: MuRule::NoiseScaled,
            eta: DEFAULT_ETA,
            crb: true,
            array: ArraySpec {
                total_sensors: 20,
                num_sensors: Some(16),
                selection: None,
                selection_seed: 1,
            },
            scene: SceneSpec {
                frequencies: vec![0.1815, 0.7942],
                amplitudes: None,
            },
            sweep: Sweep::Snr { values: snr_db },
        }
    }

    pub fn selection(&self) -> Selection {
        self.array.selection.unwrap_or(match self.sweep {
            Sweep::Snr { .. } => Selection::Fixed,
            Sweep::Sensors { .. } => Selection::PerTrial,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.grid_size > 0.0 && self.grid_size <= 1.0) {
            return bad(format!("grid_size must be in (0, 1], got {}", self.grid_size));
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        match self.mu {
            MuRule::ScaledBy(v) | MuRule::Fixed(v) if !(v.is_finite() && v > 0.0) => {
                return bad(format!("mu parameter must be positive, got {v}"));
            }
            _ => {}
        }
        self.scene.scene(0.0)?;
        if self.sweep.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        let n = self.array.total_sensors;
        match &self.sweep {
            Sweep::Snr { values } => {
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return bad(format!("sweep value {v} is not finite"));
                }
                match self.array.num_sensors {
                    Some(m) if (2..=n).contains(&m) => {}
                    Some(m) => return bad(format!("num_sensors must be in 2..={n}, got {m}")),
                    None => return bad("an SNR sweep needs array.num_sensors".into()),
                }
            }
            Sweep::Sensors { values, snr_db } => {
                if !snr_db.is_finite() {
                    return bad(format!("snr_db {snr_db} is not finite"));
                }
                if let Some(m) = values.iter().find(|m| !(2..=n).contains(*m)) {
                    return bad(format!("sensor count {m} outside 2..={n}"));
                }
            }
        }
        Ok(())
    }
}
