use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::optics::{dbm_to_watts, DetectorModel, SplitConfig, REFERENCE_LO_POWER};
use crate::sampler::{AdcConfig, TraceConfig};
use crate::stats::{ExportFormat, DEFAULT_ALPHA};
use crate::toeplitz::HashParams;

/// Error bound the extracted bit count must respect.
pub const DEFAULT_EPSILON_TARGET: f64 = 0.0015;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoPower {
    Watts(f64),
    Dbm(f64),
}

impl LoPower {
    pub fn watts(self) -> f64 {
        match self {
            LoPower::Watts(w) => w,
            LoPower::Dbm(d) => dbm_to_watts(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureMode {
    X,
    P,
    Z,
}

/// Per-field overrides of the calibrated detector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorOverrides {
    pub g: Option<f64>,
    pub sigma_c_sq: Option<f64>,
    pub p_sat: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub p_ref: Option<f64>,
}

impl DetectorOverrides {
    pub fn apply(&self, mut model: DetectorModel) -> DetectorModel {
        if let Some(v) = self.g {
            model.g = v;
        }
        if let Some(v) = self.sigma_c_sq {
            model.sigma_c_sq = v;
        }
        if let Some(v) = self.p_sat {
            model.p_sat = v;
        }
        if let Some(v) = self.sigma_floor {
            model.sigma_floor = v;
        }
        if let Some(v) = self.p_ref {
            model.p_ref = v;
        }
        model
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashConfig {
    pub n: usize,
    pub m: usize,
    pub s: usize,
}

impl HashConfig {
    pub fn params(&self) -> Result<HashParams> {
        HashParams::new(self.n, self.m, self.s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SeedSource {
    /// Raw seed bytes, consumed MSB-first.
    File { path: PathBuf },
    /// Operating-system entropy, drawn once per run.
    Host,
    /// ChaCha20 expansion of a 64-bit value; reproducible.
    Generated { value: u64 },
}

/// Residual LO intensity modulation leaking through splitting imbalance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommonModeConfig {
    /// Tone amplitude before rejection, V.
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default = "balanced")]
    pub kappa: f64,
}

fn balanced() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub bitstream: Option<PathBuf>,
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub format: ExportFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lo_power: LoPower,
    #[serde(default)]
    pub detector: DetectorOverrides,
    pub trace: TraceConfig,
    #[serde(default)]
    pub adc: AdcConfig,
    pub hash: HashConfig,
    pub seed: SeedSource,
    pub quadrature_mode: QuadratureMode,
    #[serde(default)]
    pub common_mode: Option<CommonModeConfig>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon_target: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON_TARGET
}

impl PipelineConfig {
    /// 20 dBm LO, calibrated detector, 12-bit ADC over ±0.5 V, (12, 8, 60)
    /// extractor on the X quadrature.
    pub fn reference(num_samples: usize, sampler_seed: u64, toeplitz_seed: u64) -> Self {
        Self {
            lo_power: LoPower::Watts(REFERENCE_LO_POWER),
            detector: DetectorOverrides::default(),
            trace: TraceConfig::new(num_samples, sampler_seed),
            adc: AdcConfig::default(),
            hash: HashConfig { n: 12, m: 8, s: 60 },
            seed: SeedSource::Generated { value: toeplitz_seed },
            quadrature_mode: QuadratureMode::X,
            common_mode: None,
            alpha: DEFAULT_ALPHA,
            epsilon_target: DEFAULT_EPSILON_TARGET,
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn detector_model(&self) -> DetectorModel {
        self.detector.apply(DetectorModel::default())
    }

    /// Bits per extractor input sample for the configured mode.
    pub fn sample_width(&self) -> usize {
        match self.quadrature_mode {
            QuadratureMode::X | QuadratureMode::P => self.adc.bits as usize,
            QuadratureMode::Z => 2 * self.adc.bits as usize,
        }
    }

    pub fn validate(&self) -> Result<HashParams> {
        let cfg = |e: Error| Error::Config(e.to_string());
        let lo = self.lo_power.watts();
        if !(lo >= 0.0 && lo.is_finite()) {
            return Err(Error::Config(format!("LO power must be >= 0 W, got {lo}")));
        }
        self.detector_model().validate().map_err(cfg)?;
        self.trace.validate().map_err(cfg)?;
        self.adc.validate().map_err(cfg)?;
        if self.adc.bits > 16 {
            return Err(Error::Config(format!("ADC width {} exceeds 16 bits", self.adc.bits)));
        }
        let params = self.hash.params().map_err(cfg)?;
        if params.n() != self.sample_width() {
            return Err(Error::Config(format!(
                "hash.n = {} but {:?} mode feeds {}-bit samples",
                params.n(),
                self.quadrature_mode,
                self.sample_width()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.epsilon_target > 0.0 && self.epsilon_target <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon_target must lie in (0, 1], got {}",
                self.epsilon_target
            )));
        }
        if let Some(cm) = &self.common_mode {
            SplitConfig::new(cm.kappa).map_err(cfg)?;
            if !(cm.amplitude >= 0.0) {
                return Err(Error::Config("common_mode.amplitude must be >= 0".into()));
            }
            if !(cm.frequency > 0.0 && cm.frequency < self.trace.sample_rate / 2.0) {
                return Err(Error::Config(format!(
                    "common_mode.frequency {} Hz must lie in (0, Nyquist)",
                    cm.frequency
                )));
            }
        }
        Ok(params)
    }
}
