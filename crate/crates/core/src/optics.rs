//! Closed-form detector imperfection models.
//!
//! Optical CMRR from path-length and splitting imbalance, CMRR as measured
//! from single-arm and balanced tone powers, and the linear-with-saturation
//! LO power to noise variance model that underlies shot-noise clearance.
//!
//! All CMRR values in this module use the amplitude convention
//! `CMRR = -10 log10(S_cm / S_d)`, so a residual common-mode amplitude is
//! recovered from a [`CmrrDb`] as `10^(-CMRR/10)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Upper clamp for CMRR, used where perfect balance would give infinity.
pub const CMRR_MAX_DB: f64 = 200.0;

/// Converts LO power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Common-mode rejection in decibels, always within `[0, CMRR_MAX_DB]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CmrrDb(f64);

impl CmrrDb {
    pub const MAX: CmrrDb = CmrrDb(CMRR_MAX_DB);

    /// Clamps an arbitrary dB value into range. NaN maps to 0 dB.
    pub fn new(db: f64) -> Self {
        if db.is_nan() {
            return CmrrDb(0.0);
        }
        CmrrDb(db.clamp(0.0, CMRR_MAX_DB))
    }

    /// CMRR for a residual common-mode amplitude normalised to the
    /// differential amplitude: `-10 log10(residual)`.
    pub fn from_residual(residual: f64) -> Self {
        let residual = residual.abs();
        if residual == 0.0 {
            return Self::MAX;
        }
        Self::new(-10.0 * residual.log10())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Fraction of a common-mode amplitude that survives rejection.
    pub fn residual_factor(self) -> f64 {
        10f64.powf(-self.0 / 10.0)
    }
}

/// An unbalanced optical path pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalPath {
    /// Path length difference in metres. Sign follows the longer arm.
    pub delta_l: f64,
    /// Effective refractive index, > 0.
    pub n_eff: f64,
    /// Common-mode (modulation) frequency in Hz, >= 0.
    pub f_cm: f64,
}

impl OpticalPath {
    pub fn new(delta_l: f64, n_eff: f64, f_cm: f64) -> Result<Self> {
        if !(n_eff > 0.0) {
            return Err(Error::InvalidParameter(format!("n_eff must be > 0, got {n_eff}")));
        }
        if !(f_cm >= 0.0) {
            return Err(Error::InvalidParameter(format!("f_cm must be >= 0, got {f_cm}")));
        }
        Ok(Self { delta_l, n_eff, f_cm })
    }

    /// Free-space delay line (`n_eff = 1`).
    pub fn free_space(delta_l: f64, f_cm: f64) -> Result<Self> {
        Self::new(delta_l, 1.0, f_cm)
    }
}

/// Power coupling coefficient of the splitter feeding the two photodiodes.
/// Transmission is `1 - kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    kappa: f64,
}

impl SplitConfig {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::InvalidParameter(format!("kappa must lie in [0, 1], got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn transmission(&self) -> f64 {
        1.0 - self.kappa
    }
}

/// Spectral tone amplitudes from a CMRR measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmrrMeasurement {
    /// Differential reference: twice the single-arm (0/50) value.
    pub s_d: f64,
    /// Residual in the balanced (50/50) configuration.
    pub s_cm: f64,
}

impl CmrrMeasurement {
    pub fn new(s_d: f64, s_cm: f64) -> Result<Self> {
        if !(s_d >= 0.0 && s_cm >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "measurement amplitudes must be >= 0, got s_d={s_d}, s_cm={s_cm}"
            )));
        }
        Ok(Self { s_d, s_cm })
    }

    /// Builds the measurement from the two bench configurations. With one arm
    /// fully attenuated only half of the differential signal is seen, so the
    /// single-arm value is doubled.
    pub fn from_configurations(single_arm: f64, balanced: f64) -> Result<Self> {
        Self::new(2.0 * single_arm, balanced)
    }
}

/// Phase accumulated by a common-mode tone over a path difference.
pub fn phase_from_path_difference(path: &OpticalPath) -> f64 {
    2.0 * PI * path.f_cm * path.n_eff * path.delta_l / SPEED_OF_LIGHT
}

/// Optical CMRR due to a phase difference between the arms.
pub fn cmrr_path(delta_phi: f64) -> CmrrDb {
    CmrrDb::from_residual((delta_phi / 2.0).sin())
}

/// Optical CMRR due to splitting (and responsivity) imbalance.
pub fn cmrr_split(cfg: &SplitConfig) -> CmrrDb {
    // |kappa - T| rather than |2 kappa - 1| keeps cmrr_split(k) == cmrr_split(1 - k) bit-exact.
    CmrrDb::from_residual(cfg.kappa() - cfg.transmission())
}

pub fn cmrr_measured(m: &CmrrMeasurement) -> Result<CmrrDb> {
    if m.s_d == 0.0 {
        return Err(Error::NoDifferentialSignal);
    }
    if m.s_cm == 0.0 {
        return Ok(CmrrDb::MAX);
    }
    Ok(CmrrDb::new(10.0 * (m.s_d / m.s_cm).log10()))
}

/// Balanced detector noise model: quantum variance grows linearly with LO
/// power up to a hard saturation point; classical variance is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Quantum-variance gain, V² per W of LO power.
    pub g: f64,
    /// Classical (electronic) noise variance, V².
    pub sigma_c_sq: f64,
    /// LO power above which the quantum variance stops growing, W.
    pub p_sat: f64,
    /// Output noise-floor standard deviation used for tone experiments, V.
    pub sigma_floor: f64,
    /// LO power at which the model was calibrated, W.
    pub p_ref: f64,
}

/// Reference operating point: 20 dBm LO.
pub const REFERENCE_LO_POWER: f64 = 0.1;
/// Total output variance at the reference point, V².
pub const REFERENCE_TOTAL_VARIANCE: f64 = 995e-6;
/// Shot-noise clearance at the reference point, dB.
pub const REFERENCE_SNC_DB: f64 = 25.6;
/// Detector noise floor seen in the tone experiments, V.
pub const NOISE_FLOOR_SIGMA: f64 = 8.5e-3;

impl DetectorModel {
    /// Calibrates gain and classical variance so that `lo_power = p_ref`
    /// yields the given total variance and SNC. Saturation starts at `p_ref`.
    pub fn calibrated(total_variance: f64, snc_db: f64, p_ref: f64) -> Result<Self> {
        if !(total_variance > 0.0 && p_ref > 0.0 && snc_db.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "calibration needs total_variance > 0, finite SNC, p_ref > 0 \
                 (got {total_variance}, {snc_db}, {p_ref})"
            )));
        }
        let ratio = 10f64.powf(snc_db / 10.0);
        let sigma_c_sq = total_variance / (1.0 + ratio);
        let g = (total_variance - sigma_c_sq) / p_ref;
        Ok(Self {
            g,
            sigma_c_sq,
            p_sat: p_ref,
            sigma_floor: NOISE_FLOOR_SIGMA,
            p_ref,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.sigma_c_sq > 0.0 && self.p_sat > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "detector model needs g, sigma_c_sq, p_sat > 0: {self:?}"
            )));
        }
        if !(self.sigma_floor >= 0.0 && self.p_ref > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "detector model needs sigma_floor >= 0, p_ref > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::calibrated(REFERENCE_TOTAL_VARIANCE, REFERENCE_SNC_DB, REFERENCE_LO_POWER)
            .expect("reference calibration constants are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorVariances {
    pub sigma_q_sq: f64,
    pub sigma_c_sq: f64,
    pub sigma_total_sq: f64,
    /// `-inf` when there is no LO.
    pub snc_db: f64,
}

/// Noise variances at the detector output for a given LO power (W).
/// Negative powers are treated as zero.
pub fn detector_variances(lo_power: f64, model: &DetectorModel) -> DetectorVariances {
    let p = lo_power.max(0.0).min(model.p_sat);
    let sigma_q_sq = model.g * p;
    let snc_db = if sigma_q_sq > 0.0 {
        10.0 * (sigma_q_sq / model.sigma_c_sq).log10()
    } else {
        f64::NEG_INFINITY
    };
    DetectorVariances {
        sigma_q_sq,
        sigma_c_sq: model.sigma_c_sq,
        sigma_total_sq: sigma_q_sq + model.sigma_c_sq,
        snc_db,
    }
}
