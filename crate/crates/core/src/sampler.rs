//! Monte-Carlo quadrature traces, the Z observable, ADC quantisation and
//! single-bin tone power.
//!
//! Noise comes from ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`),
//! shaped to a normal distribution with the ziggurat sampler from
//! `rand_distr::StandardNormal`. Both are portable and value-stable, so a
//! `(spec, seed)` pair reproduces the same trace on every platform. For each
//! sample index the X draw is taken before the P draw.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::optics::CmrrDb;

pub const DEFAULT_SAMPLE_RATE: f64 = 1e6;

/// Gaussian noise at one quadrature output. Variances in V².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mu: f64,
    pub sigma_q_sq: f64,
    pub sigma_c_sq: f64,
}

impl NoiseSpec {
    pub fn new(mu: f64, sigma_q_sq: f64, sigma_c_sq: f64) -> Result<Self> {
        if !(sigma_q_sq >= 0.0 && sigma_c_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variances must be >= 0, got sigma_q_sq={sigma_q_sq}, sigma_c_sq={sigma_c_sq}"
            )));
        }
        Ok(Self { mu, sigma_q_sq, sigma_c_sq })
    }

    pub fn total_variance(&self) -> f64 {
        self.sigma_q_sq + self.sigma_c_sq
    }
}

/// A residual common-mode sinusoid on both quadrature channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneSpec {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl ToneSpec {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!("tone amplitude must be >= 0, got {amplitude}")));
        }
        Ok(Self { amplitude, frequency, phase })
    }

    /// The same tone after common-mode rejection.
    pub fn rejected(&self, cmrr: CmrrDb) -> Self {
        Self {
            amplitude: self.amplitude * cmrr.residual_factor(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub num_samples: usize,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
    pub rng_seed: u64,
}

fn default_sample_rate() -> f64 {
    DEFAULT_SAMPLE_RATE
}

impl TraceConfig {
    pub fn new(num_samples: usize, rng_seed: u64) -> Self {
        Self {
            num_samples,
            sample_rate: DEFAULT_SAMPLE_RATE,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 1 {
            return Err(Error::InvalidParameter("num_samples must be >= 1".into()));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!("sample_rate must be > 0, got {}", self.sample_rate)));
        }
        Ok(())
    }
}

/// Simultaneous X and P voltage traces.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureBatch {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub config: TraceConfig,
}

impl QuadratureBatch {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Incremental form of [`sample_quadratures`]; pulling `k` pairs from a fresh
/// source yields exactly the first `k` samples of the batch for the same seed.
pub struct QuadratureSource {
    rng: ChaCha20Rng,
    mu: f64,
    sigma: f64,
    tone: Option<ToneSpec>,
    sample_rate: f64,
    index: u64,
}

impl QuadratureSource {
    pub fn new(noise: &NoiseSpec, tone: Option<&ToneSpec>, sample_rate: f64, seed: u64) -> Result<Self> {
        if let Some(t) = tone {
            let nyquist = sample_rate / 2.0;
            if !(t.frequency < nyquist) {
                return Err(Error::AboveNyquist { frequency: t.frequency, nyquist });
            }
        }
        Ok(Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            mu: noise.mu,
            sigma: noise.total_variance().sqrt(),
            tone: tone.copied(),
            sample_rate,
            index: 0,
        })
    }

    pub fn next_pair(&mut self) -> (f64, f64) {
        let zx: f64 = StandardNormal.sample(&mut self.rng);
        let zp: f64 = StandardNormal.sample(&mut self.rng);
        let mut x = self.mu + self.sigma * zx;
        let mut p = self.mu + self.sigma * zp;
        if let Some(t) = &self.tone {
            let arg = 2.0 * PI * t.frequency * self.index as f64 / self.sample_rate + t.phase;
            let v = t.amplitude * arg.sin();
            x += v;
            p += v;
        }
        self.index += 1;
        (x, p)
    }

    /// Appends `count` pairs to the given buffers.
    pub fn fill(&mut self, count: usize, x: &mut Vec<f64>, p: &mut Vec<f64>) {
        x.reserve(count);
        p.reserve(count);
        for _ in 0..count {
            let (a, b) = self.next_pair();
            x.push(a);
            p.push(b);
        }
    }
}

pub fn sample_quadratures(noise: &NoiseSpec, tone: Option<&ToneSpec>, cfg: &TraceConfig) -> Result<QuadratureBatch> {
    cfg.validate()?;
    let mut source = QuadratureSource::new(noise, tone, cfg.sample_rate, cfg.rng_seed)?;
    let mut x = Vec::new();
    let mut p = Vec::new();
    source.fill(cfg.num_samples, &mut x, &mut p);
    Ok(QuadratureBatch { x, p, config: *cfg })
}

/// `z_i = x_i² + p_i²`.
pub fn compute_z(batch: &QuadratureBatch) -> Vec<f64> {
    batch.x.iter().zip(&batch.p).map(|(x, p)| x * x + p * p).collect()
}

/// Ẑ on integer codes; exact in `i64` for any code width used here.
pub fn compute_z_codes(x: &[i32], p: &[i32]) -> Vec<i64> {
    x.iter()
        .zip(p)
        .map(|(&a, &b)| i64::from(a) * i64::from(a) + i64::from(b) * i64::from(b))
        .collect()
}

/// Bipolar ADC with mid-tread quantisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub bits: u32,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        Self { bits: 12, v_min: -0.5, v_max: 0.5 }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=31).contains(&self.bits) {
            return Err(Error::InvalidParameter(format!("ADC bits must be in 1..=31, got {}", self.bits)));
        }
        if !(self.v_max > self.v_min) {
            return Err(Error::InvalidParameter(format!(
                "ADC range needs v_max > v_min, got [{}, {}]",
                self.v_min, self.v_max
            )));
        }
        Ok(())
    }

    pub fn w_bin(&self) -> f64 {
        (self.v_max - self.v_min) / 2f64.powi(self.bits as i32)
    }

    pub fn min_code(&self) -> i32 {
        -(1 << (self.bits - 1))
    }

    pub fn max_code(&self) -> i32 {
        (1 << (self.bits - 1)) - 1
    }

    fn quantize_with_flag(&self, v: f64) -> (i32, bool) {
        // f64::round is ties-away-from-zero
        let raw = (v / self.w_bin()).round();
        let lo = f64::from(self.min_code());
        let hi = f64::from(self.max_code());
        if raw < lo {
            (self.min_code(), true)
        } else if raw > hi {
            (self.max_code(), true)
        } else {
            (raw as i32, false)
        }
    }
}

pub fn adc_quantize(v: f64, adc: &AdcConfig) -> i32 {
    adc.quantize_with_flag(v).0
}

/// Like [`adc_quantize`], also reporting whether the value hit a rail.
pub fn adc_quantize_flagged(v: f64, adc: &AdcConfig) -> (i32, bool) {
    adc.quantize_with_flag(v)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuantizedTrace {
    pub codes: Vec<i32>,
    /// Samples that hit a rail.
    pub saturated: usize,
}

pub fn quantize_trace(trace: &[f64], adc: &AdcConfig) -> QuantizedTrace {
    let mut saturated = 0;
    let codes = trace
        .iter()
        .map(|&v| {
            let (c, clamped) = adc.quantize_with_flag(v);
            saturated += usize::from(clamped);
            c
        })
        .collect();
    QuantizedTrace { codes, saturated }
}

/// Power of the `f` component of a real trace, via the Goertzel recurrence.
/// Normalised so that a bin-aligned sinusoid of amplitude `A` gives `A²/2`.
pub fn spectral_power_at(trace: &[f64], sample_rate: f64, f: f64) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::LengthMismatch { expected: 2, actual: trace.len() });
    }
    let nyquist = sample_rate / 2.0;
    if !(f > 0.0 && f < nyquist) {
        return Err(Error::InvalidParameter(format!(
            "frequency {f} Hz outside (0, {nyquist}) Hz"
        )));
    }
    let omega = 2.0 * PI * f / sample_rate;
    let coeff = 2.0 * omega.cos();
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for &x in trace {
        let s = x + coeff * s1 - s2;
        s2 = s1;
        s1 = s;
    }
    let mag_sq = (s1 * s1 + s2 * s2 - coeff * s1 * s2).max(0.0);
    let n = trace.len() as f64;
    Ok(2.0 * mag_sq / (n * n))
}

/// Output standard deviation for a detector with a given noise floor when a
/// common-mode tone of `tone_amplitude` leaks through `cmrr` of rejection.
pub fn sigma_out_model(tone_amplitude: f64, cmrr: CmrrDb, floor: f64) -> f64 {
    let residual = tone_amplitude * cmrr.residual_factor();
    (floor * floor + residual * residual / 2.0).sqrt()
}
