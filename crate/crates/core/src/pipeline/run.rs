use log::{info, warn};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::time::{Duration, Instant};

use super::config::{PipelineConfig, QuadratureMode, SeedSource};
use crate::entropy::{choose_m, min_entropy_gaussian, min_entropy_of_counts, EntropyReport};
use crate::error::{Error, Result};
use crate::optics::{cmrr_split, detector_variances, DetectorVariances, SplitConfig};
use crate::sampler::{adc_quantize_flagged, AdcConfig, NoiseSpec, QuadratureSource, ToneSpec};
use crate::stats::{export_bits, run_core_suite, SuiteReport};
use crate::toeplitz::{HashParams, StreamExtractor, ToeplitzSeed};

const CHUNK: usize = 1 << 14;
const QUEUE_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    /// Samples per second through the extractor alone.
    pub extractor_samples_per_sec: f64,
    /// Output bits per second through the extractor alone.
    pub extractor_bits_per_sec: f64,
    /// Output bits per second over the whole staged run.
    pub end_to_end_bits_per_sec: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFingerprints {
    pub sampler_seed: u64,
    /// SHA-256 of the Toeplitz seed bytes, hex.
    pub toeplitz_sha256: String,
    pub toeplitz_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEntropy {
    /// Min-entropy of the raw ADC codes fed to the extractor (X in Z mode).
    pub raw_code_bits: f64,
    /// Min-entropy of integer Ẑ values; Z mode only.
    pub z_bits: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub entropy: EntropyReport,
    /// Largest m meeting the configured epsilon target.
    pub max_m: usize,
    pub variances: DetectorVariances,
    pub suite: Option<SuiteReport>,
    pub throughput: Throughput,
    /// Samples clamped to an ADC rail (both channels counted).
    pub saturated_samples: usize,
    pub empirical_entropy: EmpiricalEntropy,
    pub samples_processed: usize,
    pub bits_emitted: usize,
    pub bits_expected: usize,
    pub seeds: SeedFingerprints,
    pub config: PipelineConfig,
}

impl RunReport {
    pub fn conservation_holds(&self) -> bool {
        self.bits_emitted == self.bits_expected
    }

    pub fn suite_passed(&self) -> bool {
        self.suite
            .as_ref()
            .is_some_and(|s| s.all_passed() && s.fisher_passed())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub bits: Vec<bool>,
}

/// Toeplitz seed bytes for the configured source.
pub fn load_seed_bytes(source: &SeedSource, params: &HashParams) -> Result<Vec<u8>> {
    let mut bytes = vec![0u8; params.seed_bytes()];
    match source {
        SeedSource::File { path } => return Ok(std::fs::read(path)?),
        SeedSource::Host => rand::rng().fill_bytes(&mut bytes),
        SeedSource::Generated { value } => ChaCha20Rng::seed_from_u64(*value).fill_bytes(&mut bytes),
    }
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Trusted min-entropy per sample: the Gaussian bound on the quantum part
/// only. Zero when there is no quantum signal.
pub fn trusted_min_entropy(v: &DetectorVariances, adc: &AdcConfig) -> Result<f64> {
    if v.sigma_q_sq > 0.0 {
        min_entropy_gaussian(v.sigma_q_sq.sqrt(), adc.w_bin())
    } else {
        Ok(0.0)
    }
}

/// Extractor input for Z mode: the `bits`-wide X code in the high half,
/// the P code in the low half.
pub fn z_word(x: i64, p: i64, bits: u32) -> i64 {
    let mask = (1i64 << bits) - 1;
    ((x & mask) << bits) | (p & mask)
}

/// One digitised sample ready for the extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleWord {
    /// Extractor input; in Z mode the X code occupies the high half and the
    /// P code the low half.
    pub word: i64,
    pub x: i64,
    pub p: i64,
    /// Channels that hit an ADC rail (0, 1 or 2).
    pub saturated: u8,
}

/// Endless sequence of extractor input words for a configuration.
pub struct WordSource {
    source: QuadratureSource,
    adc: AdcConfig,
    mode: QuadratureMode,
}

impl WordSource {
    pub fn new(cfg: &PipelineConfig, variances: &DetectorVariances) -> Result<Self> {
        let noise = NoiseSpec::new(0.0, variances.sigma_q_sq, variances.sigma_c_sq)?;
        let tone = match &cfg.common_mode {
            Some(cm) => {
                let cmrr = cmrr_split(&SplitConfig::new(cm.kappa)?);
                Some(ToneSpec::new(cm.amplitude, cm.frequency, 0.0)?.rejected(cmrr))
            }
            None => None,
        };
        Ok(Self {
            source: QuadratureSource::new(&noise, tone.as_ref(), cfg.trace.sample_rate, cfg.trace.rng_seed)?,
            adc: cfg.adc,
            mode: cfg.quadrature_mode,
        })
    }

    pub fn next_word(&mut self) -> SampleWord {
        let (xv, pv) = self.source.next_pair();
        let (xc, xs) = adc_quantize_flagged(xv, &self.adc);
        let (pc, ps) = adc_quantize_flagged(pv, &self.adc);
        let (x, p) = (i64::from(xc), i64::from(pc));
        let word = match self.mode {
            QuadratureMode::X => x,
            QuadratureMode::P => p,
            QuadratureMode::Z => z_word(x, p, self.adc.bits),
        };
        SampleWord {
            word,
            x,
            p,
            saturated: u8::from(xs) + u8::from(ps),
        }
    }
}

/// Validated configuration with the entropy budget checked and the
/// extractor built.
pub struct Prepared {
    pub params: HashParams,
    pub variances: DetectorVariances,
    pub entropy: EntropyReport,
    pub max_m: usize,
    pub seeds: SeedFingerprints,
    pub extractor: StreamExtractor,
}

pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    let params = cfg.validate()?;
    let variances = detector_variances(cfg.lo_power.watts(), &cfg.detector_model());

    let h_min = trusted_min_entropy(&variances, &cfg.adc)?;
    let max_m = choose_m(h_min, params.s(), cfg.epsilon_target);
    if params.m() > max_m {
        return Err(Error::InsufficientEntropy {
            requested: params.m(),
            max: max_m,
            h_min,
            epsilon: cfg.epsilon_target,
        });
    }
    let entropy = EntropyReport::new(h_min, params.m(), params.s());
    info!("h_min = {h_min:.4} bits/sample, m = {}, epsilon = {:.3e}", params.m(), entropy.epsilon);

    let seed_bytes = load_seed_bytes(&cfg.seed, &params)?;
    let seed = ToeplitzSeed::from_bytes(&seed_bytes, &params)?;
    let seeds = SeedFingerprints {
        sampler_seed: cfg.trace.rng_seed,
        toeplitz_sha256: sha256_hex(&seed_bytes),
        toeplitz_bits: seed.len(),
    };
    let extractor = StreamExtractor::new(&seed, &params)?;
    Ok(Prepared { params, variances, entropy, max_m, seeds, extractor })
}

#[derive(Default)]
struct GenStats {
    saturated: usize,
    raw_counts: Vec<u64>,
    z_counts: HashMap<i64, u64>,
}

fn generate(mut source: WordSource, cfg: &PipelineConfig, tx: SyncSender<Vec<i64>>) -> GenStats {
    let offset = i64::from(-cfg.adc.min_code());
    let mut stats = GenStats {
        raw_counts: vec![0; 1 << cfg.adc.bits],
        ..GenStats::default()
    };
    let mut remaining = cfg.trace.num_samples;
    while remaining > 0 {
        let n = remaining.min(CHUNK);
        remaining -= n;
        let mut words = Vec::with_capacity(n);
        for _ in 0..n {
            let w = source.next_word();
            stats.saturated += usize::from(w.saturated);
            let raw = match cfg.quadrature_mode {
                QuadratureMode::P => w.p,
                QuadratureMode::X => w.x,
                QuadratureMode::Z => {
                    *stats.z_counts.entry(w.x * w.x + w.p * w.p).or_insert(0) += 1;
                    w.x
                }
            };
            stats.raw_counts[(raw + offset) as usize] += 1;
            words.push(w.word);
        }
        if tx.send(words).is_err() {
            break;
        }
    }
    stats
}

/// Simulates, quantises, budgets, extracts and tests according to `cfg`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutput> {
    let Prepared { params, variances, entropy, max_m, seeds, mut extractor } = prepare(cfg)?;
    let source = WordSource::new(cfg, &variances)?;

    let groups = cfg.trace.num_samples / params.s();
    let bits_expected = groups * params.s() * params.m();
    let mut bits = Vec::with_capacity(bits_expected);
    let mut busy = Duration::ZERO;
    let mut absorbed = 0usize;

    let start = Instant::now();
    let (tx, rx) = sync_channel::<Vec<i64>>(QUEUE_DEPTH);
    let stats = std::thread::scope(|scope| {
        let producer = scope.spawn(|| generate(source, cfg, tx));
        for words in rx {
            let t0 = Instant::now();
            for &w in &words {
                extractor.push(w, &mut bits);
            }
            busy += t0.elapsed();
            absorbed += words.len();
        }
        producer.join().expect("sample generator panicked")
    });
    let wall = start.elapsed().as_secs_f64();
    debug_assert_eq!(absorbed, cfg.trace.num_samples);
    if extractor.pending() > 0 {
        info!("dropping {} samples of an incomplete group", extractor.pending());
    }
    if stats.saturated > 0 {
        warn!("{} samples clamped at the ADC rails", stats.saturated);
    }

    let busy_s = busy.as_secs_f64().max(f64::MIN_POSITIVE);
    let throughput = Throughput {
        extractor_samples_per_sec: absorbed as f64 / busy_s,
        extractor_bits_per_sec: bits.len() as f64 / busy_s,
        end_to_end_bits_per_sec: bits.len() as f64 / wall.max(f64::MIN_POSITIVE),
        wall_seconds: wall,
    };

    let empirical_entropy = EmpiricalEntropy {
        raw_code_bits: min_entropy_of_counts(stats.raw_counts.iter().copied())?,
        z_bits: match cfg.quadrature_mode {
            QuadratureMode::Z => Some(min_entropy_of_counts(stats.z_counts.values().copied())?),
            _ => None,
        },
    };

    let suite = if bits.is_empty() {
        warn!("no complete group of {} samples; statistical suite skipped", params.s());
        None
    } else {
        Some(run_core_suite(&bits, cfg.alpha)?)
    };

    let report = RunReport {
        entropy,
        max_m,
        variances,
        suite,
        throughput,
        saturated_samples: stats.saturated,
        empirical_entropy,
        samples_processed: absorbed,
        bits_emitted: bits.len(),
        bits_expected,
        seeds,
        config: cfg.clone(),
    };
    if !report.conservation_holds() {
        return Err(Error::LengthMismatch {
            expected: bits_expected,
            actual: report.bits_emitted,
        });
    }
    Ok(RunOutput { report, bits })
}

/// Writes the bitstream and JSON report to the paths named in the config.
pub fn write_outputs(out: &RunOutput) -> Result<()> {
    let o = &out.report.config.output;
    if let Some(path) = &o.bitstream {
        write_bitstream(path, &out.bits, o.format)?;
    }
    if let Some(path) = &o.report {
        write_report(path, &out.report)?;
    }
    Ok(())
}

pub fn write_bitstream(path: &Path, bits: &[bool], format: crate::stats::ExportFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    export_bits(bits, format, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
