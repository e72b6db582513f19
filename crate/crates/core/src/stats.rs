//! Core statistical randomness tests (monobit, block frequency, runs,
//! cumulative sums) following the SP 800-22 formulations, with Fisher's
//! method for combining p-values and bitstream export for the full external
//! suite.

use log::warn;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::checked_gamma_ur;
use std::f64::consts::SQRT_2;
use std::io::Write;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_BLOCK_LEN: usize = 128;
/// Zero p-values are raised to this before taking logs.
pub const P_VALUE_FLOOR: f64 = 1e-300;
const RECOMMENDED_MIN_BITS: usize = 100;

/// Either a p-value or the runs pre-test rejecting the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestOutcome {
    PValue(f64),
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum TestStatus {
    Evaluated,
    NotApplicable,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    pub p_value: Option<f64>,
    pub passed: bool,
    pub alpha: f64,
    pub status: TestStatus,
}

impl TestResult {
    fn evaluated(name: &str, p: f64, alpha: f64) -> Self {
        Self {
            test_name: name.to_string(),
            p_value: Some(p),
            passed: p >= alpha,
            alpha,
            status: TestStatus::Evaluated,
        }
    }

    fn from_outcome(name: &str, outcome: Result<TestOutcome>, alpha: f64) -> Self {
        match outcome {
            Ok(TestOutcome::PValue(p)) => Self::evaluated(name, p, alpha),
            Ok(TestOutcome::NotApplicable) => Self {
                test_name: name.to_string(),
                p_value: None,
                passed: false,
                alpha,
                status: TestStatus::NotApplicable,
            },
            Err(e) => Self {
                test_name: name.to_string(),
                p_value: None,
                passed: false,
                alpha,
                status: TestStatus::Error(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub results: Vec<TestResult>,
    /// Fisher composite over evaluated tests; 0 if none were evaluated.
    pub fisher_p: f64,
    pub alpha: f64,
}

impl SuiteReport {
    /// Every test produced a p-value at or above alpha.
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn fisher_passed(&self) -> bool {
        self.fisher_p >= self.alpha
    }

    pub fn not_applicable(&self) -> impl Iterator<Item = &TestResult> {
        self.results.iter().filter(|r| r.status == TestStatus::NotApplicable)
    }
}

fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        0.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

fn short_input_warning(test: &str, n: usize) {
    if n < RECOMMENDED_MIN_BITS {
        warn!("{test}: {n} bits is below the recommended {RECOMMENDED_MIN_BITS}");
    }
}

fn signed_sum(bits: &[bool]) -> i64 {
    bits.iter().map(|&b| if b { 1i64 } else { -1 }).sum()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Regularised upper incomplete gamma, `Q(a, x)`, with `Q(a, 0) = 1`.
fn upper_gamma_q(a: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    checked_gamma_ur(a, x).map_err(|e| Error::InvalidParameter(format!("incomplete gamma: {e}")))
}

pub fn frequency_monobit(bits: &[bool]) -> Result<f64> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    short_input_warning("monobit", bits.len());
    let n = bits.len() as f64;
    let s = signed_sum(bits).abs() as f64;
    Ok(clamp_p(erfc(s / (SQRT_2 * n.sqrt()))))
}

/// Frequency within blocks of `block_len` bits; a trailing partial block
/// is ignored.
pub fn block_frequency(bits: &[bool], block_len: usize) -> Result<f64> {
    if block_len < 1 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    let blocks = bits.len() / block_len;
    if blocks == 0 {
        return Err(Error::InvalidParameter(format!(
            "block frequency needs at least one full block of {block_len} bits, got {}",
            bits.len()
        )));
    }
    let m = block_len as f64;
    let sum_sq: f64 = bits
        .chunks_exact(block_len)
        .map(|block| {
            let ones = block.iter().filter(|&&b| b).count() as f64;
            let pi = ones / m;
            (pi - 0.5) * (pi - 0.5)
        })
        .sum();
    let chi_sq = 4.0 * m * sum_sq;
    Ok(clamp_p(upper_gamma_q(blocks as f64 / 2.0, chi_sq / 2.0)?))
}

pub fn runs_test(bits: &[bool]) -> Result<TestOutcome> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    short_input_warning("runs", bits.len());
    let n = bits.len() as f64;
    let pi = bits.iter().filter(|&&b| b).count() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(TestOutcome::NotApplicable);
    }
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let expected = 2.0 * n * pi * (1.0 - pi);
    let denom = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    let p = erfc((runs as f64 - expected).abs() / denom);
    Ok(TestOutcome::PValue(clamp_p(p)))
}

/// Largest absolute excursion of the ±1 partial sums.
pub fn max_excursion(bits: &[bool], direction: Direction) -> i64 {
    let step = |&b: &bool| if b { 1i64 } else { -1 };
    let scan = |acc: (i64, i64), s: i64| {
        let sum = acc.0 + s;
        (sum, acc.1.max(sum.abs()))
    };
    match direction {
        Direction::Forward => bits.iter().map(step).fold((0, 0), scan).1,
        Direction::Reverse => bits.iter().rev().map(step).fold((0, 0), scan).1,
    }
}

/// Cumulative sums test. Summation bounds use truncating integer division,
/// as in the reference implementation.
pub fn cumulative_sums(bits: &[bool], direction: Direction) -> Result<f64> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    short_input_warning("cumulative sums", bits.len());
    let n = bits.len() as i64;
    let z = max_excursion(bits, direction);
    let sqrt_n = (n as f64).sqrt();
    let zf = z as f64;

    let hi = (n / z - 1) / 4;
    let mut sum1 = 0.0;
    for k in ((-n / z + 1) / 4)..=hi {
        let k = k as f64;
        sum1 += normal_cdf((4.0 * k + 1.0) * zf / sqrt_n) - normal_cdf((4.0 * k - 1.0) * zf / sqrt_n);
    }
    let mut sum2 = 0.0;
    for k in ((-n / z - 3) / 4)..=hi {
        let k = k as f64;
        sum2 += normal_cdf((4.0 * k + 3.0) * zf / sqrt_n) - normal_cdf((4.0 * k + 1.0) * zf / sqrt_n);
    }
    Ok(clamp_p(1.0 - sum1 + sum2))
}

/// Fisher's method: `X² = -2 Σ ln p_i` against chi-squared with `2k`
/// degrees of freedom.
pub fn fisher_combine(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut stat = 0.0;
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p-value {p} outside [0, 1]")));
        }
        let p = if p == 0.0 {
            warn!("zero p-value floored at {P_VALUE_FLOOR} for Fisher combination");
            P_VALUE_FLOOR
        } else {
            p
        };
        stat -= 2.0 * p.ln();
    }
    let k = p_values.len() as f64;
    Ok(clamp_p(upper_gamma_q(k, stat / 2.0)?))
}

const CORE_TESTS: [&str; 5] = [
    "frequency_monobit",
    "block_frequency",
    "runs",
    "cumulative_sums_forward",
    "cumulative_sums_reverse",
];

fn run_named(name: &str, bits: &[bool]) -> Result<TestOutcome> {
    match name {
        "frequency_monobit" => frequency_monobit(bits).map(TestOutcome::PValue),
        "block_frequency" => block_frequency(bits, DEFAULT_BLOCK_LEN).map(TestOutcome::PValue),
        "runs" => runs_test(bits),
        "cumulative_sums_forward" => cumulative_sums(bits, Direction::Forward).map(TestOutcome::PValue),
        "cumulative_sums_reverse" => cumulative_sums(bits, Direction::Reverse).map(TestOutcome::PValue),
        other => unreachable!("unknown core test {other}"),
    }
}

/// Runs the core tests concurrently and combines the evaluated p-values.
/// Results are reported in a fixed order regardless of completion order.
pub fn run_core_suite(bits: &[bool], alpha: f64) -> Result<SuiteReport> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    let results: Vec<TestResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = CORE_TESTS
            .iter()
            .map(|&name| scope.spawn(move || TestResult::from_outcome(name, run_named(name, bits), alpha)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("core test thread panicked"))
            .collect()
    });
    let evaluated: Vec<f64> = results.iter().filter_map(|r| r.p_value).collect();
    let fisher_p = if evaluated.is_empty() {
        0.0
    } else {
        fisher_combine(&evaluated)?
    };
    Ok(SuiteReport { results, fisher_p, alpha })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// Packed bytes, MSB-first, last byte zero-padded.
    #[default]
    Raw,
    /// One ASCII '0' or '1' per bit.
    Ascii,
}

pub fn export_bits<W: Write>(bits: &[bool], format: ExportFormat, mut out: W) -> std::io::Result<()> {
    match format {
        ExportFormat::Raw => out.write_all(&crate::pipeline::codec::pack_bits(bits).bytes),
        ExportFormat::Ascii => {
            let text: Vec<u8> = bits.iter().map(|&b| if b { b'1' } else { b'0' }).collect();
            out.write_all(&text)
        }
    }
}
