//! CSV series for the characterisation plots.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optics::{
    cmrr_path, cmrr_split, detector_variances, phase_from_path_difference, DetectorModel, OpticalPath,
    SplitConfig,
};
use crate::pipeline::codec::pack_bits;
use crate::sampler::{quantize_trace, sample_quadratures, sigma_out_model, AdcConfig, NoiseSpec, TraceConfig};
use crate::toeplitz::{extract_stream, HashParams, ToeplitzSeed};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Output noise against optical path mismatch.
    Fig3Left,
    /// Output noise against splitting ratio.
    Fig3Right,
    /// Noise variances and clearance against LO power.
    Fig7,
    /// Histograms of raw codes and hashed bytes.
    Fig8,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig3Left, Figure::Fig3Right, Figure::Fig7, Figure::Fig8];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig3Left => "fig3-left",
            Figure::Fig3Right => "fig3-right",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOptions {
    pub detector: DetectorModel,
    /// Common-mode tone amplitude before rejection, V.
    pub tone_amplitude: f64,
    pub path_f_cm: f64,
    pub split_f_cm: f64,
    /// Trace length and seeds for the histogram figure.
    pub samples: usize,
    pub sampler_seed: u64,
    pub toeplitz_seed: u64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            detector: DetectorModel::default(),
            tone_amplitude: 0.1,
            path_f_cm: 1e9,
            split_f_cm: 500e3,
            samples: 600_000,
            sampler_seed: 1,
            toeplitz_seed: 2,
        }
    }
}

pub fn emit_figure_data(figure: Figure, opts: &FigureOptions) -> Result<String> {
    match figure {
        Figure::Fig3Left => fig3_left(opts),
        Figure::Fig3Right => fig3_right(opts),
        Figure::Fig7 => Ok(fig7(opts)),
        Figure::Fig8 => fig8(opts),
    }
}

fn fig3_left(opts: &FigureOptions) -> Result<String> {
    let mut out = String::from("delta_l_mm,phase_rad,cmrr_db,sigma_out_mv\n");
    for mm in -25i32..=25 {
        let path = OpticalPath::free_space(f64::from(mm) * 1e-3, opts.path_f_cm)?;
        let phase = phase_from_path_difference(&path);
        let cmrr = cmrr_path(phase);
        let sigma = sigma_out_model(opts.tone_amplitude, cmrr, opts.detector.sigma_floor);
        writeln!(out, "{mm},{phase},{},{}", cmrr.value(), sigma * 1e3).expect("write to String");
    }
    Ok(out)
}

fn fig3_right(opts: &FigureOptions) -> Result<String> {
    let mut out = String::from("kappa,f_cm_hz,cmrr_db,sigma_out_mv\n");
    for k in 25..=75 {
        let kappa = f64::from(k) / 100.0;
        let cmrr = cmrr_split(&SplitConfig::new(kappa)?);
        let sigma = sigma_out_model(opts.tone_amplitude, cmrr, opts.detector.sigma_floor);
        writeln!(out, "{kappa},{},{},{}", opts.split_f_cm, cmrr.value(), sigma * 1e3).expect("write to String");
    }
    Ok(out)
}

fn fig7(opts: &FigureOptions) -> String {
    let mut out = String::from("lo_dbm,lo_mw,sigma_total_sq_mv2,sigma_q_sq_mv2,sigma_c_sq_mv2,snc_db\n");
    for dbm in -14i32..=22 {
        let watts = crate::optics::dbm_to_watts(f64::from(dbm));
        let v = detector_variances(watts, &opts.detector);
        writeln!(
            out,
            "{dbm},{},{},{},{},{}",
            watts * 1e3,
            v.sigma_total_sq * 1e6,
            v.sigma_q_sq * 1e6,
            v.sigma_c_sq * 1e6,
            v.snc_db
        )
        .expect("write to String");
    }
    out
}

fn fig8(opts: &FigureOptions) -> Result<String> {
    let adc = AdcConfig::default();
    let params = HashParams::reference();
    let v = detector_variances(opts.detector.p_ref, &opts.detector);
    let noise = NoiseSpec::new(0.0, v.sigma_q_sq, v.sigma_c_sq)?;
    let batch = sample_quadratures(&noise, None, &TraceConfig::new(opts.samples, opts.sampler_seed))?;
    let codes = quantize_trace(&batch.x, &adc).codes;

    let mut seed_bytes = vec![0u8; params.seed_bytes()];
    ChaCha20Rng::seed_from_u64(opts.toeplitz_seed).fill_bytes(&mut seed_bytes);
    let seed = ToeplitzSeed::from_bytes(&seed_bytes, &params)?;
    let wide: Vec<i64> = codes.iter().map(|&c| i64::from(c)).collect();
    let hashed = pack_bits(&extract_stream(&wide, &params, &seed)?).bytes;

    let mut raw_counts = vec![0u64; 1 << adc.bits];
    for &c in &codes {
        raw_counts[(c - adc.min_code()) as usize] += 1;
    }
    let mut byte_counts = [0u64; 256];
    for &b in &hashed {
        byte_counts[usize::from(b)] += 1;
    }

    let mut out = String::from("series,value,count\n");
    for (i, &n) in raw_counts.iter().enumerate().filter(|(_, &n)| n > 0) {
        writeln!(out, "raw,{},{n}", i as i32 + adc.min_code()).expect("write to String");
    }
    for (b, &n) in byte_counts.iter().enumerate() {
        writeln!(out, "hashed,{b},{n}").expect("write to String");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(csv: &str, idx: usize) -> Vec<f64> {
        csv.lines().skip(1).map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
    }

    #[test]
    fn ids_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
        assert!(matches!("fig9".parse::<Figure>(), Err(Error::UnknownFigure(_))));
    }

    #[test]
    fn path_sweep_floor_at_zero() {
        let csv = emit_figure_data(Figure::Fig3Left, &FigureOptions::default()).unwrap();
        let dl = column(&csv, 0);
        let sigma = column(&csv, 3);
        assert_eq!(dl.len(), 51);
        let zero = dl.iter().position(|&d| d == 0.0).unwrap();
        assert!((sigma[zero] - 8.5).abs() < 1e-9);
        assert!(sigma.iter().all(|&s| s >= sigma[zero]));
    }

    #[test]
    fn split_sweep_minimum_at_balance() {
        let csv = emit_figure_data(Figure::Fig3Right, &FigureOptions::default()).unwrap();
        let kappa = column(&csv, 0);
        let sigma = column(&csv, 3);
        let (argmin, _) = sigma
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(kappa[argmin], 0.5);
    }

    #[test]
    fn snc_sweep_slope() {
        let opts = FigureOptions::default();
        let csv = emit_figure_data(Figure::Fig7, &opts).unwrap();
        let dbm = column(&csv, 0);
        let snc = column(&csv, 5);
        assert_eq!(dbm.len(), 37);
        for i in 10..dbm.len() {
            if dbm[i] <= 20.0 {
                assert!((snc[i] - snc[i - 10] - 10.0).abs() < 0.1);
            } else {
                assert_eq!(snc[i], snc[i - 1]);
            }
        }
    }

    #[test]
    fn histogram_totals() {
        let opts = FigureOptions { samples: 6000, ..FigureOptions::default() };
        let csv = emit_figure_data(Figure::Fig8, &opts).unwrap();
        let (mut raw, mut hashed) = (0u64, 0u64);
        for l in csv.lines().skip(1) {
            let f: Vec<&str> = l.split(',').collect();
            let n: u64 = f[2].parse().unwrap();
            match f[0] {
                "raw" => raw += n,
                "hashed" => hashed += n,
                other => panic!("unexpected series {other}"),
            }
        }
        assert_eq!(raw, 6000);
        assert_eq!(hashed, 6000);
    }
}
