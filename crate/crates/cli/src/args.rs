use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use qrng_core::pipeline::config::LoPower;
use qrng_core::pipeline::{PipelineConfig, QuadratureMode, SeedSource};
use qrng_core::stats::ExportFormat;

#[derive(Debug, Parser)]
#[command(name = "qrng", version, about = "Vacuum-noise QRNG simulator and post-processor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and digitise quadrature samples into sample files.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Output file for X codes.
        #[arg(long)]
        x_out: PathBuf,
        /// Output file for P codes.
        #[arg(long)]
        p_out: Option<PathBuf>,
    },
    /// Hash stored sample files into a bitstream.
    Extract {
        #[command(flatten)]
        run: RunArgs,
        /// Sample file for the configured channel (X in Z mode).
        #[arg(long)]
        input: PathBuf,
        /// P sample file; required in Z mode.
        #[arg(long)]
        p_in: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the core statistical tests on a bitstream file.
    Test {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Raw)]
        format: Format,
        #[arg(long, default_value_t = qrng_core::stats::DEFAULT_ALPHA)]
        alpha: f64,
        /// Trailing zero bits to ignore in a raw file.
        #[arg(long, default_value_t = 0)]
        pad: u8,
    },
    /// Write CSV data for the characterisation plots.
    Figures {
        /// fig3-left, fig3-right, fig7, fig8 or all.
        #[arg(long, default_value = "all")]
        figure: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Common-mode tone amplitude before rejection, V.
        #[arg(long)]
        tone_amplitude: Option<f64>,
    },
    /// Serve extracted bytes over HTTP.
    Serve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = qrng_api::DEFAULT_BUFFER_BYTES)]
        buffer_bytes: usize,
    },
    /// Full run: simulate, budget, extract, test, and write the report.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Print the effective configuration as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Raw,
    Ascii,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Raw => ExportFormat::Raw,
            Format::Ascii => ExportFormat::Ascii,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    X,
    P,
    Z,
}

/// Configuration file plus per-field overrides.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration; the reference operating point when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sampler_seed: Option<u64>,
    /// Expand the Toeplitz seed from this value.
    #[arg(long, conflicts_with_all = ["seed_file", "host_seed"])]
    pub toeplitz_seed: Option<u64>,
    /// Read the Toeplitz seed from a file.
    #[arg(long, conflicts_with = "host_seed")]
    pub seed_file: Option<PathBuf>,
    /// Draw the Toeplitz seed from operating-system entropy.
    #[arg(long)]
    pub host_seed: bool,
    #[arg(long, conflicts_with = "lo_watts", allow_negative_numbers = true)]
    pub lo_dbm: Option<f64>,
    #[arg(long)]
    pub lo_watts: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Bitstream output path.
    #[arg(long)]
    pub bitstream: Option<PathBuf>,
    /// JSON report output path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

pub const DEFAULT_SAMPLES: usize = 1_000_000;

impl RunArgs {
    /// Loads the file (if any) and applies flag overrides. Overriding the
    /// mode also sets `hash.n` to the matching sample width.
    pub fn effective_config(&self) -> qrng_core::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)
                .map_err(|e| qrng_core::Error::Config(format!("{}: {e}", path.display())))?,
            None => PipelineConfig::reference(DEFAULT_SAMPLES, 1, 2),
        };
        if let Some(n) = self.samples {
            cfg.trace.num_samples = n;
        }
        if let Some(seed) = self.sampler_seed {
            cfg.trace.rng_seed = seed;
        }
        if let Some(value) = self.toeplitz_seed {
            cfg.seed = SeedSource::Generated { value };
        }
        if let Some(path) = &self.seed_file {
            cfg.seed = SeedSource::File { path: path.clone() };
        }
        if self.host_seed {
            cfg.seed = SeedSource::Host;
        }
        if let Some(d) = self.lo_dbm {
            cfg.lo_power = LoPower::Dbm(d);
        }
        if let Some(w) = self.lo_watts {
            cfg.lo_power = LoPower::Watts(w);
        }
        if let Some(mode) = self.mode {
            cfg.quadrature_mode = match mode {
                Mode::X => QuadratureMode::X,
                Mode::P => QuadratureMode::P,
                Mode::Z => QuadratureMode::Z,
            };
            cfg.hash.n = cfg.sample_width();
        }
        if let Some(m) = self.m {
            cfg.hash.m = m;
        }
        if let Some(s) = self.s {
            cfg.hash.s = s;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon_target = e;
        }
        if let Some(p) = &self.bitstream {
            cfg.output.bitstream = Some(p.clone());
        }
        if let Some(p) = &self.report {
            cfg.output.report = Some(p.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = f.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
