mod args;

use anyhow::{anyhow, Context};
use clap::Parser;
use log::info;
use serde_json::json;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use args::{Cli, Command, Format, RunArgs};
use qrng_core::optics::detector_variances;
use qrng_core::pipeline::codec::{parse_ascii_bits, read_samples, unpack_bits, write_samples, Channel};
use qrng_core::pipeline::run::{prepare, run_pipeline, write_bitstream, write_outputs, z_word, WordSource};
use qrng_core::pipeline::{emit_figure_data, Figure, FigureOptions, PipelineConfig, QuadratureMode};
use qrng_core::stats::run_core_suite;
use qrng_api::{spawn_producer, ByteBuffer};

enum Failure {
    Config(anyhow::Error),
    Pipeline(anyhow::Error),
    Suite(String),
}

impl From<qrng_core::Error> for Failure {
    fn from(e: qrng_core::Error) -> Self {
        match e {
            qrng_core::Error::Config(_) | qrng_core::Error::UnknownFigure(_) => Failure::Config(e.into()),
            other => Failure::Pipeline(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Pipeline(e)
    }
}

type Outcome = Result<(), Failure>;

fn print_json(value: serde_json::Value) -> Outcome {
    let text = serde_json::to_string_pretty(&value).map_err(|e| Failure::Pipeline(e.into()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Pipeline(e.into())),
        _ => Ok(()),
    }
}

fn config_of(run: &RunArgs) -> Result<PipelineConfig, Failure> {
    run.effective_config().map_err(Failure::from)
}

fn simulate(run: &RunArgs, x_out: &Path, p_out: Option<&Path>) -> Outcome {
    let cfg = config_of(run)?;
    let variances = detector_variances(cfg.lo_power.watts(), &cfg.detector_model());
    let mut source = WordSource::new(&cfg, &variances)?;
    let n = cfg.trace.num_samples;
    let (mut xs, mut ps) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut saturated = 0usize;
    for _ in 0..n {
        let w = source.next_word();
        xs.push(w.x as i32);
        ps.push(w.p as i32);
        saturated += usize::from(w.saturated);
    }
    let bits = cfg.adc.bits as u8;
    write_samples(x_out, &xs, Channel::X, bits)?;
    if let Some(p) = p_out {
        write_samples(p, &ps, Channel::P, bits)?;
    }
    print_json(json!({
        "samples": n,
        "saturated_samples": saturated,
        "variances": variances,
        "x_out": x_out,
        "p_out": p_out,
        "config": cfg,
    }))
}

fn extract(run: &RunArgs, input: &Path, p_in: Option<&Path>, out: &Path) -> Outcome {
    let cfg = config_of(run)?;
    let prepared = prepare(&cfg)?;
    let primary = read_samples(input)?;
    if u32::from(primary.bits) != cfg.adc.bits {
        return Err(Failure::Config(anyhow!(
            "{} holds {}-bit codes but the ADC is configured for {} bits",
            input.display(),
            primary.bits,
            cfg.adc.bits
        )));
    }
    let words: Vec<i64> = match cfg.quadrature_mode {
        QuadratureMode::X | QuadratureMode::P => primary.codes.iter().map(|&c| i64::from(c)).collect(),
        QuadratureMode::Z => {
            let p_path = p_in.ok_or_else(|| Failure::Config(anyhow!("Z mode needs --p-in")))?;
            let p = read_samples(p_path)?;
            if p.codes.len() != primary.codes.len() || p.bits != primary.bits {
                return Err(Failure::Config(anyhow!("X and P files differ in length or width")));
            }
            primary
                .codes
                .iter()
                .zip(&p.codes)
                .map(|(&x, &p)| z_word(i64::from(x), i64::from(p), cfg.adc.bits))
                .collect()
        }
    };
    let mut extractor = prepared.extractor;
    let mut bits = Vec::with_capacity(words.len() / prepared.params.s() * prepared.params.output_bits());
    for &w in &words {
        extractor.push(w, &mut bits);
    }
    write_bitstream(out, &bits, cfg.output.format)?;
    print_json(json!({
        "samples": words.len(),
        "bits_emitted": bits.len(),
        "dropped_samples": extractor.pending(),
        "entropy": prepared.entropy,
        "seeds": prepared.seeds,
        "out": out,
        "config": cfg,
    }))
}

fn test_bits(input: &Path, format: Format, alpha: f64, pad: u8) -> Outcome {
    let bytes = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let bits = match format {
        Format::Raw => unpack_bits(&bytes, pad),
        Format::Ascii => parse_ascii_bits(&bytes)?,
    };
    let suite = run_core_suite(&bits, alpha)?;
    print_json(json!({ "bits": bits.len(), "suite": suite }))?;
    if suite.all_passed() && suite.fisher_passed() {
        Ok(())
    } else {
        Err(Failure::Suite(format!("suite failed at alpha = {alpha}; Fisher p = {}", suite.fisher_p)))
    }
}

fn figures(which: &str, out_dir: &Path, tone_amplitude: Option<f64>) -> Outcome {
    let list: Vec<Figure> = if which == "all" {
        Figure::ALL.to_vec()
    } else {
        vec![which.parse()?]
    };
    let mut opts = FigureOptions::default();
    if let Some(a) = tone_amplitude {
        opts.tone_amplitude = a;
    }
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for f in list {
        let path = out_dir.join(format!("{}.csv", f.id()));
        std::fs::write(&path, emit_figure_data(f, &opts)?).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn serve(run: &RunArgs, host: &str, port: u16, buffer_bytes: usize) -> Outcome {
    let cfg = config_of(run)?;
    let buffer = Arc::new(ByteBuffer::new(buffer_bytes));
    let producer = spawn_producer(&cfg, Arc::clone(&buffer))?;
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        info!("listening on {}", listener.local_addr()?);
        tokio::select! {
            r = qrng_api::serve(listener, Arc::clone(&buffer)) => r.context("server error")?,
            _ = tokio::signal::ctrl_c() => info!("shutting down"),
        }
        anyhow::Ok(())
    })?;
    drop(producer);
    Ok(())
}

fn report(run: &RunArgs, print_config: bool) -> Outcome {
    let cfg = config_of(run)?;
    if print_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(());
    }
    let out = run_pipeline(&cfg)?;
    write_outputs(&out)?;
    print_json(serde_json::to_value(&out.report).map_err(|e| Failure::Pipeline(e.into()))?)?;
    let r = &out.report;
    info!(
        "{} bits from {} samples, h_min {:.4}, epsilon {:.3e}, extractor {:.3e} samples/s",
        r.bits_emitted, r.samples_processed, r.entropy.h_min, r.entropy.epsilon, r.throughput.extractor_samples_per_sec
    );
    match &r.suite {
        Some(s) if s.all_passed() && s.fisher_passed() => Ok(()),
        Some(s) => Err(Failure::Suite(format!("core suite failed; Fisher p = {}", s.fisher_p))),
        None => Err(Failure::Suite("no bits to test".into())),
    }
}

fn dispatch(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Simulate { run, x_out, p_out } => simulate(run, x_out, p_out.as_deref()),
        Command::Extract { run, input, p_in, out } => extract(run, input, p_in.as_deref(), out),
        Command::Test { input, format, alpha, pad } => test_bits(input, *format, *alpha, *pad),
        Command::Figures { figure, out_dir, tone_amplitude } => figures(figure, out_dir, *tone_amplitude),
        Command::Serve { run, host, port, buffer_bytes } => serve(run, host, *port, *buffer_bytes),
        Command::Report { run, print_config } => report(run, *print_config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Suite(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}
