use std::path::Path;
use std::process::{Command, Output};

fn qrng(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrng"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn qrng")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn report_writes_bitstream_and_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrng(
        dir.path(),
        &["report", "--samples", "60000", "--sampler-seed", "4", "--bitstream", "bits.bin", "--report", "r.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["bits_emitted"], 480_000);
    assert_eq!(report["config"]["trace"]["rng_seed"], 4);
    assert_eq!(report["entropy"]["m"], 8);
    assert_eq!(std::fs::metadata(dir.path().join("bits.bin")).unwrap().len(), 60_000);
    assert_eq!(json(&out)["bits_emitted"], 480_000);
}

#[test]
fn simulate_then_extract_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--samples", "12000", "--mode", "z", "--toeplitz-seed", "9"];
    let run = |extra: &[&str]| {
        let args: Vec<&str> = extra.iter().chain(common.iter()).copied().collect();
        let out = qrng(dir.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["report", "--bitstream", "direct.bin"]);
    run(&["simulate", "--x-out", "x.bin", "--p-out", "p.bin"]);
    run(&["extract", "--input", "x.bin", "--p-in", "p.bin", "--out", "staged.bin"]);
    let direct = std::fs::read(dir.path().join("direct.bin")).unwrap();
    assert_eq!(direct.len(), 12_000);
    assert_eq!(direct, std::fs::read(dir.path().join("staged.bin")).unwrap());
    assert_eq!(std::fs::metadata(dir.path().join("x.bin")).unwrap().len(), 16 + 2 * 12_000);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        r#"
quadrature_mode = "x"
lo_power = { dbm = 20.0 }

[trace]
num_samples = 6000
rng_seed = 3

[hash]
n = 12
m = 8
s = 60

[seed]
source = "generated"
value = 5
"#,
    )
    .unwrap();
    let out = qrng(dir.path(), &["report", "-c", "run.toml", "--samples", "12000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["samples_processed"], 12_000);
    assert_eq!(r["config"]["trace"]["rng_seed"], 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| qrng(dir.path(), args).status.code();

    // 1: configuration
    assert_eq!(code(&["report", "--m", "12"]), Some(1));
    assert_eq!(code(&["report", "--no-such-flag"]), Some(1));
    assert_eq!(code(&["report", "-c", "missing.toml"]), Some(1));
    assert_eq!(code(&["figures", "--figure", "fig9"]), Some(1));
    // 2: pipeline
    assert_eq!(code(&["report", "--lo-watts", "0", "--samples", "600"]), Some(2));
    assert_eq!(code(&["extract", "--input", "absent.bin", "--out", "o.bin"]), Some(2));
    // 3: statistical suite
    std::fs::write(dir.path().join("zeros.bin"), vec![0u8; 4096]).unwrap();
    assert_eq!(code(&["test", "zeros.bin"]), Some(3));
    // 0
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn test_verb_accepts_ascii() {
    let dir = tempfile::tempdir().unwrap();
    let ok = qrng(dir.path(), &["report", "--samples", "30000", "--bitstream", "b.txt", "--format", "ascii"]);
    assert_eq!(ok.status.code(), Some(0));
    let out = qrng(dir.path(), &["test", "b.txt", "--format", "ascii"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["bits"], 240_000);
}

#[test]
fn figures_written_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrng(dir.path(), &["figures", "--out-dir", "figs"]);
    assert_eq!(out.status.code(), Some(0));
    for id in ["fig3-left", "fig3-right", "fig7", "fig8"] {
        let text = std::fs::read_to_string(dir.path().join("figs").join(format!("{id}.csv"))).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.contains(','), "{id}: {header}");
        assert!(text.lines().count() > 2);
    }
}
