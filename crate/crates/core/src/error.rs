use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no differential reference signal (S_d = 0)")]
    NoDifferentialSignal,

    #[error("tone frequency {frequency} Hz is not below Nyquist ({nyquist} Hz)")]
    AboveNyquist { frequency: f64, nyquist: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("seed too short: need {needed} bits, have {available}")]
    SeedTooShort { needed: usize, available: usize },

    #[error("sample index {index} out of range for s = {s}")]
    SliceOutOfRange { index: usize, s: usize },

    #[error("stream state is full ({s} samples absorbed without emission)")]
    StreamFull { s: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("sample file: {0}")]
    SampleFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error(
        "insufficient entropy: requested m = {requested} but at most {max} bits/sample \
         meet epsilon <= {epsilon} (h_min = {h_min:.4} bits)"
    )]
    InsufficientEntropy {
        requested: usize,
        max: usize,
        h_min: f64,
        epsilon: f64,
    },

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
