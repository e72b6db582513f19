//! End-to-end orchestration, file formats and figure data.

pub mod codec;
pub mod config;
pub mod figures;
pub mod run;

pub use codec::{decode_samples, encode_samples, pack_bits, unpack_bits, Channel, PackedBits, SampleFile};
pub use config::{PipelineConfig, QuadratureMode, SeedSource};
pub use figures::{emit_figure_data, Figure, FigureOptions};
pub use run::{run_pipeline, write_outputs, RunOutput, RunReport};
