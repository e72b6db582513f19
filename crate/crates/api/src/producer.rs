use log::{info, warn};
use std::sync::Arc;
use std::thread::JoinHandle;

use qrng_core::pipeline::pack_bits;
use qrng_core::pipeline::run::{prepare, WordSource};
use qrng_core::pipeline::PipelineConfig;
use qrng_core::Result;

use crate::buffer::ByteBuffer;

const PUSH_BITS: usize = 4096;

/// Extraction thread feeding a [`ByteBuffer`]. Dropping the handle closes
/// the buffer and joins the thread.
pub struct Producer {
    buffer: Arc<ByteBuffer>,
    handle: Option<JoinHandle<()>>,
}

/// Starts continuous extraction for `cfg`. The trace length in the config is
/// ignored; the producer runs until the buffer is closed.
pub fn spawn_producer(cfg: &PipelineConfig, buffer: Arc<ByteBuffer>) -> Result<Producer> {
    let prepared = prepare(cfg)?;
    let mut source = WordSource::new(cfg, &prepared.variances)?;
    let mut extractor = prepared.extractor;
    info!(
        "producer: m = {}, s = {}, h_min = {:.4}, seed sha256 {}",
        prepared.params.m(),
        prepared.params.s(),
        prepared.entropy.h_min,
        prepared.seeds.toeplitz_sha256
    );
    let sink = Arc::clone(&buffer);
    let handle = std::thread::Builder::new()
        .name("qrng-producer".into())
        .spawn(move || {
            let mut bits = Vec::with_capacity(2 * PUSH_BITS);
            loop {
                while bits.len() < PUSH_BITS {
                    extractor.push(source.next_word().word, &mut bits);
                }
                let whole = bits.len() / 8 * 8;
                let bytes = pack_bits(&bits[..whole]).bytes;
                bits.drain(..whole);
                if !sink.push(bytes) {
                    break;
                }
            }
            if !sink.is_closed() {
                warn!("producer stopped unexpectedly");
            }
        })?;
    Ok(Producer {
        buffer,
        handle: Some(handle),
    })
}

impl Producer {
    pub fn buffer(&self) -> &Arc<ByteBuffer> {
        &self.buffer
    }
}

impl Drop for Producer {
    fn drop(&mut self) {
        self.buffer.close();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
