//! Raw sample files and bit packing.
//!
//! Sample file layout (little-endian):
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `b"QRNG"`            |
//! | 4      | 2    | format version (1)         |
//! | 6      | 1    | ADC bit width              |
//! | 7      | 1    | channel tag (0 = X, 1 = P) |
//! | 8      | 8    | sample count               |
//! | 16     | 2·k  | codes as sign-extended i16 |

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"QRNG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    P,
}

impl Channel {
    fn tag(self) -> u8 {
        match self {
            Channel::X => 0,
            Channel::P => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Channel::X),
            1 => Ok(Channel::P),
            t => Err(Error::SampleFormat(format!("unknown channel tag {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleFile {
    pub bits: u8,
    pub channel: Channel,
    pub codes: Vec<i32>,
}

fn code_range(bits: u8) -> (i32, i32) {
    let half = 1i32 << (bits - 1);
    (-half, half - 1)
}

pub fn encode_samples(codes: &[i32], channel: Channel, bits: u8) -> Result<Vec<u8>> {
    if !(1..=16).contains(&bits) {
        return Err(Error::SampleFormat(format!("bit width {bits} does not fit 16-bit words")));
    }
    let (lo, hi) = code_range(bits);
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * codes.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(bits);
    out.push(channel.tag());
    out.extend_from_slice(&(codes.len() as u64).to_le_bytes());
    for &c in codes {
        if !(lo..=hi).contains(&c) {
            return Err(Error::SampleFormat(format!("code {c} outside {bits}-bit range")));
        }
        out.extend_from_slice(&(c as i16).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_samples(bytes: &[u8]) -> Result<SampleFile> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::SampleFormat(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::SampleFormat("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::SampleFormat(format!("unsupported version {version}")));
    }
    let bits = bytes[6];
    if !(1..=16).contains(&bits) {
        return Err(Error::SampleFormat(format!("bad bit width {bits}")));
    }
    let channel = Channel::from_tag(bytes[7])?;
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
    let body = &bytes[HEADER_LEN..];
    let expected = count
        .checked_mul(2)
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::SampleFormat(format!("sample count {count} too large")))?;
    if body.len() != expected {
        return Err(Error::SampleFormat(format!(
            "body is {} bytes, header declares {count} samples ({expected} bytes)",
            body.len()
        )));
    }
    let (lo, hi) = code_range(bits);
    let codes = body
        .chunks_exact(2)
        .map(|w| {
            let c = i32::from(i16::from_le_bytes([w[0], w[1]]));
            if (lo..=hi).contains(&c) {
                Ok(c)
            } else {
                Err(Error::SampleFormat(format!("code {c} outside declared {bits}-bit range")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleFile { bits, channel, codes })
}

pub fn write_samples(path: &Path, codes: &[i32], channel: Channel, bits: u8) -> Result<()> {
    std::fs::write(path, encode_samples(codes, channel, bits)?)?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<SampleFile> {
    decode_samples(&std::fs::read(path)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBits {
    pub bytes: Vec<u8>,
    /// Zero bits appended to fill the final byte.
    pub pad: u8,
}

/// MSB-first packing; the last byte is zero-padded on the right.
pub fn pack_bits(bits: &[bool]) -> PackedBits {
    let bytes = bits
        .chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
        })
        .collect();
    let pad = ((8 - bits.len() % 8) % 8) as u8;
    PackedBits { bytes, pad }
}

pub fn unpack_bits(bytes: &[u8], pad: u8) -> Vec<bool> {
    let total = (bytes.len() * 8).saturating_sub(usize::from(pad));
    (0..total).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect()
}

/// Parses an ASCII '0'/'1' bitstream, skipping whitespace.
pub fn parse_ascii_bits(text: &[u8]) -> Result<Vec<bool>> {
    text.iter()
        .filter(|c| !c.is_ascii_whitespace())
        .map(|&c| match c {
            b'0' => Ok(false),
            b'1' => Ok(true),
            other => Err(Error::InvalidParameter(format!("unexpected byte {other:#04x} in ASCII bitstream"))),
        })
        .collect()
}
