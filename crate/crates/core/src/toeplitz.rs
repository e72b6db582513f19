//! Toeplitz-hash randomness extraction over GF(2).
//!
//! `s` consecutive `n`-bit samples are concatenated into an `N = s·n` bit
//! input and multiplied by an `M × N` Toeplitz matrix, `M = s·m`. The matrix
//! is built from `N + M - 1` seed bits with
//!
//! ```text
//! entry(i, j) = seed[i - j + N - 1]
//! ```
//!
//! so the last column reads `seed[0..M]` and the first row reads the seed
//! backwards from index `N - 1`.
//!
//! Two evaluation routes are provided. [`hash_dense`] takes the parity of
//! each packed row ANDed with the whole input. The streaming route cuts the
//! matrix into `s` column blocks of width `n` ([`sample_slice`]); each
//! arriving sample selects columns of its block and XORs them into an
//! `M`-bit accumulator ([`StreamState`]), which is emitted after `s` samples.
//! Both produce identical bits.
//!
//! Samples enter as `n`-bit two's complement words, most significant bit
//! first, so bit `b` of a sample meets column `k·n + b` of the matrix.

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i / WORD] >> (i % WORD)) & 1 == 1
}

fn set_bit(words: &mut [u64], i: usize) {
    words[i / WORD] |= 1 << (i % WORD);
}

fn unpack(words: &[u64], len: usize) -> Vec<bool> {
    (0..len).map(|i| get_bit(words, i)).collect()
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; words_for(bits.len())];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        set_bit(&mut words, i);
    }
    words
}

/// Extractor geometry: `n` input bits and `m` output bits per sample,
/// `s` samples per hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct HashParams {
    n: usize,
    m: usize,
    s: usize,
}

impl HashParams {
    pub fn new(n: usize, m: usize, s: usize) -> Result<Self> {
        if !(1 <= m && m < n) {
            return Err(Error::InvalidParameter(format!("need 1 <= m < n, got m={m}, n={n}")));
        }
        if n > 63 {
            return Err(Error::InvalidParameter(format!("sample width n={n} exceeds 63 bits")));
        }
        if s < 1 {
            return Err(Error::InvalidParameter("s must be >= 1".into()));
        }
        Ok(Self { n, m, s })
    }

    /// The reference operating point: 12-bit samples, 8 bits out, 60 per hash.
    pub fn reference() -> Self {
        Self { n: 12, m: 8, s: 60 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `N = s·n`.
    pub fn input_bits(&self) -> usize {
        self.s * self.n
    }

    /// `M = s·m`.
    pub fn output_bits(&self) -> usize {
        self.s * self.m
    }

    /// `N + M - 1 = s(m + n) - 1`.
    pub fn seed_bits(&self) -> usize {
        self.input_bits() + self.output_bits() - 1
    }

    pub fn seed_bytes(&self) -> usize {
        self.seed_bits().div_ceil(8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSeed {
    bits: Vec<bool>,
}

impl ToeplitzSeed {
    pub fn new(bits: Vec<bool>, params: &HashParams) -> Result<Self> {
        if bits.len() != params.seed_bits() {
            return Err(Error::LengthMismatch {
                expected: params.seed_bits(),
                actual: bits.len(),
            });
        }
        Ok(Self { bits })
    }

    /// Reads seed bits MSB-first from raw bytes. Bits past the required
    /// length are ignored.
    pub fn from_bytes(bytes: &[u8], params: &HashParams) -> Result<Self> {
        let needed = params.seed_bits();
        let available = bytes.len() * 8;
        if available < needed {
            return Err(Error::SeedTooShort { needed, available });
        }
        let bits = (0..needed)
            .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1)
            .collect();
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// An `M × N` Toeplitz matrix with its rows packed for the dense product.
#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    params: HashParams,
    seed: Vec<bool>,
    rows: Vec<Vec<u64>>,
}

impl ToeplitzMatrix {
    pub fn params(&self) -> &HashParams {
        &self.params
    }

    pub fn rows(&self) -> usize {
        self.params.output_bits()
    }

    pub fn cols(&self) -> usize {
        self.params.input_bits()
    }

    /// `entry(i, j) = seed[i - j + N - 1]`.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows() && j < self.cols());
        self.seed[i + self.cols() - 1 - j]
    }

    pub fn row(&self, i: usize) -> Vec<bool> {
        unpack(&self.rows[i], self.cols())
    }
}

pub fn build_toeplitz(seed: &ToeplitzSeed, params: &HashParams) -> Result<ToeplitzMatrix> {
    if seed.len() != params.seed_bits() {
        return Err(Error::LengthMismatch {
            expected: params.seed_bits(),
            actual: seed.len(),
        });
    }
    let big_n = params.input_bits();
    let rows = (0..params.output_bits())
        .map(|i| {
            let mut words = vec![0u64; words_for(big_n)];
            for j in 0..big_n {
                if seed.bits[i + big_n - 1 - j] {
                    set_bit(&mut words, j);
                }
            }
            words
        })
        .collect();
    Ok(ToeplitzMatrix {
        params: *params,
        seed: seed.bits.clone(),
        rows,
    })
}

/// GF(2) matrix-vector product: output bit `i` is the parity of row `i`
/// ANDed with the input.
pub fn hash_dense(matrix: &ToeplitzMatrix, input: &[bool]) -> Result<Vec<bool>> {
    if input.len() != matrix.cols() {
        return Err(Error::LengthMismatch {
            expected: matrix.cols(),
            actual: input.len(),
        });
    }
    let x = pack(input);
    Ok(matrix
        .rows
        .iter()
        .map(|row| {
            let ones: u32 = row.iter().zip(&x).map(|(r, v)| (r & v).count_ones()).sum();
            ones & 1 == 1
        })
        .collect())
}

/// Columns `[k·n, (k+1)·n)` of the matrix, each packed as an `M`-bit word
/// vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSlice {
    index: usize,
    rows: usize,
    columns: Vec<Vec<u64>>,
}

impl SampleSlice {
    /// Which sample position within a hash this slice serves.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn entry(&self, i: usize, b: usize) -> bool {
        get_bit(&self.columns[b], i)
    }

    pub fn column(&self, b: usize) -> Vec<bool> {
        unpack(&self.columns[b], self.rows)
    }
}

pub fn sample_slice(matrix: &ToeplitzMatrix, k: usize) -> Result<SampleSlice> {
    let HashParams { n, s, .. } = matrix.params;
    if k >= s {
        return Err(Error::SliceOutOfRange { index: k, s });
    }
    let rows = matrix.rows();
    let columns = (0..n)
        .map(|b| {
            let j = k * n + b;
            let mut words = vec![0u64; words_for(rows)];
            for i in 0..rows {
                if matrix.entry(i, j) {
                    set_bit(&mut words, i);
                }
            }
            words
        })
        .collect();
    Ok(SampleSlice { index: k, rows, columns })
}

/// Running XOR accumulator for one stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamState {
    params: HashParams,
    accumulator: Vec<u64>,
    absorbed: usize,
}

impl StreamState {
    pub fn new(params: &HashParams) -> Self {
        Self {
            params: *params,
            accumulator: vec![0; words_for(params.output_bits())],
            absorbed: 0,
        }
    }

    pub fn samples_absorbed(&self) -> usize {
        self.absorbed
    }

    pub fn accumulator(&self) -> Vec<bool> {
        unpack(&self.accumulator, self.params.output_bits())
    }

    fn check(&self, slice: &SampleSlice) -> Result<()> {
        if self.absorbed >= self.params.s {
            return Err(Error::StreamFull { s: self.params.s });
        }
        if slice.rows != self.params.output_bits() || slice.width() != self.params.n {
            return Err(Error::InvalidParameter(format!(
                "slice is {}x{}, stream expects {}x{}",
                slice.rows,
                slice.width(),
                self.params.output_bits(),
                self.params.n
            )));
        }
        if slice.index != self.absorbed {
            return Err(Error::InvalidParameter(format!(
                "slice {} offered for sample position {}",
                slice.index, self.absorbed
            )));
        }
        Ok(())
    }

    /// XORs `slice · sample` into the accumulator. After the `s`-th sample
    /// the accumulated hash is returned and the state resets.
    pub fn absorb(&mut self, sample: &[bool], slice: &SampleSlice) -> Result<Option<Vec<bool>>> {
        if sample.len() != self.params.n {
            return Err(Error::LengthMismatch {
                expected: self.params.n,
                actual: sample.len(),
            });
        }
        self.check(slice)?;
        for (b, _) in sample.iter().enumerate().filter(|(_, &bit)| bit) {
            xor_into(&mut self.accumulator, &slice.columns[b]);
        }
        Ok(self.advance().map(|w| unpack(&w, self.params.output_bits())))
    }

    /// Word form of [`absorb`](Self::absorb): the low `n` bits of `sample`,
    /// most significant first. Emits the packed accumulator.
    pub fn absorb_word(&mut self, sample: u64, slice: &SampleSlice) -> Result<Option<Vec<u64>>> {
        self.check(slice)?;
        self.absorb_word_unchecked(sample, slice);
        Ok(self.advance())
    }

    fn absorb_word_unchecked(&mut self, sample: u64, slice: &SampleSlice) {
        let n = self.params.n;
        let mut bits = sample & low_mask(n);
        while bits != 0 {
            let pos = bits.trailing_zeros() as usize;
            // bit position `pos` from the LSB is column n-1-pos of the block
            xor_into(&mut self.accumulator, &slice.columns[n - 1 - pos]);
            bits &= bits - 1;
        }
    }

    fn advance(&mut self) -> Option<Vec<u64>> {
        self.absorbed += 1;
        if self.absorbed == self.params.s {
            let out = std::mem::replace(
                &mut self.accumulator,
                vec![0; words_for(self.params.output_bits())],
            );
            self.absorbed = 0;
            Some(out)
        } else {
            None
        }
    }
}

fn xor_into(acc: &mut [u64], col: &[u64]) {
    for (a, c) in acc.iter_mut().zip(col) {
        *a ^= c;
    }
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `n`-bit two's complement rendering of a code, most significant bit first.
pub fn code_to_bits(code: i64, n: usize) -> Vec<bool> {
    let word = (code as u64) & low_mask(n);
    (0..n).rev().map(|i| (word >> i) & 1 == 1).collect()
}

/// Streaming extractor with all `s` slices precomputed.
#[derive(Debug, Clone)]
pub struct StreamExtractor {
    slices: Vec<SampleSlice>,
    state: StreamState,
}

impl StreamExtractor {
    pub fn new(seed: &ToeplitzSeed, params: &HashParams) -> Result<Self> {
        let matrix = build_toeplitz(seed, params)?;
        Self::from_matrix(&matrix)
    }

    pub fn from_matrix(matrix: &ToeplitzMatrix) -> Result<Self> {
        let slices = (0..matrix.params.s)
            .map(|k| sample_slice(matrix, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            slices,
            state: StreamState::new(&matrix.params),
        })
    }

    pub fn params(&self) -> &HashParams {
        &self.state.params
    }

    /// Absorbs one code; appends the `M` hash bits to `out` when a group of
    /// `s` samples completes.
    pub fn push(&mut self, code: i64, out: &mut Vec<bool>) {
        let slice = &self.slices[self.state.absorbed];
        self.state.absorb_word_unchecked(code as u64, slice);
        if let Some(words) = self.state.advance() {
            let m = self.state.params.output_bits();
            out.extend((0..m).map(|i| get_bit(&words, i)));
        }
    }

    /// Samples held in the incomplete group.
    pub fn pending(&self) -> usize {
        self.state.absorbed
    }
}

/// Hashes a code sequence in arrival order. Trailing samples that do not
/// fill a group of `s` are dropped.
pub fn extract_stream(codes: &[i64], params: &HashParams, seed: &ToeplitzSeed) -> Result<Vec<bool>> {
    let mut ex = StreamExtractor::new(seed, params)?;
    let groups = codes.len() / params.s;
    let mut out = Vec::with_capacity(groups * params.output_bits());
    for &c in &codes[..groups * params.s] {
        ex.push(c, &mut out);
    }
    Ok(out)
}
