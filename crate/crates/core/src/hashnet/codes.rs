//! Binary codes over `{-1, +1}` and their packed form.
//!
//! Codes file (`CIMB`, little-endian): `"CIMB" | n u64 | L u32 |` then per
//! row `ceil(L/8)` bytes, bit `j` of the row stored at byte `j/8`, bit
//! `j%8`; a set bit means `+1`.

use std::io::{self, Write};

use ndarray::{Array2, ArrayView1};

use super::HashError;

pub const CODES_MAGIC: &[u8; 4] = b"CIMB";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodes {
    bits: Array2<i8>,
}

impl BinaryCodes {
    pub fn new(bits: Array2<i8>) -> Result<Self, HashError> {
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return Err(HashError::InvalidParameter("codes must be +1 or -1".into()));
        }
        Ok(Self { bits })
    }

    /// Elementwise sign with `sign(0) = +1`.
    pub fn from_signs(z: &Array2<f64>) -> Self {
        Self { bits: z.mapv(|v| if v < 0.0 { -1 } else { 1 }) }
    }

    pub fn len(&self) -> usize {
        self.bits.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.nrows() == 0
    }

    pub fn code_len(&self) -> usize {
        self.bits.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, i8> {
        self.bits.row(i)
    }

    pub fn bits(&self) -> &Array2<i8> {
        &self.bits
    }

    pub fn as_f64(&self) -> Array2<f64> {
        self.bits.mapv(f64::from)
    }

    pub fn negated(&self) -> Self {
        Self { bits: self.bits.mapv(|b| -b) }
    }

    pub fn concat(&self, other: &BinaryCodes) -> Result<Self, HashError> {
        let bits = ndarray::concatenate(ndarray::Axis(0), &[self.bits.view(), other.bits.view()])
            .map_err(|e| HashError::ShapeMismatch(e.to_string()))?;
        Ok(Self { bits })
    }

    pub fn pack(&self) -> PackedCodes {
        PackedCodes::from_codes(self)
    }
}

/// Codes packed 64 bits per word for popcount Hamming distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedCodes {
    words: Vec<u64>,
    words_per_code: usize,
    code_len: usize,
}

impl PackedCodes {
    pub fn from_codes(codes: &BinaryCodes) -> Self {
        let code_len = codes.code_len();
        let words_per_code = code_len.div_ceil(64).max(1);
        let mut words = vec![0u64; codes.len() * words_per_code];
        for (i, row) in codes.bits.outer_iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                if b > 0 {
                    words[i * words_per_code + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self { words, words_per_code, code_len }
    }

    pub fn len(&self) -> usize {
        self.words.len() / self.words_per_code
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn code_len(&self) -> usize {
        self.code_len
    }

    pub fn code(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_code..(i + 1) * self.words_per_code]
    }

    /// Hamming distance between code `i` of `self` and code `j` of `other`.
    #[inline]
    pub fn hamming(&self, i: usize, other: &PackedCodes, j: usize) -> u32 {
        self.code(i).iter().zip(other.code(j)).map(|(a, b)| (a ^ b).count_ones()).sum()
    }
}

pub fn write_codes<W: Write>(mut w: W, codes: &BinaryCodes) -> io::Result<()> {
    let l = codes.code_len();
    let row_bytes = l.div_ceil(8);
    let mut buf = Vec::with_capacity(16 + codes.len() * row_bytes);
    buf.extend_from_slice(CODES_MAGIC);
    buf.extend_from_slice(&(codes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(l as u32).to_le_bytes());
    for row in codes.bits.outer_iter() {
        let mut bytes = vec![0u8; row_bytes];
        for (j, &b) in row.iter().enumerate() {
            if b > 0 {
                bytes[j / 8] |= 1 << (j % 8);
            }
        }
        buf.extend_from_slice(&bytes);
    }
    w.write_all(&buf)
}

pub fn read_codes(bytes: &[u8]) -> Result<BinaryCodes, HashError> {
    let bad = |m: &str| HashError::MalformedCheckpoint(format!("codes file: {m}"));
    if bytes.len() < 16 || &bytes[..4] != CODES_MAGIC {
        return Err(bad("bad magic, expected CIMB"));
    }
    let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let l = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let row_bytes = l.div_ceil(8);
    if n.checked_mul(row_bytes).and_then(|b| b.checked_add(16)) != Some(bytes.len()) {
        return Err(bad("length does not match header"));
    }
    let body = &bytes[16..];
    let bits =
        Array2::from_shape_fn((n, l), |(i, j)| if body[i * row_bytes + j / 8] >> (j % 8) & 1 == 1 { 1 } else { -1 });
    Ok(BinaryCodes { bits })
}
