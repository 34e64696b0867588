//! Bit-exact codeword transport: big-endian fields `k | l | tag-1` with
//! widths from [`SchemeParams::layout`], padded with zero bits to the next
//! byte. The tag is stored zero-based so `phi` values in `[1, l]` use exactly
//! the nominal field width.

use num_bigint::BigUint;
use num_traits::Zero;

use super::{Codeword, SchemeParams};
use crate::error::{Error, Result};

struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn new(total_bits: usize) -> Self {
        BitWriter {
            bytes: vec![0u8; total_bits.div_ceil(8)],
            used: 0,
        }
    }

    fn push_field(&mut self, value: &BigUint, width: usize) {
        for i in (0..width).rev() {
            if value.bit(i as u64) {
                self.bytes[self.used / 8] |= 1 << (7 - self.used % 8);
            }
            self.used += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn read_field(&mut self, width: usize) -> BigUint {
        let mut out = BigUint::zero();
        for _ in 0..width {
            out <<= 1u32;
            if self.bytes[self.pos / 8] >> (7 - self.pos % 8) & 1 == 1 {
                out += 1u32;
            }
            self.pos += 1;
        }
        out
    }
}

impl Codeword {
    /// Serializes to `ceil(n/8)` bytes, `n` bits of payload MSB-first.
    pub fn to_bytes(&self, params: &SchemeParams) -> Result<Vec<u8>> {
        let layout = params.layout();
        let fits = |v: &BigUint, w: usize| v.bits() as usize <= w;
        if !fits(&self.key_k, layout.k_width) || !fits(&self.key_l, layout.l_width) {
            return Err(Error::Construction(format!(
                "key does not fit its field: k={} in {} bits, l={} in {} bits",
                self.key_k, layout.k_width, self.key_l, layout.l_width
            )));
        }
        let tag_based = &self.tag - 1u32;
        if !fits(&tag_based, layout.tag_width) {
            return Err(Error::Construction(format!(
                "tag {} does not fit {} bits",
                self.tag, layout.tag_width
            )));
        }
        let mut w = BitWriter::new(layout.total_bits());
        w.push_field(&self.key_k, layout.k_width);
        w.push_field(&self.key_l, layout.l_width);
        w.push_field(&tag_based, layout.tag_width);
        Ok(w.bytes)
    }

    /// Parses a codeword; rejects wrong byte counts, nonzero padding, keys
    /// below 2, and tags outside `[1, l]`. Non-prime key values are accepted.
    pub fn from_bytes(bytes: &[u8], params: &SchemeParams) -> Result<Codeword> {
        let layout = params.layout();
        let total_bits = layout.total_bits();
        let expected_bytes = layout.total_bytes();
        if bytes.len() != expected_bytes {
            return Err(Error::WidthMismatch {
                expected: total_bits,
                expected_bytes,
                got: bytes.len(),
            });
        }
        let mut r = BitReader { bytes, pos: 0 };
        let key_k = r.read_field(layout.k_width);
        let key_l = r.read_field(layout.l_width);
        let tag_based = r.read_field(layout.tag_width);
        for pad in total_bits..expected_bytes * 8 {
            if bytes[pad / 8] >> (7 - pad % 8) & 1 == 1 {
                return Err(Error::MalformedCodeword("nonzero padding bits".into()));
            }
        }
        if tag_based >= key_l {
            return Err(Error::MalformedCodeword(format!(
                "stored tag {tag_based} is not below l={key_l}"
            )));
        }
        Codeword::new(key_k, key_l, tag_based + 1u32)
    }

    pub fn to_hex(&self, params: &SchemeParams) -> Result<String> {
        Ok(bytes_to_hex(&self.to_bytes(params)?))
    }

    pub fn from_hex(hex: &str, params: &SchemeParams) -> Result<Codeword> {
        Codeword::from_bytes(&hex_to_bytes(hex)?, params)
    }
}

pub(crate) fn bytes_to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Decodes hex transport text; requires an even digit count.
pub fn hex_to_bytes(hex: &str) -> Result<Vec<u8>> {
    let hex = hex.trim();
    if hex.len() % 2 != 0 {
        return Err(Error::Parse("hex text with odd digit count".into()));
    }
    (0..hex.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| Error::Parse(format!("invalid hex byte {:?}", &hex[i..i + 2])))
        })
        .collect()
}
