//! LSB-first bit packing used by the compact response encoding.

use crate::error::{Error, Result};

#[derive(Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn write(&mut self, value: u64, bits: u32) {
        debug_assert!(bits <= 32 && (bits == 64 || value >> bits == 0));
        if bits == 0 {
            return;
        }
        self.acc |= value << self.filled;
        self.filled += bits;
        while self.filled >= 8 {
            self.bytes.push(self.acc as u8);
            self.acc >>= 8;
            self.filled -= 8;
        }
    }

    /// Flushes a partial byte (zero padded) and returns the bytes.
    pub(crate) fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push(self.acc as u8);
        }
        self.bytes
    }
}

pub(crate) struct BitReader<'a> {
    bytes: &'a [u8],
    bit_pos: usize,
}

impl<'a> BitReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, bit_pos: 0 }
    }

    pub(crate) fn read(&mut self, bits: u32) -> Result<u64> {
        let mut out = 0u64;
        for i in 0..bits {
            let byte = self
                .bytes
                .get(self.bit_pos / 8)
                .ok_or_else(|| Error::Decode("bit stream truncated".into()))?;
            out |= (((byte >> (self.bit_pos % 8)) & 1) as u64) << i;
            self.bit_pos += 1;
        }
        Ok(out)
    }

    /// Requires the unread remainder of the last byte to be zero padding.
    pub(crate) fn finish(self) -> Result<()> {
        let used_bytes = self.bit_pos.div_ceil(8);
        if used_bytes != self.bytes.len() {
            return Err(Error::Decode("bit stream has trailing bytes".into()));
        }
        if self.bit_pos % 8 != 0 {
            let last = self.bytes[used_bytes - 1];
            if last >> (self.bit_pos % 8) != 0 {
                return Err(Error::Decode("nonzero padding bits".into()));
            }
        }
        Ok(())
    }
}

/// Number of bytes holding `count` fields of `bits` bits, `None` on overflow.
pub(crate) fn packed_len(count: usize, bits: u32) -> Option<usize> {
    count.checked_mul(bits as usize).map(|b| b.div_ceil(8))
}
