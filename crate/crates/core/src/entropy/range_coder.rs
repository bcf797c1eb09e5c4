//! Binary range coder with a 32-bit range and carry propagation through a
//! cached byte plus a run of pending 0xFF bytes.

use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

/// Halve both counts once their sum reaches this.
const COUNT_LIMIT: u32 = 1 << 16;
const COUNT_STEP: u32 = 16;

/// Trailer appended after the flushed coder state.
pub const SENTINEL: [u8; 2] = [0x5A, 0xA5];

/// Adaptive binary model holding frequency counts of zeros and ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitContext {
    zeros: u32,
    ones: u32,
}

impl Default for BitContext {
    fn default() -> Self {
        BitContext { zeros: 1, ones: 1 }
    }
}

impl BitContext {
    #[inline]
    fn total(&self) -> u32 {
        self.zeros + self.ones
    }

    /// Probability of a zero bit.
    pub fn p_zero(&self) -> f64 {
        self.zeros as f64 / self.total() as f64
    }

    #[inline]
    pub fn update(&mut self, bit: bool) {
        if bit {
            self.ones += COUNT_STEP;
        } else {
            self.zeros += COUNT_STEP;
        }
        if self.total() >= COUNT_LIMIT {
            self.zeros = self.zeros.div_ceil(2);
            self.ones = self.ones.div_ceil(2);
        }
    }
}

#[derive(Clone, Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    emitted: u64,
    out: Vec<u8>,
    record: bool,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            emitted: 0,
            out: Vec::new(),
            record: true,
        }
    }

    /// Copy of the coder state that counts output without storing it, for
    /// measuring the cost of a tentative symbol sequence.
    pub fn speculate(&self) -> Self {
        RangeEncoder {
            out: Vec::new(),
            record: false,
            ..*self
        }
    }

    /// Bits produced so far, including the information held in the coder
    /// state. Differences between two calls give the exact cost of the
    /// symbols coded in between.
    pub fn bits(&self) -> f64 {
        (self.emitted + self.cache_size) as f64 * 8.0 + 32.0 - (self.range as f64).log2()
    }

    #[inline]
    fn emit(&mut self, byte: u8) {
        self.emitted += 1;
        if self.record {
            self.out.push(byte);
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.emit(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    #[inline]
    fn normalize(&mut self) {
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    #[inline]
    pub fn encode(&mut self, bit: bool, ctx: &mut BitContext) {
        let bound = (self.range / ctx.total()) * ctx.zeros;
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        ctx.update(bit);
        self.normalize();
    }

    /// Equiprobable bit with no model.
    #[inline]
    pub fn encode_bypass(&mut self, bit: bool) {
        self.range >>= 1;
        if bit {
            self.low += self.range as u64;
        }
        self.normalize();
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out.extend_from_slice(&SENTINEL);
        self.out
    }
}

#[derive(Clone, Debug)]
pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        let mut dec = RangeDecoder {
            data,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        if dec.next_byte()? != 0 {
            return Err(Error::Decode {
                offset: 0,
                reason: "coder stream must start with a zero byte".into(),
            });
        }
        for _ in 0..4 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.data.get(self.pos).ok_or_else(|| Error::Decode {
            offset: self.pos,
            reason: "unexpected end of payload".into(),
        })?;
        self.pos += 1;
        Ok(b)
    }

    #[inline]
    fn normalize(&mut self) -> Result<()> {
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(())
    }

    #[inline]
    pub fn decode(&mut self, ctx: &mut BitContext) -> Result<bool> {
        let bound = (self.range / ctx.total()) * ctx.zeros;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        ctx.update(bit);
        self.normalize()?;
        Ok(bit)
    }

    #[inline]
    pub fn decode_bypass(&mut self) -> Result<bool> {
        self.range >>= 1;
        let bit = self.code >= self.range;
        if bit {
            self.code -= self.range;
        }
        self.normalize()?;
        Ok(bit)
    }

    /// Checks that exactly the trailer remains.
    pub fn finish(self) -> Result<()> {
        let rest = &self.data[self.pos..];
        if rest != SENTINEL {
            return Err(Error::Decode {
                offset: self.pos,
                reason: format!("expected 2-byte trailer, found {} bytes", rest.len()),
            });
        }
        Ok(())
    }
}
