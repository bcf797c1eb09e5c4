//! Binarisation and context selection for every syntax element.

use super::range_coder::{BitContext, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::predictor::Mode;

const EG_PREFIX_CONTEXTS: usize = 16;
/// Truncated-unary cutoff for residual level magnitudes.
const LEVEL_TU_CUTOFF: u64 = 4;
const LEVEL_CLASSES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MvdComponent {
    X,
    Y,
    T,
}

impl MvdComponent {
    pub const ALL: [MvdComponent; 3] = [MvdComponent::X, MvdComponent::Y, MvdComponent::T];
}

#[derive(Clone, Copy, Debug, Default)]
struct SignedEgContexts {
    nonzero: BitContext,
    prefix: [BitContext; EG_PREFIX_CONTEXTS],
}

/// Every adaptive model of the coder.
#[derive(Clone, Debug, Default)]
pub struct Contexts {
    /// `[previous mode][unary bin]`
    mode: [[BitContext; 2]; 3],
    mvd: [SignedEgContexts; 3],
    mean: SignedEgContexts,
    /// `[previous magnitude class][nonzero flag, 4 truncated-unary bins]`
    level: [[BitContext; 1 + LEVEL_TU_CUTOFF as usize]; LEVEL_CLASSES],
    flag: BitContext,
}

fn level_class(prev_magnitude: u64) -> usize {
    (prev_magnitude as usize).min(LEVEL_CLASSES - 1)
}

#[derive(Clone, Debug, Default)]
pub struct SyntaxEncoder {
    rc: RangeEncoder,
    ctx: Contexts,
}

impl SyntaxEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counting-only copy sharing the current coder and model state.
    pub fn speculate(&self) -> Self {
        SyntaxEncoder {
            rc: self.rc.speculate(),
            ctx: self.ctx.clone(),
        }
    }

    pub fn bits(&self) -> f64 {
        self.rc.bits()
    }

    pub fn finish(self) -> Vec<u8> {
        self.rc.finish()
    }

    pub fn flag(&mut self, bit: bool) {
        self.rc.encode(bit, &mut self.ctx.flag);
    }

    pub fn mode(&mut self, mode: Mode, prev: Mode) {
        let ctx = &mut self.ctx.mode[prev.index()];
        self.rc.encode(mode != Mode::Mvm, &mut ctx[0]);
        if mode != Mode::Mvm {
            self.rc.encode(mode == Mode::Inter, &mut ctx[1]);
        }
    }

    pub fn mvd(&mut self, component: MvdComponent, value: i64) {
        let ctx = &mut self.ctx.mvd[component as usize];
        encode_signed_eg(&mut self.rc, ctx, value);
    }

    pub fn mean_diff(&mut self, value: i64) {
        encode_signed_eg(&mut self.rc, &mut self.ctx.mean, value);
    }

    /// Residual level; `prev_magnitude` is |previous level| in the segment
    /// (0 for the first).
    pub fn level(&mut self, value: i64, prev_magnitude: u64) {
        let ctx = &mut self.ctx.level[level_class(prev_magnitude)];
        self.rc.encode(value != 0, &mut ctx[0]);
        if value == 0 {
            return;
        }
        self.rc.encode_bypass(value < 0);
        let rest = value.unsigned_abs() - 1;
        for i in 0..LEVEL_TU_CUTOFF {
            let more = rest > i;
            self.rc.encode(more, &mut ctx[1 + i as usize]);
            if !more {
                return;
            }
        }
        // Escape: magnitudes past the truncated-unary prefix, including
        // anything beyond the 5-bit range, continue in bypass exp-Golomb.
        encode_eg_bypass(&mut self.rc, rest - LEVEL_TU_CUTOFF);
    }

    /// Unsigned exp-Golomb order 0, all bins bypass.
    pub fn uint(&mut self, value: u64) {
        encode_eg_bypass(&mut self.rc, value);
    }
}

fn eg_split(value: u64) -> (u32, u128) {
    let x = value as u128 + 1;
    let nbits = 128 - x.leading_zeros();
    (nbits - 1, x)
}

fn encode_eg_bypass(rc: &mut RangeEncoder, value: u64) {
    let (prefix, x) = eg_split(value);
    for _ in 0..prefix {
        rc.encode_bypass(true);
    }
    rc.encode_bypass(false);
    for i in (0..prefix).rev() {
        rc.encode_bypass((x >> i) & 1 == 1);
    }
}

fn encode_signed_eg(rc: &mut RangeEncoder, ctx: &mut SignedEgContexts, value: i64) {
    rc.encode(value != 0, &mut ctx.nonzero);
    if value == 0 {
        return;
    }
    rc.encode_bypass(value < 0);
    let (prefix, x) = eg_split(value.unsigned_abs() - 1);
    for i in 0..prefix as usize {
        rc.encode(true, &mut ctx.prefix[i.min(EG_PREFIX_CONTEXTS - 1)]);
    }
    rc.encode(false, &mut ctx.prefix[(prefix as usize).min(EG_PREFIX_CONTEXTS - 1)]);
    for i in (0..prefix).rev() {
        rc.encode_bypass((x >> i) & 1 == 1);
    }
}

pub struct SyntaxDecoder<'a> {
    rc: RangeDecoder<'a>,
    ctx: Contexts,
}

fn overlong(pos: usize) -> Error {
    Error::Decode {
        offset: pos,
        reason: "exp-Golomb prefix too long".into(),
    }
}

impl<'a> SyntaxDecoder<'a> {
    pub fn new(payload: &'a [u8]) -> Result<Self> {
        Ok(SyntaxDecoder {
            rc: RangeDecoder::new(payload)?,
            ctx: Contexts::default(),
        })
    }

    pub fn position(&self) -> usize {
        self.rc.position()
    }

    pub fn finish(self) -> Result<()> {
        self.rc.finish()
    }

    pub fn flag(&mut self) -> Result<bool> {
        self.rc.decode(&mut self.ctx.flag)
    }

    pub fn mode(&mut self, prev: Mode) -> Result<Mode> {
        let ctx = &mut self.ctx.mode[prev.index()];
        if !self.rc.decode(&mut ctx[0])? {
            return Ok(Mode::Mvm);
        }
        Ok(if self.rc.decode(&mut ctx[1])? {
            Mode::Inter
        } else {
            Mode::Fm
        })
    }

    pub fn mvd(&mut self, component: MvdComponent) -> Result<i64> {
        let ctx = &mut self.ctx.mvd[component as usize];
        decode_signed_eg(&mut self.rc, ctx)
    }

    pub fn mean_diff(&mut self) -> Result<i64> {
        decode_signed_eg(&mut self.rc, &mut self.ctx.mean)
    }

    pub fn level(&mut self, prev_magnitude: u64) -> Result<i64> {
        let ctx = &mut self.ctx.level[level_class(prev_magnitude)];
        if !self.rc.decode(&mut ctx[0])? {
            return Ok(0);
        }
        let negative = self.rc.decode_bypass()?;
        let mut rest = 0u64;
        while rest < LEVEL_TU_CUTOFF && self.rc.decode(&mut ctx[1 + rest as usize])? {
            rest += 1;
        }
        if rest == LEVEL_TU_CUTOFF {
            rest += decode_eg_bypass(&mut self.rc)?;
        }
        let magnitude = i64::try_from(rest + 1).map_err(|_| overlong(self.rc.position()))?;
        Ok(if negative { -magnitude } else { magnitude })
    }

    pub fn uint(&mut self) -> Result<u64> {
        decode_eg_bypass(&mut self.rc)
    }
}

fn eg_join(prefix: u32, suffix: u128, pos: usize) -> Result<u64> {
    let x = (1u128 << prefix) | suffix;
    u64::try_from(x - 1).map_err(|_| overlong(pos))
}

fn decode_eg_bypass(rc: &mut RangeDecoder<'_>) -> Result<u64> {
    let mut prefix = 0u32;
    while rc.decode_bypass()? {
        prefix += 1;
        if prefix > 64 {
            return Err(overlong(rc.position()));
        }
    }
    let mut suffix = 0u128;
    for _ in 0..prefix {
        suffix = (suffix << 1) | rc.decode_bypass()? as u128;
    }
    eg_join(prefix, suffix, rc.position())
}

fn decode_signed_eg(rc: &mut RangeDecoder<'_>, ctx: &mut SignedEgContexts) -> Result<i64> {
    if !rc.decode(&mut ctx.nonzero)? {
        return Ok(0);
    }
    let negative = rc.decode_bypass()?;
    let mut prefix = 0u32;
    while rc.decode(&mut ctx.prefix[(prefix as usize).min(EG_PREFIX_CONTEXTS - 1)])? {
        prefix += 1;
        if prefix > 63 {
            return Err(overlong(rc.position()));
        }
    }
    let mut suffix = 0u128;
    for _ in 0..prefix {
        suffix = (suffix << 1) | rc.decode_bypass()? as u128;
    }
    let magnitude = eg_join(prefix, suffix, rc.position())? + 1;
    let magnitude = i64::try_from(magnitude).map_err(|_| overlong(rc.position()))?;
    Ok(if negative { -magnitude } else { magnitude })
}
