//! Adaptive context-based entropy coding.
//!
//! Syntax elements are binarised (unary mode flags, signed exp-Golomb for
//! vector differences and mean differences, truncated unary plus
//! exp-Golomb escape for residual levels) and the bins are coded with a
//! binary range coder whose context models adapt by frequency counting.

pub mod range_coder;
pub mod syntax;

pub use range_coder::{BitContext, RangeDecoder, RangeEncoder};
pub use syntax::{Contexts, MvdComponent, SyntaxDecoder, SyntaxEncoder};

use crate::error::Result;
use crate::predictor::Mode;

/// A typed syntax element together with the state its context depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Flag(bool),
    Mode { mode: Mode, prev: Mode },
    Mvd { component: MvdComponent, value: i64 },
    MeanDiff(i64),
    Level { value: i64, prev_magnitude: u64 },
    Uint(u64),
}

/// What the decoder expects next; mirrors [`Symbol`] without the value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Flag,
    Mode { prev: Mode },
    Mvd(MvdComponent),
    MeanDiff,
    Level { prev_magnitude: u64 },
    Uint,
}

impl Symbol {
    pub fn kind(&self) -> SymbolKind {
        match *self {
            Symbol::Flag(_) => SymbolKind::Flag,
            Symbol::Mode { prev, .. } => SymbolKind::Mode { prev },
            Symbol::Mvd { component, .. } => SymbolKind::Mvd(component),
            Symbol::MeanDiff(_) => SymbolKind::MeanDiff,
            Symbol::Level { prev_magnitude, .. } => SymbolKind::Level { prev_magnitude },
            Symbol::Uint(_) => SymbolKind::Uint,
        }
    }
}

impl SyntaxEncoder {
    pub fn symbol(&mut self, s: &Symbol) {
        match *s {
            Symbol::Flag(b) => self.flag(b),
            Symbol::Mode { mode, prev } => self.mode(mode, prev),
            Symbol::Mvd { component, value } => self.mvd(component, value),
            Symbol::MeanDiff(v) => self.mean_diff(v),
            Symbol::Level {
                value,
                prev_magnitude,
            } => self.level(value, prev_magnitude),
            Symbol::Uint(v) => self.uint(v),
        }
    }
}

impl SyntaxDecoder<'_> {
    pub fn symbol(&mut self, kind: SymbolKind) -> Result<Symbol> {
        Ok(match kind {
            SymbolKind::Flag => Symbol::Flag(self.flag()?),
            SymbolKind::Mode { prev } => Symbol::Mode {
                mode: self.mode(prev)?,
                prev,
            },
            SymbolKind::Mvd(component) => Symbol::Mvd {
                component,
                value: self.mvd(component)?,
            },
            SymbolKind::MeanDiff => Symbol::MeanDiff(self.mean_diff()?),
            SymbolKind::Level { prev_magnitude } => Symbol::Level {
                value: self.level(prev_magnitude)?,
                prev_magnitude,
            },
            SymbolKind::Uint => Symbol::Uint(self.uint()?),
        })
    }
}

pub fn encode_stream(symbols: &[Symbol]) -> Vec<u8> {
    let mut enc = SyntaxEncoder::new();
    for s in symbols {
        enc.symbol(s);
    }
    enc.finish()
}

pub fn decode_stream(payload: &[u8], expected: &[SymbolKind]) -> Result<Vec<Symbol>> {
    let mut dec = SyntaxDecoder::new(payload)?;
    let out = expected
        .iter()
        .map(|&k| dec.symbol(k))
        .collect::<Result<Vec<_>>>()?;
    dec.finish()?;
    Ok(out)
}
