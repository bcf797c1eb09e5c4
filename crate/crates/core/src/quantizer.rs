//! ISI-dependent residual quantisation.
//!
//! The base step at a predicted interval `t` is `t^2 / (2 phi + t)`: the
//! largest interval error that keeps the rounded intensity `phi / t`
//! unchanged. It is scaled by QP and never drops below one tick.

use crate::error::{Error, Result};

pub const QP_MIN: u8 = 1;
pub const QP_MAX: u8 = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantConfig {
    pub phi: f64,
    pub qp: u8,
    pub lossless: bool,
}

impl QuantConfig {
    pub fn new(phi: f64, qp: u8, lossless: bool) -> Result<Self> {
        let cfg = QuantConfig { phi, qp, lossless };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(QP_MIN..=QP_MAX).contains(&self.qp) {
            return Err(Error::Config(format!("QP {} outside [{QP_MIN}, {QP_MAX}]", self.qp)));
        }
        if !(self.phi.is_finite() && self.phi > 0.0) {
            return Err(Error::Config(format!("threshold {}", self.phi)));
        }
        Ok(())
    }

    /// Step actually applied to a residual predicted from `t_pred`.
    #[inline]
    pub fn step(&self, t_pred: u32) -> f64 {
        (self.qp as f64 * base_step(t_pred as f64, self.phi)).max(1.0)
    }
}

#[inline]
fn base_step(t: f64, phi: f64) -> f64 {
    t * t / (2.0 * phi + t)
}

pub fn q_step(t: f64, phi: f64) -> Result<f64> {
    if t.is_nan() || t < 1.0 {
        return Err(Error::Domain(format!("ISI {t} < 1 tick")));
    }
    Ok(base_step(t, phi))
}

#[inline]
pub fn quantize(residual: i64, t_pred: u32, cfg: &QuantConfig) -> i64 {
    if cfg.lossless {
        return residual;
    }
    (residual as f64 / cfg.step(t_pred)).round() as i64
}

/// Residual implied by `level`, in whole ticks.
#[inline]
pub fn dequantize(level: i64, t_pred: u32, cfg: &QuantConfig) -> i64 {
    if cfg.lossless {
        return level;
    }
    (level as f64 * cfg.step(t_pred)).round() as i64
}

/// Reconstructed interval, floored at one tick.
#[inline]
pub fn reconstruct(level: i64, t_pred: u32, cfg: &QuantConfig) -> u32 {
    let t = t_pred as i64 + dequantize(level, t_pred, cfg);
    t.clamp(1, u32::MAX as i64) as u32
}
