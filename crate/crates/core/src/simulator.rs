//! Integrate-and-fire spike camera simulator.
//!
//! Intensities are in accumulator units per tick: a pixel lit at constant
//! intensity `I` crosses the threshold `phi` every `phi / I` ticks.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::spike_model::SpikeStream;

pub trait Scene: Sync {
    fn width(&self) -> u16;
    fn height(&self) -> u16;
    /// Non-negative intensity of pixel `(x, y)` during `tick`.
    fn intensity(&self, x: u32, y: u32, tick: u64) -> f64;
}

fn check_dims(width: u16, height: u16) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions(format!("{width}x{height} scene")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaticScene {
    width: u16,
    height: u16,
    values: Vec<f64>,
}

impl StaticScene {
    /// Raster-order intensity map.
    pub fn new(width: u16, height: u16, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} intensities for a {width}x{height} scene",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("intensity {v} is not a finite non-negative value")));
        }
        Ok(StaticScene {
            width,
            height,
            values,
        })
    }

    pub fn uniform(width: u16, height: u16, intensity: f64) -> Result<Self> {
        Self::new(width, height, vec![intensity; width as usize * height as usize])
    }

    /// Smooth texture whose intensities are all `phi / k` for integer `k` in
    /// `[min_isi, max_isi]`, so a deterministic simulation fires at exactly
    /// constant intervals.
    pub fn texture(width: u16, height: u16, phi: f64, min_isi: u32, max_isi: u32) -> Result<Self> {
        check_dims(width, height)?;
        if min_isi == 0 || max_isi < min_isi {
            return Err(Error::Config(format!("ISI range [{min_isi}, {max_isi}]")));
        }
        let span = (max_isi - min_isi) as f64;
        let (w, h) = (width as f64, height as f64);
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                let u = (x as f64 + 0.5) / w;
                let v = (y as f64 + 0.5) / h;
                // Blend of a diagonal ramp and a low-frequency ripple, in [0, 1].
                let ramp = 0.5 * (u + v);
                let ripple = 0.5 + 0.5 * (TAU * u).sin() * (TAU * 0.5 * v).cos();
                let s = 0.6 * ramp + 0.4 * ripple;
                let k = min_isi + (s * span).round() as u32;
                values.push(phi / k as f64);
            }
        }
        Self::new(width, height, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Scene for StaticScene {
    fn width(&self) -> u16 {
        self.width
    }

    fn height(&self) -> u16 {
        self.height
    }

    fn intensity(&self, x: u32, y: u32, _tick: u64) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

pub fn scene_static(width: u16, height: u16, intensity_map: Vec<f64>) -> Result<StaticScene> {
    StaticScene::new(width, height, intensity_map)
}

/// Angular pattern painted on a spinning disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscPattern {
    /// Number of bright/dark sector pairs.
    pub sectors: u32,
    pub bright: f64,
    pub dark: f64,
    /// Intensity outside the disc.
    pub background: f64,
}

impl Default for DiscPattern {
    fn default() -> Self {
        DiscPattern {
            sectors: 3,
            bright: 255.0 / 10.0,
            dark: 255.0 / 40.0,
            background: 255.0 / 25.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RotatingDisc {
    width: u16,
    height: u16,
    period_ticks: f64,
    pattern: DiscPattern,
    // per pixel: Some(angle in revolutions) inside the disc
    polar: Vec<Option<f64>>,
}

impl RotatingDisc {
    pub fn period_ticks(&self) -> f64 {
        self.period_ticks
    }
}

/// Disc centred in the frame with radius `0.45 * min(w, h)`, spinning at `rpm`
/// revolutions per minute on a `sample_rate` Hz clock.
pub fn scene_rotating_disc(
    width: u16,
    height: u16,
    rpm: f64,
    sample_rate: u32,
    pattern: DiscPattern,
) -> Result<RotatingDisc> {
    check_dims(width, height)?;
    if !(rpm.is_finite() && rpm >= 0.0) || sample_rate == 0 {
        return Err(Error::Config(format!("rpm {rpm}, sample rate {sample_rate}")));
    }
    let period_ticks = if rpm == 0.0 {
        f64::INFINITY
    } else {
        sample_rate as f64 * 60.0 / rpm
    };
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;
    let radius = 0.45 * width.min(height) as f64;
    let mut polar = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            polar.push(
                (dx.hypot(dy) <= radius).then(|| (dy.atan2(dx) / TAU).rem_euclid(1.0)),
            );
        }
    }
    Ok(RotatingDisc {
        width,
        height,
        period_ticks,
        pattern,
        polar,
    })
}

impl Scene for RotatingDisc {
    fn width(&self) -> u16 {
        self.width
    }

    fn height(&self) -> u16 {
        self.height
    }

    fn intensity(&self, x: u32, y: u32, tick: u64) -> f64 {
        match self.polar[y as usize * self.width as usize + x as usize] {
            None => self.pattern.background,
            Some(angle) => {
                let phase = if self.period_ticks.is_finite() {
                    (tick as f64 / self.period_ticks).fract()
                } else {
                    0.0
                };
                let a = (angle + phase).fract();
                if ((a * 2.0 * self.pattern.sectors as f64) as u64).is_multiple_of(2) {
                    self.pattern.bright
                } else {
                    self.pattern.dark
                }
            }
        }
    }
}

/// A bright vertical bar sliding horizontally over a textured backdrop,
/// wrapping around the frame edge.
#[derive(Clone, Debug)]
pub struct MovingBar {
    backdrop: StaticScene,
    /// Pixels per tick.
    speed: f64,
    bar_width: f64,
    bar: f64,
}

pub fn scene_moving_bar(
    width: u16,
    height: u16,
    speed: f64,
    phi: f64,
) -> Result<MovingBar> {
    if !speed.is_finite() {
        return Err(Error::Config(format!("bar speed {speed}")));
    }
    Ok(MovingBar {
        backdrop: StaticScene::texture(width, height, phi, 20, 48)?,
        speed,
        bar_width: (width as f64 / 8.0).max(1.0),
        bar: phi / 6.0,
    })
}

impl Scene for MovingBar {
    fn width(&self) -> u16 {
        self.backdrop.width
    }

    fn height(&self) -> u16 {
        self.backdrop.height
    }

    fn intensity(&self, x: u32, y: u32, tick: u64) -> f64 {
        let w = self.backdrop.width as f64;
        let left = (self.speed * tick as f64).rem_euclid(w);
        let rel = (x as f64 + 0.5 - left).rem_euclid(w);
        if rel < self.bar_width {
            self.bar
        } else {
            self.backdrop.intensity(x, y, tick)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMode {
    /// Accumulate the intensity exactly.
    Deterministic,
    /// Count Poisson photon arrivals; `photons_per_spike` arrivals fire a spike.
    Poisson { photons_per_spike: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResetMode {
    /// Subtract the threshold and keep the excess charge.
    Carry,
    /// Empty the accumulator after each spike.
    Drain,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub threshold: f64,
    pub mode: SimMode,
    pub reset: ResetMode,
    pub seed: u64,
    pub sample_rate: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            threshold: 255.0,
            mode: SimMode::Deterministic,
            reset: ResetMode::Carry,
            seed: 0,
            sample_rate: crate::spike_model::DEFAULT_SAMPLE_RATE,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::Config(format!("threshold {}", self.threshold)));
        }
        if let SimMode::Poisson { photons_per_spike: 0 } = self.mode {
            return Err(Error::Config("photons_per_spike must be >= 1".into()));
        }
        Ok(())
    }
}

// Relative slack when comparing the accumulator to the threshold, so that
// intensities like phi/7 still fire every 7 ticks despite rounding.
const FIRE_EPS: f64 = 1e-9;

pub fn simulate(scene: &dyn Scene, cfg: &SimConfig, num_ticks: u64) -> Result<SpikeStream> {
    cfg.validate()?;
    let (width, height) = (scene.width(), scene.height());
    let mut stream = SpikeStream::new(width, height, cfg.sample_rate, num_ticks)?;
    let phi = cfg.threshold;
    for y in 0..height as u32 {
        for x in 0..width as u32 {
            let index = y as usize * width as usize + x as usize;
            match cfg.mode {
                SimMode::Deterministic => {
                    let mut acc = 0.0f64;
                    for tick in 0..num_ticks {
                        acc += scene.intensity(x, y, tick);
                        if acc >= phi * (1.0 - FIRE_EPS) {
                            stream.set(index, tick, true);
                            acc = match cfg.reset {
                                ResetMode::Carry => (acc - phi).clamp(0.0, phi),
                                ResetMode::Drain => 0.0,
                            };
                        }
                    }
                }
                SimMode::Poisson { photons_per_spike } => {
                    // One generator stream per pixel keeps output independent
                    // of iteration order.
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(index as u64);
                    let theta = photons_per_spike as u64;
                    let mut photons = 0u64;
                    let mut cached: Option<(f64, Poisson<f64>)> = None;
                    for tick in 0..num_ticks {
                        let intensity = scene.intensity(x, y, tick);
                        let rate = intensity * photons_per_spike as f64 / phi;
                        if rate > 0.0 {
                            let dist = match cached {
                                Some((r, d)) if r == rate => d,
                                _ => {
                                    let d = Poisson::new(rate).map_err(|e| {
                                        Error::Domain(format!("photon rate {rate}: {e}"))
                                    })?;
                                    cached = Some((rate, d));
                                    d
                                }
                            };
                            photons += dist.sample(&mut rng) as u64;
                        }
                        if photons >= theta {
                            stream.set(index, tick, true);
                            photons = match cfg.reset {
                                ResetMode::Carry => (photons - theta).min(theta),
                                ResetMode::Drain => 0,
                            };
                        }
                    }
                }
            }
        }
    }
    Ok(stream)
}
