//! Intensity reconstruction and distortion measures.

use crate::error::{Error, Result};
use crate::spike_model::{IsiSequence, SpikeStream};

/// Mean intensity over an interval of `t` ticks: `phi / t`.
pub fn mean_intensity(t: f64, phi: f64) -> Result<f64> {
    if t.is_nan() || t < 1.0 {
        return Err(Error::Domain(format!("ISI {t} < 1 tick")));
    }
    Ok(phi / t)
}

/// Change in mean intensity when an interval of `t` ticks grows by `dt`.
pub fn intensity_delta(t: f64, dt: f64, phi: f64) -> Result<f64> {
    if t.is_nan() || t < 1.0 || (t + dt).is_nan() || t + dt <= 0.0 {
        return Err(Error::Domain(format!("t = {t}, dt = {dt}")));
    }
    Ok(phi * dt / (t * t + t * dt))
}

/// Intensity-based distance between two spike trains together with the
/// number of paired intervals it was computed over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainDistance {
    pub value: f64,
    pub pairs: usize,
}

/// Root-mean-square difference of reciprocal intervals over the first
/// `min(a.len(), b.len())` pairs.
pub fn spike_train_distance(a: &[u32], b: &[u32]) -> Result<TrainDistance> {
    let k = a.len().min(b.len());
    if k == 0 {
        return Err(Error::UndefinedDistance);
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = 1.0 / x as f64 - 1.0 / y as f64;
            d * d
        })
        .sum();
    Ok(TrainDistance {
        value: (sum / k as f64).sqrt(),
        pairs: k,
    })
}

pub fn isi_distance(a: &IsiSequence, b: &IsiSequence) -> Result<TrainDistance> {
    spike_train_distance(&a.intervals, &b.intervals)
}

/// Mean per-pixel distance between two sets of ISI sequences. Pixels where
/// either side has no intervals are skipped.
pub fn mean_stream_distance(a: &[IsiSequence], b: &[IsiSequence]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} pixels", a.len(), b.len())));
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for (x, y) in a.iter().zip(b) {
        if let Ok(d) = isi_distance(x, y) {
            total += d.value;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntensityImage {
    pub width: u16,
    pub height: u16,
    pub values: Vec<f64>,
}

impl IntensityImage {
    pub fn new(width: u16, height: u16, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {width}x{height}",
                values.len()
            )));
        }
        Ok(IntensityImage {
            width,
            height,
            values,
        })
    }

    /// 8-bit gray levels, `v * 255 / phi` rounded and saturated.
    pub fn to_gray(&self, phi: f64) -> Vec<u8> {
        self.values
            .iter()
            .map(|v| (v * 255.0 / phi).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self, phi: f64) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_gray(phi));
        out
    }
}

/// Per-pixel spike times, indexed for repeated image reconstruction.
pub struct Reconstructor {
    width: u16,
    height: u16,
    num_ticks: u64,
    spikes: Vec<Vec<u64>>,
}

impl Reconstructor {
    pub fn from_stream(stream: &SpikeStream) -> Self {
        Reconstructor {
            width: stream.width(),
            height: stream.height(),
            num_ticks: stream.num_ticks(),
            spikes: stream.spike_ticks(),
        }
    }

    /// Spike times are taken from the ISI sequences as given (spikes past the
    /// end of the stream are kept but never cover an in-range tick).
    pub fn from_isis(width: u16, height: u16, num_ticks: u64, isis: &[IsiSequence]) -> Result<Self> {
        if isis.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} sequences for {width}x{height}",
                isis.len()
            )));
        }
        Ok(Reconstructor {
            width,
            height,
            num_ticks,
            spikes: isis.iter().map(|s| s.spike_ticks().collect()).collect(),
        })
    }

    pub fn num_ticks(&self) -> u64 {
        self.num_ticks
    }

    /// Intensity `phi / isi` of the interval covering `tick` at each pixel;
    /// pixels outside any interval are 0.
    pub fn image_at(&self, tick: u64, phi: f64) -> Result<IntensityImage> {
        if tick >= self.num_ticks {
            return Err(Error::Domain(format!(
                "tick {tick} outside a {}-tick stream",
                self.num_ticks
            )));
        }
        let values = self
            .spikes
            .iter()
            .map(|ticks| {
                // Index of the first spike strictly after `tick`.
                let next = ticks.partition_point(|&t| t <= tick);
                if next == 0 || next == ticks.len() {
                    0.0
                } else {
                    phi / (ticks[next] - ticks[next - 1]) as f64
                }
            })
            .collect();
        IntensityImage::new(self.width, self.height, values)
    }

    /// `count` ticks spread evenly over the stream.
    pub fn sample_ticks(&self, count: usize) -> Vec<u64> {
        if self.num_ticks == 0 {
            return Vec::new();
        }
        (0..count)
            .map(|i| ((2 * i as u64 + 1) * self.num_ticks) / (2 * count as u64))
            .collect()
    }
}

pub fn reconstruct_image(stream: &SpikeStream, at_tick: u64, phi: f64) -> Result<IntensityImage> {
    Reconstructor::from_stream(stream).image_at(at_tick, phi)
}

fn check_same_dims(a: &IntensityImage, b: &IntensityImage) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// PSNR in dB against `peak`. Identical images give `f64::INFINITY`.
pub fn psnr(a: &IntensityImage, b: &IntensityImage, peak: f64) -> Result<f64> {
    check_same_dims(a, b)?;
    let mse = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        / a.values.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 8;

/// Mean SSIM over sliding 8x8 windows after mapping `[0, peak]` to
/// `[0, 255]`, with the usual stabilisers `(0.01 L)^2` and `(0.03 L)^2`.
/// Images smaller than a window are treated as one window. The result is
/// clamped to `[0, 1]`.
pub fn ssim(a: &IntensityImage, b: &IntensityImage, peak: f64) -> Result<f64> {
    check_same_dims(a, b)?;
    let scale = 255.0 / peak;
    let w = a.width as usize;
    let h = a.height as usize;
    let wx = SSIM_WINDOW.min(w);
    let wy = SSIM_WINDOW.min(h);
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let n = (wx * wy) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for y0 in 0..=h - wy {
        for x0 in 0..=w - wx {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + wy {
                for x in x0..x0 + wx {
                    let p = a.values[y * w + x] * scale;
                    let q = b.values[y * w + x] * scale;
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = (saa / n - ma * ma).max(0.0);
            let vb = (sbb / n - mb * mb).max(0.0);
            let cov = sab / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1;
        }
    }
    Ok((total / windows as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_intensity_cases() {
        assert_eq!(mean_intensity(255.0, 255.0).unwrap(), 1.0);
        assert_eq!(mean_intensity(5.0, 255.0).unwrap(), 51.0);
        assert_eq!(mean_intensity(1.0, 255.0).unwrap(), 255.0);
        assert!(mean_intensity(0.0, 255.0).is_err());
    }

    #[test]
    fn intensity_delta_cases() {
        let phi = 255.0;
        assert_eq!(intensity_delta(1.0, 1.0, phi).unwrap(), phi / 2.0);
        assert!((intensity_delta(100.0, 1.0, phi).unwrap() - phi / 10100.0).abs() < 1e-15);
        assert_eq!(intensity_delta(17.0, 0.0, phi).unwrap(), 0.0);
        assert!(intensity_delta(3.0, -3.0, phi).is_err());
        assert!(intensity_delta(0.5, 1.0, phi).is_err());
    }

    #[test]
    fn distance_cases() {
        assert_eq!(spike_train_distance(&[3, 5, 9], &[3, 5, 9]).unwrap().value, 0.0);
        let d = spike_train_distance(&[2], &[4]).unwrap();
        assert_eq!(d.value, 0.25);
        assert_eq!(d.pairs, 1);
        let d = spike_train_distance(&[2, 2, 2], &[4]).unwrap();
        assert_eq!((d.value, d.pairs), (0.25, 1));
        assert!(matches!(spike_train_distance(&[], &[1]), Err(Error::UndefinedDistance)));
    }

    #[test]
    fn reconstruct_covering_interval() {
        let mut s = SpikeStream::new(2, 1, 40_000, 12).unwrap();
        for t in [3, 7] {
            s.set(0, t, true);
        }
        for tick in 3..7 {
            let img = reconstruct_image(&s, tick, 255.0).unwrap();
            assert_eq!(img.values, vec![255.0 / 4.0, 0.0]);
        }
        for tick in [0, 2, 7, 11] {
            let img = reconstruct_image(&s, tick, 255.0).unwrap();
            assert_eq!(img.values, vec![0.0, 0.0]);
        }
        assert!(reconstruct_image(&s, 12, 255.0).is_err());
    }

    #[test]
    fn dark_stream_reconstructs_black() {
        let s = SpikeStream::new(4, 4, 40_000, 100).unwrap();
        let img = reconstruct_image(&s, 50, 255.0).unwrap();
        assert!(img.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn psnr_cases() {
        let peak = 255.0;
        let a = IntensityImage::new(16, 16, vec![100.0; 256]).unwrap();
        assert_eq!(psnr(&a, &a, peak).unwrap(), f64::INFINITY);
        let mut b = a.clone();
        b.values[37] += peak / 2.0;
        let expected = 10.0 * (1024.0f64).log10();
        assert!((psnr(&a, &b, peak).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 30.10).abs() < 0.005);

        let zero = IntensityImage::new(4, 4, vec![0.0; 16]).unwrap();
        let full = IntensityImage::new(4, 4, vec![peak; 16]).unwrap();
        assert_eq!(psnr(&zero, &full, peak).unwrap(), 0.0);

        let other = IntensityImage::new(4, 5, vec![0.0; 20]).unwrap();
        assert!(matches!(psnr(&zero, &other, peak), Err(Error::DimensionMismatch(_))));
        assert!(ssim(&zero, &other, peak).is_err());
    }

    #[test]
    fn ssim_cases() {
        let values: Vec<f64> = (0..400).map(|i| ((i * 37) % 255) as f64).collect();
        let a = IntensityImage::new(20, 20, values).unwrap();
        assert!((ssim(&a, &a, 255.0).unwrap() - 1.0).abs() < 1e-12);
        let mut b = a.clone();
        for v in b.values.iter_mut().step_by(3) {
            *v = 255.0 - *v;
        }
        let s = ssim(&a, &b, 255.0).unwrap();
        assert!((0.0..0.9).contains(&s), "{s}");
        // smaller than one window
        let tiny = IntensityImage::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((ssim(&tiny, &tiny, 255.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_layout() {
        let img = IntensityImage::new(2, 1, vec![255.0, 127.5]).unwrap();
        let pgm = img.to_pgm(255.0);
        assert_eq!(&pgm[..11], b"P5\n2 1\n255\n");
        assert_eq!(&pgm[11..], &[255, 128]);
    }

    proptest! {
        #[test]
        fn delta_matches_intensity_difference(t in 1.0f64..1e6, dt in -0.99f64..1e4, phi in 1.0f64..4096.0) {
            let lhs = intensity_delta(t, dt, phi).unwrap();
            let rhs = mean_intensity(t, phi).unwrap() - mean_intensity(t + dt, phi).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (phi / t));
        }

        #[test]
        fn distance_is_a_pseudometric(
            v in proptest::collection::vec((1u32..500, 1u32..500, 1u32..500), 1..64)
        ) {
            let a: Vec<u32> = v.iter().map(|t| t.0).collect();
            let b: Vec<u32> = v.iter().map(|t| t.1).collect();
            let c: Vec<u32> = v.iter().map(|t| t.2).collect();
            let d = |x: &[u32], y: &[u32]| spike_train_distance(x, y).unwrap().value;
            prop_assert!(d(&a, &b) >= 0.0);
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
            if a != b {
                prop_assert!(d(&a, &b) > 0.0);
            }
        }
    }
}
