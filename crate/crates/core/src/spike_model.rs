//! Spike planes and inter-spike-interval sequences.
//!
//! A [`SpikeStream`] stores one bit per (pixel, tick). Bits are packed tick
//! plane by tick plane, pixels in raster order inside a plane, LSB first
//! within each byte. The `.spkr` container is a fixed 21-byte header
//! followed by exactly `ceil(W*H*N / 8)` payload bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const RAW_MAGIC: [u8; 4] = *b"SPKR";
pub const RAW_VERSION: u8 = 1;
pub const RAW_HEADER_LEN: usize = 21;

/// Sensor clock of the reference camera, in Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 40_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

impl Pixel {
    pub fn new(x: u32, y: u32) -> Self {
        Pixel { x, y }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SpikeStream {
    width: u16,
    height: u16,
    sample_rate: u32,
    num_ticks: u64,
    bits: Vec<u8>,
}

impl std::fmt::Debug for SpikeStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpikeStream")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("sample_rate", &self.sample_rate)
            .field("num_ticks", &self.num_ticks)
            .field("payload_bytes", &self.bits.len())
            .finish()
    }
}

fn payload_len(width: u16, height: u16, num_ticks: u64) -> Result<usize> {
    let bits = (width as u64 * height as u64)
        .checked_mul(num_ticks)
        .ok_or_else(|| Error::Dimensions("W*H*N overflows u64".into()))?;
    usize::try_from(bits.div_ceil(8))
        .map_err(|_| Error::Dimensions(format!("{bits} bits do not fit in memory")))
}

impl SpikeStream {
    /// An all-silent stream.
    pub fn new(width: u16, height: u16, sample_rate: u32, num_ticks: u64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimensions(format!("{width}x{height} sensor")));
        }
        let len = payload_len(width, height, num_ticks)?;
        Ok(SpikeStream {
            width,
            height,
            sample_rate,
            num_ticks,
            bits: vec![0; len],
        })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_ticks(&self) -> u64 {
        self.num_ticks
    }

    pub fn num_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Packed payload, `ceil(W*H*N/8)` bytes.
    pub fn payload(&self) -> &[u8] {
        &self.bits
    }

    pub fn storage_bits(&self) -> u64 {
        self.num_pixels() as u64 * self.num_ticks
    }

    /// Size of the `.spkr` encoding in bytes.
    pub fn raw_file_len(&self) -> usize {
        RAW_HEADER_LEN + self.bits.len()
    }

    pub fn pixel_index(&self, pixel: Pixel) -> Result<usize> {
        if pixel.x >= self.width as u32 || pixel.y >= self.height as u32 {
            return Err(Error::OutOfBounds {
                x: pixel.x,
                y: pixel.y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(pixel.y as usize * self.width as usize + pixel.x as usize)
    }

    #[inline]
    fn bit_index(&self, index: usize, tick: u64) -> usize {
        tick as usize * self.num_pixels() + index
    }

    /// Spike bit of pixel `index` (raster order) at `tick`.
    #[inline]
    pub fn get(&self, index: usize, tick: u64) -> bool {
        let b = self.bit_index(index, tick);
        self.bits[b >> 3] & (1 << (b & 7)) != 0
    }

    #[inline]
    pub fn set(&mut self, index: usize, tick: u64, spike: bool) {
        let b = self.bit_index(index, tick);
        if spike {
            self.bits[b >> 3] |= 1 << (b & 7);
        } else {
            self.bits[b >> 3] &= !(1 << (b & 7));
        }
    }

    pub fn spike_count(&self) -> u64 {
        self.bits.iter().map(|b| b.count_ones() as u64).sum()
    }

    /// Spike ticks of every pixel in one pass over the payload.
    pub fn spike_ticks(&self) -> Vec<Vec<u64>> {
        let n = self.num_pixels();
        let mut out = vec![Vec::new(); n];
        for (byte_idx, &byte) in self.bits.iter().enumerate() {
            let mut rest = byte;
            while rest != 0 {
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let b = byte_idx * 8 + bit;
                out[b % n].push((b / n) as u64);
            }
        }
        out
    }

    pub fn spikes_to_isi(&self, pixel: Pixel) -> Result<IsiSequence> {
        let index = self.pixel_index(pixel)?;
        let ticks: Vec<u64> = (0..self.num_ticks)
            .filter(|&t| self.get(index, t))
            .collect();
        IsiSequence::from_spike_ticks(&ticks, self.num_ticks)
    }

    /// ISI sequences of all pixels, raster order.
    pub fn to_isis(&self) -> Result<Vec<IsiSequence>> {
        self.spike_ticks()
            .iter()
            .map(|ticks| IsiSequence::from_spike_ticks(ticks, self.num_ticks))
            .collect()
    }

    /// Builds a stream from per-pixel ISI sequences. Each sequence must satisfy
    /// the tick-conservation invariant.
    pub fn from_isis(
        width: u16,
        height: u16,
        sample_rate: u32,
        num_ticks: u64,
        isis: &[IsiSequence],
    ) -> Result<Self> {
        let mut stream = Self::new(width, height, sample_rate, num_ticks)?;
        stream.check_pixel_count(isis.len())?;
        for (index, seq) in isis.iter().enumerate() {
            seq.check(num_ticks)?;
            for tick in seq.spike_ticks() {
                stream.set(index, tick, true);
            }
        }
        Ok(stream)
    }

    /// Places spikes at the cumulative times of each sequence and drops any
    /// that fall at or beyond `num_ticks`. Used for lossy reconstructions whose
    /// interval sums no longer match the stream duration.
    pub fn from_isis_truncating(
        width: u16,
        height: u16,
        sample_rate: u32,
        num_ticks: u64,
        isis: &[IsiSequence],
    ) -> Result<Self> {
        let mut stream = Self::new(width, height, sample_rate, num_ticks)?;
        stream.check_pixel_count(isis.len())?;
        for (index, seq) in isis.iter().enumerate() {
            for tick in seq.spike_ticks().take_while(|&t| t < num_ticks) {
                stream.set(index, tick, true);
            }
        }
        Ok(stream)
    }

    fn check_pixel_count(&self, got: usize) -> Result<()> {
        if got != self.num_pixels() {
            return Err(Error::DimensionMismatch(format!(
                "{} ISI sequences for {} pixels",
                got,
                self.num_pixels()
            )));
        }
        Ok(())
    }

    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; RAW_HEADER_LEN];
        header[0..4].copy_from_slice(&RAW_MAGIC);
        header[4] = RAW_VERSION;
        header[5..7].copy_from_slice(&self.width.to_le_bytes());
        header[7..9].copy_from_slice(&self.height.to_le_bytes());
        header[9..13].copy_from_slice(&self.sample_rate.to_le_bytes());
        header[13..21].copy_from_slice(&self.num_ticks.to_le_bytes());
        w.write_all(&header)?;
        w.write_all(&self.bits)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; RAW_HEADER_LEN];
        read_exact_or_truncated(&mut r, &mut header, "raw header")?;
        let magic: [u8; 4] = header[0..4].try_into().unwrap();
        if magic != RAW_MAGIC {
            return Err(Error::BadMagic {
                expected: RAW_MAGIC,
                found: magic,
            });
        }
        if header[4] != RAW_VERSION {
            return Err(Error::Version(header[4]));
        }
        let width = u16::from_le_bytes(header[5..7].try_into().unwrap());
        let height = u16::from_le_bytes(header[7..9].try_into().unwrap());
        let sample_rate = u32::from_le_bytes(header[9..13].try_into().unwrap());
        let num_ticks = u64::from_le_bytes(header[13..21].try_into().unwrap());
        if width == 0 || height == 0 {
            return Err(Error::Dimensions(format!("{width}x{height} sensor")));
        }
        let len = payload_len(width, height, num_ticks)?;
        // Read through `take` so a lying header cannot force a huge allocation
        // before the data is seen.
        let mut bits = Vec::new();
        r.by_ref().take(len as u64).read_to_end(&mut bits)?;
        if bits.len() != len {
            return Err(Error::Truncated(format!(
                "raw payload has {} of {} bytes",
                bits.len(),
                len
            )));
        }
        Ok(SpikeStream {
            width,
            height,
            sample_rate,
            num_ticks,
            bits,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_raw(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_raw(BufReader::new(File::open(path)?))
    }
}

pub(crate) fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated(what.to_string()),
        _ => Error::Io(e),
    })
}

/// One pixel's spike train as intervals.
///
/// `offset` is the tick of the first spike and `tail` is `num_ticks` minus
/// the tick of the last spike, so `offset + sum(intervals) + tail` always
/// equals the stream length. A pixel that never fires has
/// `offset == num_ticks`, no intervals and `tail == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IsiSequence {
    pub offset: u64,
    pub intervals: Vec<u32>,
    pub tail: u64,
}

impl IsiSequence {
    pub fn silent(num_ticks: u64) -> Self {
        IsiSequence {
            offset: num_ticks,
            intervals: Vec::new(),
            tail: 0,
        }
    }

    /// `ticks` must be strictly increasing and below `num_ticks`.
    pub fn from_spike_ticks(ticks: &[u64], num_ticks: u64) -> Result<Self> {
        let Some((&first, &last)) = ticks.first().zip(ticks.last()) else {
            return Ok(Self::silent(num_ticks));
        };
        if last >= num_ticks {
            return Err(Error::Inconsistent(format!(
                "spike at tick {last} in a {num_ticks}-tick stream"
            )));
        }
        let mut intervals = Vec::with_capacity(ticks.len() - 1);
        for w in ticks.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Inconsistent("spike ticks not increasing".into()));
            }
            let gap = u32::try_from(w[1] - w[0])
                .map_err(|_| Error::Inconsistent("interval exceeds u32".into()))?;
            intervals.push(gap);
        }
        Ok(IsiSequence {
            offset: first,
            intervals,
            tail: num_ticks - last,
        })
    }

    pub fn is_silent(&self) -> bool {
        self.intervals.is_empty() && self.tail == 0
    }

    pub fn spike_count(&self) -> usize {
        if self.is_silent() {
            0
        } else {
            self.intervals.len() + 1
        }
    }

    pub fn total_ticks(&self) -> u64 {
        self.offset + self.intervals.iter().map(|&i| i as u64).sum::<u64>() + self.tail
    }

    /// Spike ticks implied by offset and intervals, without validation.
    pub fn spike_ticks(&self) -> impl Iterator<Item = u64> + '_ {
        let first = (!self.is_silent()).then_some(self.offset);
        first.into_iter().chain(self.intervals.iter().scan(self.offset, |t, &i| {
            *t += i as u64;
            Some(*t)
        }))
    }

    /// Validates the sequence against a stream of `num_ticks` ticks.
    pub fn check(&self, num_ticks: u64) -> Result<()> {
        if self.intervals.contains(&0) {
            return Err(Error::Inconsistent("zero-length interval".into()));
        }
        let total = self.total_ticks();
        if total != num_ticks {
            return Err(Error::Inconsistent(format!(
                "offset + intervals + tail = {total}, stream has {num_ticks} ticks"
            )));
        }
        if self.is_silent() {
            if self.offset != num_ticks {
                return Err(Error::Inconsistent("silent pixel must have offset = num_ticks".into()));
            }
        } else if self.tail == 0 {
            return Err(Error::Inconsistent("last spike at or beyond stream end".into()));
        }
        Ok(())
    }

    /// Inverse of [`IsiSequence::from_spike_ticks`]: one bool per tick.
    pub fn to_spikes(&self, num_ticks: u64) -> Result<Vec<bool>> {
        self.check(num_ticks)?;
        let mut out = vec![false; num_ticks as usize];
        for t in self.spike_ticks() {
            out[t as usize] = true;
        }
        Ok(out)
    }
}

pub fn isi_to_spikes(seq: &IsiSequence, num_ticks: u64) -> Result<Vec<bool>> {
    seq.to_spikes(num_ticks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream_with(ticks: &[u64], num_ticks: u64) -> SpikeStream {
        let mut s = SpikeStream::new(1, 1, DEFAULT_SAMPLE_RATE, num_ticks).unwrap();
        for &t in ticks {
            s.set(0, t, true);
        }
        s
    }

    fn spikes_at(v: &[bool]) -> Vec<u64> {
        v.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
    }

    #[test]
    fn every_tick_spiking() {
        let s = stream_with(&[0, 1, 2, 3, 4], 5);
        let seq = s.spikes_to_isi(Pixel::new(0, 0)).unwrap();
        assert_eq!(seq.offset, 0);
        assert_eq!(seq.intervals, vec![1, 1, 1, 1]);
        assert_eq!(seq.tail, 1);
        assert_eq!(seq.total_ticks(), 5);
    }

    #[test]
    fn hand_counted_intervals() {
        let s = stream_with(&[3, 7, 15], 20);
        let seq = s.spikes_to_isi(Pixel::new(0, 0)).unwrap();
        assert_eq!(
            seq,
            IsiSequence {
                offset: 3,
                intervals: vec![4, 8],
                tail: 5
            }
        );
        assert_eq!(spikes_at(&seq.to_spikes(20).unwrap()), vec![3, 7, 15]);
    }

    #[test]
    fn silent_pixel_convention() {
        let s = stream_with(&[], 20);
        let seq = s.spikes_to_isi(Pixel::new(0, 0)).unwrap();
        assert_eq!(seq, IsiSequence::silent(20));
        assert_eq!(seq.spike_count(), 0);
        assert!(seq.to_spikes(20).unwrap().iter().all(|&b| !b));
    }

    #[test]
    fn isi_to_spikes_cases() {
        let empty = IsiSequence {
            offset: 0,
            intervals: vec![],
            tail: 0,
        };
        assert!(isi_to_spikes(&empty, 0).unwrap().is_empty());
        let seq = IsiSequence {
            offset: 2,
            intervals: vec![1, 1],
            tail: 1,
        };
        assert_eq!(spikes_at(&isi_to_spikes(&seq, 5).unwrap()), vec![2, 3, 4]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let seq = IsiSequence {
            offset: 3,
            intervals: vec![4, 8],
            tail: 5,
        };
        assert!(matches!(seq.to_spikes(21), Err(Error::Inconsistent(_))));
        let bad_tail = IsiSequence {
            offset: 2,
            intervals: vec![1, 1, 1],
            tail: 0,
        };
        assert!(bad_tail.to_spikes(5).is_err());
    }

    #[test]
    fn out_of_bounds_pixel() {
        let s = SpikeStream::new(4, 3, DEFAULT_SAMPLE_RATE, 10).unwrap();
        assert!(matches!(
            s.spikes_to_isi(Pixel::new(4, 0)),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(s.spikes_to_isi(Pixel::new(3, 2)).is_ok());
    }

    #[test]
    fn one_byte_all_ones() {
        let s = stream_with(&[0, 1, 2, 3, 4, 5, 6, 7], 8);
        let mut buf = Vec::new();
        s.write_raw(&mut buf).unwrap();
        assert_eq!(buf.len(), RAW_HEADER_LEN + 1);
        assert_eq!(&buf[..4], b"SPKR");
        assert_eq!(buf[RAW_HEADER_LEN], 0xFF);
    }

    #[test]
    fn reference_sensor_data_rate() {
        // 400x250 pixels at 40 kHz for one second.
        let bytes = payload_len(400, 250, 40_000).unwrap();
        assert_eq!(bytes, 500_000_000);
        let mib = bytes as f64 / (1024.0 * 1024.0);
        assert!((mib - 476.8).abs() < 0.05, "{mib}");
    }

    #[test]
    fn header_errors() {
        let s = stream_with(&[1], 4);
        let mut buf = Vec::new();
        s.write_raw(&mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(SpikeStream::read_raw(&bad[..]), Err(Error::BadMagic { .. })));
        assert!(matches!(
            SpikeStream::read_raw(&buf[..10]),
            Err(Error::Truncated(_))
        ));
        assert!(matches!(
            SpikeStream::read_raw(&buf[..RAW_HEADER_LEN]),
            Err(Error::Truncated(_))
        ));
        let mut huge = buf.clone();
        huge[5..9].copy_from_slice(&[0xFF; 4]);
        huge[13..21].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(SpikeStream::read_raw(&huge[..]), Err(Error::Dimensions(_))));
    }

    #[test]
    fn random_stream_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut s = SpikeStream::new(32, 32, DEFAULT_SAMPLE_RATE, 1024).unwrap();
        for t in 0..1024 {
            for p in 0..1024 {
                if rng.gen_bool(0.1) {
                    s.set(p, t, true);
                }
            }
        }
        let mut buf = Vec::new();
        s.write_raw(&mut buf).unwrap();
        assert_eq!(buf.len(), RAW_HEADER_LEN + 32 * 32 * 1024 / 8);
        assert_eq!(SpikeStream::read_raw(&buf[..]).unwrap(), s);
    }

    proptest! {
        #[test]
        fn isi_round_trip(w in 1u16..6, h in 1u16..6, n in 0u64..80, density in 0.0f64..1.0, seed: u64) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut s = SpikeStream::new(w, h, 1000, n).unwrap();
            for t in 0..n {
                for p in 0..s.num_pixels() {
                    if rng.gen_bool(density) {
                        s.set(p, t, true);
                    }
                }
            }
            let isis = s.to_isis().unwrap();
            for (p, seq) in isis.iter().enumerate() {
                prop_assert_eq!(seq.total_ticks(), n);
                let x = (p % w as usize) as u32;
                let y = (p / w as usize) as u32;
                prop_assert_eq!(&s.spikes_to_isi(Pixel::new(x, y)).unwrap(), seq);
                let bits = seq.to_spikes(n).unwrap();
                for t in 0..n {
                    prop_assert_eq!(bits[t as usize], s.get(p, t));
                }
            }
            let rebuilt = SpikeStream::from_isis(w, h, 1000, n, &isis).unwrap();
            prop_assert_eq!(&rebuilt, &s);
            let mut buf = Vec::new();
            s.write_raw(&mut buf).unwrap();
            prop_assert_eq!(buf.len(), RAW_HEADER_LEN + ((w as u64 * h as u64 * n).div_ceil(8)) as usize);
        }
    }
}
