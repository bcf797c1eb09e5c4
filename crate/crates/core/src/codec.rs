//! Encoder and decoder for `.spkc` streams.
//!
//! Pixels are coded in raster order and every segment of a pixel is coded
//! before moving on. For each segment the encoder tries the mean value,
//! forward and inter-pixel predictors, quantises the residuals, measures
//! the exact rate with a speculative copy of the entropy coder and keeps
//! the candidate with the lowest `D + lambda * R`. The chosen
//! reconstruction is committed before the next segment is searched, so
//! encoder and decoder always predict from identical data.

use std::fs;
use std::path::Path;

use crate::entropy::{MvdComponent, SyntaxDecoder, SyntaxEncoder};
use crate::error::{Error, Result};
use crate::metrics::spike_train_distance;
use crate::partitioner::{partition, PartitionConfig};
use crate::predictor::{
    fm_search, fm_window, inter_search, inter_window, mvp_fm, mvp_inter, neighbour_window,
    reciprocals, segment_mean, Mode, ModeMap, MotionVector, Neighborhood, RefPixel,
    SearchPattern, SideInfo,
};
use crate::quantizer::{quantize, reconstruct, QuantConfig};
use crate::spike_model::{IsiSequence, SpikeStream};

pub const CODEC_MAGIC: [u8; 4] = *b"SPKC";
pub const CODEC_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 48;

const FLAG_LOSSLESS: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodecConfig {
    /// Dispatch threshold of the sensor.
    pub phi: f64,
    pub qp: u8,
    /// Spatial search range in pixels.
    pub sr: u8,
    /// Temporal search range in intervals.
    pub tr: u16,
    /// Basic segment length in intervals.
    pub seg_len: u16,
    pub merge_tol: f64,
    /// Rate multiplier per QP step: `lambda = lambda0 * QP`.
    pub lambda0: f64,
    pub lossless: bool,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            phi: 255.0,
            qp: 8,
            sr: 3,
            tr: 32,
            seg_len: 32,
            merge_tol: 0.5,
            lambda0: 0.01,
            lossless: false,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        self.quant().validate()?;
        if self.seg_len < 2 {
            return Err(Error::Config(format!("segment length {} < 2", self.seg_len)));
        }
        if !(self.merge_tol.is_finite() && self.merge_tol >= 0.0) {
            return Err(Error::Config(format!("merge tolerance {}", self.merge_tol)));
        }
        if !(self.lambda0.is_finite() && self.lambda0 >= 0.0) {
            return Err(Error::Config(format!("lambda0 {}", self.lambda0)));
        }
        Ok(())
    }

    pub fn quant(&self) -> QuantConfig {
        QuantConfig {
            phi: self.phi,
            qp: self.qp,
            lossless: self.lossless,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda0 * self.qp as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdCost {
    pub distortion: f64,
    pub bits: f64,
    pub cost: f64,
}

pub fn rd_cost(distortion: f64, bits: f64, cfg: &CodecConfig) -> RdCost {
    RdCost {
        distortion,
        bits,
        cost: distortion + cfg.lambda() * bits,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub width: u16,
    pub height: u16,
    pub sample_rate: u32,
    pub num_ticks: u64,
    pub phi: f64,
    pub qp: u8,
    pub sr: u8,
    pub tr: u16,
    pub seg_len: u16,
    pub flags: u8,
    pub checksum: u32,
    pub payload_len: u64,
}

impl Header {
    pub fn lossless(&self) -> bool {
        self.flags & FLAG_LOSSLESS != 0
    }

    /// Decoder-relevant configuration; encoder-only knobs take defaults.
    pub fn config(&self) -> CodecConfig {
        CodecConfig {
            phi: self.phi,
            qp: self.qp,
            sr: self.sr,
            tr: self.tr,
            seg_len: self.seg_len,
            lossless: self.lossless(),
            ..CodecConfig::default()
        }
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&CODEC_MAGIC);
        b[4] = CODEC_VERSION;
        b[5..7].copy_from_slice(&self.width.to_le_bytes());
        b[7..9].copy_from_slice(&self.height.to_le_bytes());
        b[9..13].copy_from_slice(&self.sample_rate.to_le_bytes());
        b[13..21].copy_from_slice(&self.num_ticks.to_le_bytes());
        b[21..29].copy_from_slice(&self.phi.to_le_bytes());
        b[29] = self.qp;
        b[30] = self.sr;
        b[31..33].copy_from_slice(&self.tr.to_le_bytes());
        b[33..35].copy_from_slice(&self.seg_len.to_le_bytes());
        b[35] = self.flags;
        b[36..40].copy_from_slice(&self.checksum.to_le_bytes());
        b[40..48].copy_from_slice(&self.payload_len.to_le_bytes());
        b
    }

    fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN {
            return Err(Error::Truncated(format!("{}-byte codec header", b.len())));
        }
        let magic: [u8; 4] = b[0..4].try_into().unwrap();
        if magic != CODEC_MAGIC {
            return Err(Error::BadMagic {
                expected: CODEC_MAGIC,
                found: magic,
            });
        }
        if b[4] != CODEC_VERSION {
            return Err(Error::Version(b[4]));
        }
        let u16_at = |i: usize| u16::from_le_bytes(b[i..i + 2].try_into().unwrap());
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        Ok(Header {
            width: u16_at(5),
            height: u16_at(7),
            sample_rate: u32_at(9),
            num_ticks: u64_at(13),
            phi: f64::from_le_bytes(b[21..29].try_into().unwrap()),
            qp: b[29],
            sr: b[30],
            tr: u16_at(31),
            seg_len: u16_at(33),
            flags: b[35],
            checksum: u32_at(36),
            payload_len: u64_at(40),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedStream {
    pub header: Header,
    pub payload: Vec<u8>,
}

impl EncodedStream {
    /// Total size in bytes of the `.spkc` encoding.
    pub fn len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.header.to_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses and integrity-checks a `.spkc` buffer.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = Header::from_bytes(bytes)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() as u64 != header.payload_len {
            return Err(Error::Truncated(format!(
                "payload has {} bytes, header declares {}",
                payload.len(),
                header.payload_len
            )));
        }
        let found = crc32fast::hash(payload);
        if found != header.checksum {
            return Err(Error::Checksum {
                expected: header.checksum,
                found,
            });
        }
        Ok(EncodedStream {
            header,
            payload: payload.to_vec(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Raw `.spkr` size over encoded `.spkc` size.
pub fn compression_ratio(raw: &SpikeStream, encoded: &EncodedStream) -> f64 {
    raw.raw_file_len() as f64 / encoded.len() as f64
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EncodeStats {
    /// Segments coded in each mode, indexed by [`Mode::index`].
    pub mode_counts: [usize; 3],
    pub levels: usize,
    pub nonzero_levels: usize,
}

impl EncodeStats {
    pub fn segments(&self) -> usize {
        self.mode_counts.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct EncodeOutput {
    pub stream: EncodedStream,
    /// Encoder-side reconstruction of every pixel; the decoder reproduces it
    /// exactly.
    pub reconstruction: Vec<IsiSequence>,
    pub stats: EncodeStats,
}

/// Writes one segment's syntax after its length field.
fn write_segment(
    enc: &mut SyntaxEncoder,
    mode: Mode,
    prev_mode: Mode,
    side: SideInfo,
    levels: &[i64],
) {
    enc.mode(mode, prev_mode);
    match side {
        SideInfo::MeanDiff(d) => enc.mean_diff(d),
        SideInfo::Mvd(mvd) => {
            if mode == Mode::Inter {
                enc.mvd(MvdComponent::X, mvd.x as i64);
                enc.mvd(MvdComponent::Y, mvd.y as i64);
            }
            enc.mvd(MvdComponent::T, mvd.t as i64);
        }
    }
    let mut prev = 0u64;
    for &l in levels {
        enc.level(l, prev);
        prev = l.unsigned_abs();
    }
}

struct Candidate {
    mode: Mode,
    mv: MotionVector,
    side: SideInfo,
    mean: u32,
    levels: Vec<i64>,
    recon: Vec<u32>,
    rd: RdCost,
}

/// Per-pixel decoding state shared by encoder and decoder.
struct CodingState {
    width: u16,
    height: u16,
    pattern: SearchPattern,
    recon: Vec<Vec<u32>>,
    fm_history: Vec<i32>,
    modes: ModeMap,
    prev_mode: Mode,
    prev_mean: u32,
}

impl CodingState {
    fn new(width: u16, height: u16, cfg: &CodecConfig) -> Self {
        CodingState {
            width,
            height,
            pattern: SearchPattern::new(cfg.sr, cfg.tr),
            recon: vec![Vec::new(); width as usize * height as usize],
            fm_history: Vec::new(),
            modes: ModeMap::new(width, height),
            prev_mode: Mode::Mvm,
            prev_mean: 0,
        }
    }

    fn index(&self, x: i64, y: i64) -> Option<usize> {
        (x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64)
            .then(|| y as usize * self.width as usize + x as usize)
    }

    /// Reference intervals the decoder derives from a vector.
    fn reference(&self, x: u32, y: u32, mv: MotionVector, seg_start: usize, n: usize) -> Option<Vec<u32>> {
        let here = self.index(x as i64, y as i64)?;
        if mv.x == 0 && mv.y == 0 {
            return fm_window(&self.recon[here], mv.t, n);
        }
        let nb = self.index(x as i64 + mv.x as i64, y as i64 + mv.y as i64)?;
        neighbour_window(&self.recon[nb], seg_start, mv.t, n)
    }

    fn commit(&mut self, x: u32, y: u32, mode: Mode, mv: MotionVector, mean: u32, recon: &[u32]) {
        let here = y as usize * self.width as usize + x as usize;
        self.recon[here].extend_from_slice(recon);
        self.modes.push(x, y, mode, mv);
        self.prev_mode = mode;
        match mode {
            Mode::Mvm => self.prev_mean = mean,
            Mode::Fm => self.fm_history.push(mv.t),
            Mode::Inter => {}
        }
    }
}

pub fn encode(stream: &SpikeStream, cfg: &CodecConfig) -> Result<EncodedStream> {
    encode_with_shadow(stream, cfg).map(|o| o.stream)
}

pub fn encode_with_shadow(stream: &SpikeStream, cfg: &CodecConfig) -> Result<EncodeOutput> {
    cfg.validate()?;
    let (width, height) = (stream.width(), stream.height());
    let num_ticks = stream.num_ticks();
    let quant = cfg.quant();
    let part_cfg = PartitionConfig {
        basic_len: cfg.seg_len as usize,
        tolerance: cfg.merge_tol,
    };
    let isis = stream.to_isis()?;

    let mut state = CodingState::new(width, height, cfg);
    // Reciprocals of reconstructed intervals, kept only for rows still
    // inside the spatial search range.
    let mut recips: Vec<Vec<f64>> = vec![Vec::new(); state.recon.len()];
    let mut enc = SyntaxEncoder::new();
    let mut stats = EncodeStats::default();
    let sr = cfg.sr as i64;

    for y in 0..height as u32 {
        if let Some(old) = (y as i64).checked_sub(sr + 1).filter(|r| *r >= 0) {
            for x in 0..width as usize {
                recips[old as usize * width as usize + x] = Vec::new();
            }
        }
        for x in 0..width as u32 {
            let here = y as usize * width as usize + x as usize;
            let seq = &isis[here];
            enc.uint(seq.offset);
            enc.uint(seq.intervals.len() as u64);
            enc.uint(seq.tail);
            state.fm_history.clear();

            let segments = partition(&seq.intervals, &part_cfg)?;
            let last = segments.len().saturating_sub(1);
            for seg in &segments {
                let units = if seg.index == last {
                    0
                } else {
                    debug_assert_eq!(seg.len() % cfg.seg_len as usize, 0);
                    (seg.len() / cfg.seg_len as usize) as u64
                };
                enc.uint(units);

                let n = seg.len();
                let target = reciprocals(&seg.isis);
                let evaluate = |mode: Mode, mv: MotionVector, side: SideInfo, mean: u32, predictor: Vec<u32>| {
                    let mut levels = Vec::with_capacity(n);
                    let mut recon = Vec::with_capacity(n);
                    for (&t, &p) in seg.isis.iter().zip(&predictor) {
                        let level = quantize(t as i64 - p as i64, p, &quant);
                        levels.push(level);
                        recon.push(reconstruct(level, p, &quant));
                    }
                    let distortion = spike_train_distance(&seg.isis, &recon)
                        .map(|d| d.value)
                        .unwrap_or(0.0);
                    let mut spec = enc.speculate();
                    let start = spec.bits();
                    write_segment(&mut spec, mode, state.prev_mode, side, &levels);
                    Candidate {
                        mode,
                        mv,
                        side,
                        mean,
                        levels,
                        recon,
                        rd: rd_cost(distortion, spec.bits() - start, cfg),
                    }
                };

                let mean = segment_mean(&seg.isis);
                let mut best = evaluate(
                    Mode::Mvm,
                    MotionVector::ZERO,
                    SideInfo::MeanDiff(mean as i64 - state.prev_mean as i64),
                    mean,
                    vec![mean; n],
                );

                let history = RefPixel::new(&state.recon[here], &recips[here]);
                if let Some(found) = fm_search(&target, history, cfg.tr) {
                    let predictor = fm_window(history.isis, found.mv.t, n).expect("searched window");
                    let mvd = MotionVector::temporal(mvp_fm(&state.fm_history) - found.mv.t);
                    let c = evaluate(Mode::Fm, found.mv, SideInfo::Mvd(mvd), 0, predictor);
                    if c.rd.cost < best.rd.cost {
                        best = c;
                    }
                }

                let mut hood = Neighborhood::new(cfg.sr);
                for dy in -sr..=0 {
                    for dx in -sr..=sr {
                        if dy == 0 && dx >= 0 {
                            continue;
                        }
                        if let Some(nb) = state.index(x as i64 + dx, y as i64 + dy) {
                            hood.set(dx as i32, dy as i32, RefPixel::new(&state.recon[nb], &recips[nb]));
                        }
                    }
                }
                hood.set(0, 0, history);
                if let Some(found) = inter_search(&target, seg.start, &hood, &state.pattern) {
                    let predictor = inter_window(&hood, found.mv, seg.start, n).expect("searched window");
                    let mvp = mvp_inter(&state.modes, x, y, seg.index);
                    let c = evaluate(Mode::Inter, found.mv, SideInfo::Mvd(mvp.diff(found.mv)), 0, predictor);
                    if c.rd.cost < best.rd.cost {
                        best = c;
                    }
                }

                write_segment(&mut enc, best.mode, state.prev_mode, best.side, &best.levels);
                stats.mode_counts[best.mode.index()] += 1;
                stats.levels += n;
                stats.nonzero_levels += best.levels.iter().filter(|&&l| l != 0).count();
                recips[here].extend(best.recon.iter().map(|&t| 1.0 / t as f64));
                state.commit(x, y, best.mode, best.mv, best.mean, &best.recon);
            }
        }
    }

    let payload = enc.finish();
    let header = Header {
        width,
        height,
        sample_rate: stream.sample_rate(),
        num_ticks,
        phi: cfg.phi,
        qp: cfg.qp,
        sr: cfg.sr,
        tr: cfg.tr,
        seg_len: cfg.seg_len,
        flags: if cfg.lossless { FLAG_LOSSLESS } else { 0 },
        checksum: crc32fast::hash(&payload),
        payload_len: payload.len() as u64,
    };
    let reconstruction = isis
        .iter()
        .zip(state.recon)
        .map(|(orig, intervals)| IsiSequence {
            offset: orig.offset,
            intervals,
            tail: orig.tail,
        })
        .collect();
    Ok(EncodeOutput {
        stream: EncodedStream { header, payload },
        reconstruction,
        stats,
    })
}

fn malformed(dec: &SyntaxDecoder<'_>, reason: impl Into<String>) -> Error {
    Error::Decode {
        offset: dec.position(),
        reason: reason.into(),
    }
}

/// Decodes every pixel's reconstructed ISI sequence.
pub fn decode_isis(enc: &EncodedStream) -> Result<Vec<IsiSequence>> {
    let h = &enc.header;
    let found = crc32fast::hash(&enc.payload);
    if found != h.checksum {
        return Err(Error::Checksum {
            expected: h.checksum,
            found,
        });
    }
    if h.width == 0 || h.height == 0 {
        return Err(Error::Dimensions(format!("{}x{} sensor", h.width, h.height)));
    }
    let cfg = h.config();
    cfg.validate()?;
    let quant = cfg.quant();
    let num_ticks = h.num_ticks;
    let mut state = CodingState::new(h.width, h.height, &cfg);
    let mut dec = SyntaxDecoder::new(&enc.payload)?;
    let mut out = Vec::with_capacity(state.recon.len());

    for y in 0..h.height as u32 {
        for x in 0..h.width as u32 {
            let here = y as usize * h.width as usize + x as usize;
            let offset = dec.uint()?;
            let count = dec.uint()?;
            let tail = dec.uint()?;
            if offset > num_ticks || tail > num_ticks || count > num_ticks {
                return Err(malformed(&dec, "pixel header exceeds stream length"));
            }
            let count = count as usize;
            state.fm_history.clear();
            let mut start = 0usize;
            let mut seg_index = 0usize;
            while start < count {
                let units = dec.uint()?;
                let remaining = count - start;
                let n = if units == 0 {
                    remaining
                } else {
                    units
                        .checked_mul(cfg.seg_len as u64)
                        .filter(|&n| n <= remaining as u64)
                        .ok_or_else(|| malformed(&dec, "segment longer than pixel"))?
                        as usize
                };
                let mode = dec.mode(state.prev_mode)?;
                let (mv, mean, predictor) = match mode {
                    Mode::Mvm => {
                        let m = state.prev_mean as i64 + dec.mean_diff()?;
                        let m = u32::try_from(m)
                            .ok()
                            .filter(|&m| m >= 1)
                            .ok_or_else(|| malformed(&dec, "mean value out of range"))?;
                        (MotionVector::ZERO, m, vec![m; n])
                    }
                    Mode::Fm => {
                        let mvd = dec.mvd(MvdComponent::T)?;
                        let t = mvp_fm(&state.fm_history) as i64 - mvd;
                        let mv = i32::try_from(t)
                            .ok()
                            .filter(|&t| t >= 1 && t <= cfg.tr as i32)
                            .map(MotionVector::temporal)
                            .ok_or_else(|| malformed(&dec, "temporal vector out of range"))?;
                        let p = fm_window(&state.recon[here], mv.t, n)
                            .ok_or_else(|| malformed(&dec, "temporal vector beyond history"))?;
                        (mv, 0, p)
                    }
                    Mode::Inter => {
                        let mvd_x = dec.mvd(MvdComponent::X)?;
                        let mvd_y = dec.mvd(MvdComponent::Y)?;
                        let mvd_t = dec.mvd(MvdComponent::T)?;
                        let mvp = mvp_inter(&state.modes, x, y, seg_index);
                        let comp = |p: i32, d: i64| i32::try_from(p as i64 - d).ok();
                        let mv = match (comp(mvp.x, mvd_x), comp(mvp.y, mvd_y), comp(mvp.t, mvd_t)) {
                            (Some(a), Some(b), Some(c)) => MotionVector::new(a, b, c),
                            _ => return Err(malformed(&dec, "vector overflow")),
                        };
                        if !state.pattern.contains(mv) {
                            return Err(malformed(&dec, "vector outside search range"));
                        }
                        let p = state
                            .reference(x, y, mv, start, n)
                            .ok_or_else(|| malformed(&dec, "vector points at no reference"))?;
                        (mv, 0, p)
                    }
                };
                let mut recon = Vec::with_capacity(n);
                let mut prev = 0u64;
                for &p in &predictor {
                    let level = dec.level(prev)?;
                    prev = level.unsigned_abs();
                    recon.push(reconstruct(level, p, &quant));
                }
                state.commit(x, y, mode, mv, mean, &recon);
                start += n;
                seg_index += 1;
            }
            let seq = IsiSequence {
                offset,
                intervals: std::mem::take(&mut state.recon[here]).clone(),
                tail,
            };
            state.recon[here] = seq.intervals.clone();
            if cfg.lossless {
                seq.check(num_ticks)
                    .map_err(|e| malformed(&dec, format!("lossless pixel {here}: {e}")))?;
            }
            out.push(seq);
        }
    }
    dec.finish()?;
    Ok(out)
}

pub fn decode(enc: &EncodedStream) -> Result<SpikeStream> {
    let isis = decode_isis(enc)?;
    let h = &enc.header;
    SpikeStream::from_isis_truncating(h.width, h.height, h.sample_rate, h.num_ticks, &isis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{simulate, SimConfig, SimMode, StaticScene};

    fn lossless() -> CodecConfig {
        CodecConfig {
            lossless: true,
            ..CodecConfig::default()
        }
    }

    fn poisson_stream(w: u16, h: u16, ticks: u64, seed: u64) -> SpikeStream {
        let scene = StaticScene::texture(w, h, 255.0, 6, 30).unwrap();
        let cfg = SimConfig {
            mode: SimMode::Poisson { photons_per_spike: 8 },
            seed,
            ..SimConfig::default()
        };
        simulate(&scene, &cfg, ticks).unwrap()
    }

    #[test]
    fn rd_cost_hand_example() {
        let cfg = CodecConfig {
            lambda0: 0.005,
            qp: 1,
            ..CodecConfig::default()
        };
        let a = rd_cost(0.1, 100.0, &cfg);
        let b = rd_cost(0.2, 10.0, &cfg);
        assert!((a.cost - 0.6).abs() < 1e-12);
        assert!((b.cost - 0.25).abs() < 1e-12);
        assert!(b.cost < a.cost);
        let zero = CodecConfig {
            lambda0: 0.0,
            ..cfg
        };
        assert_eq!(rd_cost(0.3, 1e6, &zero).cost, 0.3);
    }

    #[test]
    fn lossless_round_trip() {
        let s = poisson_stream(12, 9, 3000, 1);
        let enc = encode(&s, &lossless()).unwrap();
        let bytes = enc.to_bytes();
        let back = decode(&EncodedStream::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn empty_and_silent_streams() {
        let s = SpikeStream::new(3, 2, 40_000, 0).unwrap();
        assert_eq!(decode(&encode(&s, &lossless()).unwrap()).unwrap(), s);
        let s = SpikeStream::new(4, 4, 40_000, 100).unwrap();
        let enc = encode(&s, &CodecConfig::default()).unwrap();
        assert_eq!(decode(&enc).unwrap(), s);
    }

    #[test]
    fn shadow_matches_decoder() {
        let s = poisson_stream(10, 10, 4000, 2);
        for qp in [1, 8, 16, 32] {
            let cfg = CodecConfig {
                qp,
                ..CodecConfig::default()
            };
            let out = encode_with_shadow(&s, &cfg).unwrap();
            assert_eq!(decode_isis(&out.stream).unwrap(), out.reconstruction, "qp {qp}");
        }
    }

    #[test]
    fn static_scene_prefers_mean_mode() {
        let scene = StaticScene::texture(16, 16, 255.0, 8, 40).unwrap();
        let s = simulate(&scene, &SimConfig::default(), 8000).unwrap();
        for qp in [1, 8, 32] {
            let cfg = CodecConfig {
                qp,
                ..CodecConfig::default()
            };
            let out = encode_with_shadow(&s, &cfg).unwrap();
            let st = &out.stats;
            assert_eq!(st.nonzero_levels, 0);
            assert!(st.mode_counts[Mode::Mvm.index()] as f64 >= 0.99 * st.segments() as f64, "{st:?}");
            assert_eq!(decode(&out.stream).unwrap(), s);
        }
    }

    #[test]
    fn header_round_trip_and_integrity() {
        let s = poisson_stream(6, 5, 2000, 3);
        let cfg = CodecConfig {
            qp: 17,
            sr: 2,
            tr: 20,
            seg_len: 16,
            phi: 255.0,
            ..CodecConfig::default()
        };
        let enc = encode(&s, &cfg).unwrap();
        let bytes = enc.to_bytes();
        let parsed = EncodedStream::from_bytes(&bytes).unwrap();
        assert_eq!(parsed, enc);
        let h = parsed.header;
        assert_eq!((h.width, h.height, h.num_ticks, h.sample_rate), (6, 5, 2000, 40_000));
        assert_eq!((h.qp, h.sr, h.tr, h.seg_len, h.phi, h.lossless()), (17, 2, 20, 16, 255.0, false));

        let mut corrupt = bytes.clone();
        corrupt[HEADER_LEN + bytes.len() / 3 - HEADER_LEN / 3] ^= 0x10;
        assert!(matches!(EncodedStream::from_bytes(&corrupt), Err(Error::Checksum { .. })));

        assert!(matches!(
            EncodedStream::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated(_))
        ));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(EncodedStream::from_bytes(&bad), Err(Error::Version(9))));
        assert!(matches!(EncodedStream::from_bytes(&bytes[..20]), Err(Error::Truncated(_))));
    }

    #[test]
    fn bad_config_is_rejected() {
        let s = SpikeStream::new(2, 2, 40_000, 10).unwrap();
        for cfg in [
            CodecConfig { qp: 0, ..CodecConfig::default() },
            CodecConfig { qp: 33, ..CodecConfig::default() },
            CodecConfig { seg_len: 1, ..CodecConfig::default() },
            CodecConfig { phi: 0.0, ..CodecConfig::default() },
        ] {
            assert!(matches!(encode(&s, &cfg), Err(Error::Config(_))));
        }
    }
}
