//! Browser bindings: simulate a scene, look at reconstructed frames, and run
//! the codec at a chosen QP.

use wasm_bindgen::prelude::*;

use spikec::codec::{self, compression_ratio, CodecConfig};
use spikec::metrics::{mean_stream_distance, psnr, ssim, Reconstructor};
use spikec::quantizer::q_step;
use spikec::simulator::{
    scene_moving_bar, scene_rotating_disc, simulate, DiscPattern, Scene, SimConfig, SimMode,
    StaticScene,
};
use spikec::SpikeStream;

const PHI: f64 = 255.0;

fn js(e: spikec::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Grey pixels to canvas RGBA.
fn rgba(gray: &[u8]) -> Vec<u8> {
    gray.iter().flat_map(|&g| [g, g, g, 255]).collect()
}

#[wasm_bindgen]
pub struct Demo {
    stream: SpikeStream,
    frames: Reconstructor,
}

#[wasm_bindgen]
pub struct Trial {
    ratio: f64,
    compressed_bytes: usize,
    distance: f64,
    psnr: f64,
    ssim: f64,
    image: Vec<u8>,
}

#[wasm_bindgen]
impl Trial {
    #[wasm_bindgen(getter)]
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    #[wasm_bindgen(getter)]
    pub fn compressed_bytes(&self) -> usize {
        self.compressed_bytes
    }

    #[wasm_bindgen(getter)]
    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// PSNR of the decoded frame; `Infinity` when identical.
    #[wasm_bindgen(getter)]
    pub fn psnr(&self) -> f64 {
        self.psnr
    }

    #[wasm_bindgen(getter)]
    pub fn ssim(&self) -> f64 {
        self.ssim
    }

    /// Decoded frame as RGBA.
    #[wasm_bindgen(getter)]
    pub fn image(&self) -> Vec<u8> {
        self.image.clone()
    }
}

#[wasm_bindgen]
impl Demo {
    /// `scene` is one of `static`, `disc` or `bar`. `photons` of 0 selects
    /// the deterministic sensor, otherwise Poisson arrivals per spike.
    #[wasm_bindgen(constructor)]
    pub fn new(scene: &str, width: u16, height: u16, ticks: u32, photons: u32, seed: u32) -> Result<Demo, JsError> {
        let scene: Box<dyn Scene> = match scene {
            "static" => Box::new(StaticScene::texture(width, height, PHI, 8, 40).map_err(js)?),
            "disc" => Box::new(
                scene_rotating_disc(width, height, 600.0, 40_000, DiscPattern::default()).map_err(js)?,
            ),
            "bar" => Box::new(scene_moving_bar(width, height, 0.002, PHI).map_err(js)?),
            other => return Err(JsError::new(&format!("unknown scene {other:?}"))),
        };
        let cfg = SimConfig {
            mode: if photons == 0 {
                SimMode::Deterministic
            } else {
                SimMode::Poisson {
                    photons_per_spike: photons,
                }
            },
            seed: seed as u64,
            ..SimConfig::default()
        };
        let stream = simulate(scene.as_ref(), &cfg, ticks as u64).map_err(js)?;
        let frames = Reconstructor::from_stream(&stream);
        Ok(Demo { stream, frames })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u16 {
        self.stream.width()
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u16 {
        self.stream.height()
    }

    #[wasm_bindgen(getter)]
    pub fn ticks(&self) -> u32 {
        self.stream.num_ticks() as u32
    }

    #[wasm_bindgen(getter)]
    pub fn raw_bytes(&self) -> usize {
        self.stream.raw_file_len()
    }

    /// Intensity image at `tick` from the raw spikes, as RGBA.
    pub fn frame(&self, tick: u32) -> Result<Vec<u8>, JsError> {
        let img = self.frames.image_at(tick as u64, PHI).map_err(js)?;
        Ok(rgba(&img.to_gray(PHI)))
    }

    /// Encodes and decodes the stream, scoring the frame at `tick`.
    pub fn trial(&self, qp: u8, lossless: bool, tick: u32) -> Result<Trial, JsError> {
        let cfg = CodecConfig {
            qp,
            lossless,
            ..CodecConfig::default()
        };
        let enc = codec::encode(&self.stream, &cfg).map_err(js)?;
        let decoded_isis = codec::decode_isis(&enc).map_err(js)?;
        let decoded = codec::decode(&enc).map_err(js)?;
        let distance = mean_stream_distance(&self.stream.to_isis().map_err(js)?, &decoded_isis).map_err(js)?;
        let a = self.frames.image_at(tick as u64, PHI).map_err(js)?;
        let b = Reconstructor::from_stream(&decoded).image_at(tick as u64, PHI).map_err(js)?;
        Ok(Trial {
            ratio: compression_ratio(&self.stream, &enc),
            compressed_bytes: enc.len(),
            distance,
            psnr: psnr(&a, &b, PHI).map_err(js)?,
            ssim: ssim(&a, &b, PHI).map_err(js)?,
            image: rgba(&b.to_gray(PHI)),
        })
    }
}

/// Effective quantiser step `max(1, qp * t^2 / (2 phi + t))` for
/// `t = 1..=max_t`.
#[wasm_bindgen]
pub fn step_curve(phi: f64, qp: u8, max_t: u32) -> Result<Vec<f64>, JsError> {
    (1..=max_t)
        .map(|t| q_step(t as f64, phi).map(|s| (qp as f64 * s).max(1.0)))
        .collect::<spikec::Result<Vec<f64>>>()
        .map_err(js)
}
