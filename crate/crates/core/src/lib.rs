//! Lossless and lossy compression of spike camera streams.
//!
//! A spike camera fires a binary spike whenever a pixel's accumulated light
//! reaches a threshold, so each pixel is a train of inter-spike intervals
//! (ISIs). The codec splits each pixel's ISIs into statistically uniform
//! segments, predicts every segment from the pixel's own history or from a
//! causal neighbour, quantises the residuals with a step matched to the
//! intensity sensitivity of the interval and entropy codes the result.
//!
//! ```
//! use spikec::{codec, simulator};
//!
//! let scene = simulator::StaticScene::uniform(8, 8, 25.5).unwrap();
//! let stream = simulator::simulate(&scene, &Default::default(), 2000).unwrap();
//! let cfg = codec::CodecConfig { lossless: true, ..Default::default() };
//! let encoded = codec::encode(&stream, &cfg).unwrap();
//! assert_eq!(codec::decode(&encoded).unwrap(), stream);
//! ```

pub mod codec;
pub mod entropy;
pub mod error;
pub mod metrics;
pub mod partitioner;
pub mod predictor;
pub mod quantizer;
pub mod simulator;
pub mod spike_model;

pub use codec::{decode, encode, CodecConfig, EncodedStream};
pub use error::{Error, Result};
pub use spike_model::{IsiSequence, Pixel, SpikeStream};
