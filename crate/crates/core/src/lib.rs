//! Inference engine for a lightweight VITS-family text-to-speech model.
//!
//! Text tokens pass through a transformer encoder whose layers share
//! parameters in groups, a deterministic duration predictor, a mean-only
//! coupling flow with group-shared WaveNet projections, and a ConvNeXt
//! decoder that predicts Fourier magnitude and phase for an iSTFT. A
//! HiFi-GAN-shaped transposed-convolution decoder is included as the speed
//! baseline.

pub mod decoder;
pub mod duration;
pub mod error;
pub mod losses;
pub mod nnkit;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod prior_flow;
pub mod runtime;
pub mod spectral;
pub mod tensor;
pub mod text_encoder;

pub use error::{Error, Result};
pub use runtime::{ModelConfig, WeightStore};
pub use spectral::{SpectralFrames, StftConfig, Waveform};
pub use tensor::FrameTensor;
pub use text_encoder::TokenSeq;
