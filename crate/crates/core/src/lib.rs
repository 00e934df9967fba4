//! Super-resolution of block-averaged images.
//!
//! The crate covers the block-average codec, threshold-gated conditional
//! interpolation, motion-kernel deconvolution, stage pipelines with a
//! parameter search, and wavelet sparsity baselines.

pub mod codec;
pub mod deconv;
pub mod error;
pub mod interp;
pub mod pipeline;
pub mod raster;
pub mod search;
pub mod sparsity;

pub use codec::{compress, expand, read_lab, write_lab, BlockAverageImage};
pub use error::{Error, Result};
pub use interp::{Geometry, ThresholdTriple};
pub use pipeline::{PipelineSpec, Stage};
pub use raster::{RasterImage, RealPlane};
