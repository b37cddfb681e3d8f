//! Full-reference quality assessment for stereoscopic (3D) video.
//!
//! The metric models binocular fusion: matched blocks from the two views are
//! merged in the DCT domain into a cyclopean view, weighted by a contrast
//! sensitivity mask, and compared between reference and distorted sequences
//! with a block SSIM. Depth quality is judged on the disparity maps through
//! VIF and a local-variance saliency term, and the three components combine
//! through trained exponents into a per-frame score that is pooled over time
//! with an exponentially weighted Minkowski mean.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`video_io`]: raw YUV420p ingestion, 8-bit disparity maps, manifests
//! - [`dct_csf`]: orthonormal DCT kernels, two-view fusion, CSF weighting
//! - [`matching`]: disparity-seeded block correspondence search
//! - [`quality2d`]: block SSIM, pixel-domain multiscale VIF, PSNR
//! - [`metric`]: per-frame cyclopean/depth quality and sequence scoring
//! - [`pooling`]: temporal Minkowski pooling with recency weights
//! - [`stats`]: logistic MOS mapping and agreement statistics
//! - [`train`]: grid searches for exponents and pooling settings
//! - [`distort`]: deterministic seeded noise/blur/brightness generators
//! - [`synth`]: synthetic stereo fixtures with known disparity

pub mod dct_csf;
pub mod distort;
mod error;
pub mod matching;
pub mod metric;
pub mod pooling;
pub mod quality2d;
pub mod stats;
pub mod synth;
pub mod train;
pub mod video_io;

pub use error::{Error, Result};
