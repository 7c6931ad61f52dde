//! Unwanted-content detection for video by majority voting over per-channel
//! linear classifiers.

pub mod classify;
pub mod codebook;
pub mod error;
pub mod eval;
pub mod features;
pub mod media_io;
pub mod pipeline;
pub mod seed;
pub mod segmentation;
pub mod stip;

pub use error::{Error, Result};
