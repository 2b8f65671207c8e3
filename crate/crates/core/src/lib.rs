//! Defocus-blur segmentation: DCT sharpness maps, PCNN clustering,
//! precision/recall evaluation and EDAS ranking.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dct;
pub mod edas;
pub mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod pcnn;
pub mod segment;
pub mod synth;

pub use config::Config;
pub use dct::{blur_map, BlurMap, BlurMapConfig};
pub use error::{Error, Result};
pub use image::GrayImage;
pub use segment::{segment, PipelineConfig, SegmentationMask};
