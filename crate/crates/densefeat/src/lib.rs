//! Dense local-feature detection and retrieval toolkit: a family of keypoint
//! detectors (corner, blob, region-boundary, filter-bank, and dense samplers)
//! feeding a patch-descriptor, VLAD-encoding, and mean-average-precision
//! evaluation pipeline.

pub mod config;
pub mod descriptor;
pub mod detect;
pub mod driver;
pub mod encode;
pub mod eval;
pub mod error;
pub mod filtering;
pub mod img;
pub mod io;
pub mod keypoint;
pub mod plot;
pub mod response;
pub mod scale;
pub mod sweep;
pub mod viz;

pub use error::{Error, Result};
