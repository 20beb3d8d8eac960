//! Keypoint detectors: corner and blob interest points, the filter-bank
//! detector, dense samplers, and region/edge based detectors.

pub mod dense;
pub mod dog;
pub mod edges;
pub mod harris;
pub mod mser;
pub mod region;
pub mod segment;
pub mod zernike;
