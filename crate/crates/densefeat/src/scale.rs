//! Multi-scale image stack: repeated 1/sqrt(2) downsampling, two levels per
//! octave, with a light anti-alias blur before each decimation.

use crate::filtering::gaussian_blur;
use crate::img::GrayImage;

pub const DEFAULT_N_SIGMA: usize = 5;

/// Blur applied before every decimation step to suppress aliasing.
const PRE_DECIMATION_SIGMA: f32 = 0.8;

/// Levels are dropped once a side would shrink under this.
const MIN_LEVEL_SIDE: usize = 8;

const SQRT2: f64 = std::f64::consts::SQRT_2;

pub struct ScaleStack {
    levels: Vec<GrayImage>,
}

impl ScaleStack {
    /// Builds up to `n_sigma` levels. Level 0 is the input itself; each next
    /// level is the previous one blurred and resized by a linear factor of
    /// 1/sqrt(2), so areas halve. Levels that would fall under 8 pixels on a
    /// side are dropped, which can leave fewer than `n_sigma` levels.
    pub fn build(img: &GrayImage, n_sigma: usize) -> ScaleStack {
        assert!(n_sigma >= 1);
        let mut levels = vec![img.clone()];
        while levels.len() < n_sigma {
            let prev = levels.last().unwrap();
            let nw = (prev.width() as f64 / SQRT2).round() as usize;
            let nh = (prev.height() as f64 / SQRT2).round() as usize;
            if nw < MIN_LEVEL_SIDE || nh < MIN_LEVEL_SIDE {
                break;
            }
            let blurred = gaussian_blur(prev, PRE_DECIMATION_SIGMA);
            levels.push(blurred.resize_bilinear(nw, nh));
        }
        ScaleStack { levels }
    }

    pub fn n_sigma(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, i: usize) -> &GrayImage {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    /// Nominal linear magnification of level `i` relative to the original:
    /// sqrt(2)^i. Detection radii scale by this.
    pub fn nominal_factor(i: usize) -> f32 {
        SQRT2.powi(i as i32) as f32
    }

    /// Maps level-`i` pixel coordinates to original-image coordinates using
    /// the actual (rounded) level dimensions and pixel-center alignment.
    pub fn to_original(&self, i: usize, x: f32, y: f32) -> (f32, f32) {
        let l = &self.levels[i];
        let o = &self.levels[0];
        let mx = o.width() as f32 / l.width() as f32;
        let my = o.height() as f32 / l.height() as f32;
        ((x + 0.5) * mx - 0.5, (y + 0.5) * my - 0.5)
    }
}
