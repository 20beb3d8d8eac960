//! Dense sampling detectors: regular grid, per-cell interest points, and
//! the descriptor-norm response detector.

use crate::error::{Error, Result};
use crate::img::GrayImage;
use crate::keypoint::{DetectorId, Keypoint, Polarity};
use crate::response::{local_extrema, NeighborhoodKind, ResponseMap, SearchPolarity};
use crate::scale::{ScaleStack, DEFAULT_N_SIGMA};

use super::harris::{harris_matrix_response, HarrisParams};

/// Detection radius of the dense family at the finest level; doubles the
/// descriptor measurement unit of 20 px.
pub const DENSE_UNIT_RADIUS: f32 = 10.0;
/// Detection radius of the descriptor-norm detector, from its unit size 3.
pub const L2NORM_UNIT_RADIUS: f32 = 1.5;

#[derive(Debug, Clone, Copy)]
pub struct DenseParams {
    pub delta_xy: usize,
    pub n_scales: usize,
}

impl Default for DenseParams {
    fn default() -> Self {
        DenseParams {
            delta_xy: 8,
            n_scales: DEFAULT_N_SIGMA,
        }
    }
}

impl DenseParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta_xy < 1 {
            return Err(Error::param("delta_xy must be at least 1"));
        }
        if self.n_scales < 1 {
            return Err(Error::param("n_scales must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Harris,
    Frobenius,
}

#[derive(Debug, Clone, Copy)]
pub struct DenseIpParams {
    pub cell: usize,
    pub search_scales: usize,
    pub response_kind: ResponseKind,
}

impl Default for DenseIpParams {
    fn default() -> Self {
        DenseIpParams {
            cell: 16,
            search_scales: DEFAULT_N_SIGMA,
            response_kind: ResponseKind::Frobenius,
        }
    }
}

impl DenseIpParams {
    pub fn validate(&self) -> Result<()> {
        if self.cell < 2 {
            return Err(Error::param("cell must be at least 2"));
        }
        if self.search_scales < 1 {
            return Err(Error::param("search_scales must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct L2NormParams {
    pub tau: f32,
    pub n_scales: usize,
    pub stride: usize,
}

impl Default for L2NormParams {
    fn default() -> Self {
        L2NormParams {
            tau: 0.0,
            n_scales: DEFAULT_N_SIGMA,
            stride: 1,
        }
    }
}

impl L2NormParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau must be finite and non-negative"));
        }
        if self.n_scales < 1 || self.stride < 1 {
            return Err(Error::param("n_scales and stride must be at least 1"));
        }
        Ok(())
    }
}

/// Grid points at delta/2 + i*delta on every level, mapped back to original
/// coordinates, with sigma growing with the level factor. Zero response, no
/// polarity.
pub fn detect_dense_grid(img: &GrayImage, p: &DenseParams) -> Vec<Keypoint> {
    let stack = ScaleStack::build(img, p.n_scales);
    let delta = p.delta_xy as f32;
    let mut out = Vec::new();
    for (li, level) in stack.levels().iter().enumerate() {
        let sigma = DENSE_UNIT_RADIUS * ScaleStack::nominal_factor(li);
        let (w, h) = (level.width() as f32, level.height() as f32);
        let mut y = delta / 2.0;
        while y < h {
            let mut x = delta / 2.0;
            while x < w {
                let (ox, oy) = stack.to_original(li, x, y);
                out.push(Keypoint {
                    x: ox,
                    y: oy,
                    sigma,
                    response: 0.0,
                    scale_index: li as u32,
                    detector: DetectorId::Dense,
                    polarity: Polarity::NoPolarity,
                });
                x += delta;
            }
            y += delta;
        }
    }
    out
}

/// Tiles the original-coordinate plane into square cells and keeps, per
/// cell, the response argmax over every pixel of every searched level
/// (levels clamped to the stack depth). Ties go to the smallest scale, then
/// to the smallest row-major pixel index on that level.
pub fn detect_dense_ip(img: &GrayImage, p: &DenseIpParams) -> Vec<Keypoint> {
    let stack = ScaleStack::build(img, p.search_scales);
    let hp = HarrisParams {
        use_frobenius: p.response_kind == ResponseKind::Frobenius,
        ..HarrisParams::default()
    };
    let cell = p.cell as f32;
    let n_cx = img.width().div_ceil(p.cell);
    let n_cy = img.height().div_ceil(p.cell);

    // value, level, row-major index, original x, original y
    type BestCell = Option<(f32, usize, usize, f32, f32)>;
    let mut best: Vec<BestCell> = vec![None; n_cx * n_cy];
    for (li, level) in stack.levels().iter().enumerate() {
        let resp = harris_matrix_response(level, &hp);
        let (w, h) = (level.width(), level.height());
        for y in 0..h {
            for x in 0..w {
                let v = resp.get(x, y);
                let (ox, oy) = stack.to_original(li, x as f32, y as f32);
                let cx = ((ox / cell) as usize).min(n_cx - 1);
                let cy = ((oy / cell) as usize).min(n_cy - 1);
                let slot = &mut best[cy * n_cx + cx];
                // Ascending level and row-major traversal means first-seen
                // wins all ties.
                if slot.is_none_or(|(bv, _, _, _, _)| v > bv) {
                    *slot = Some((v, li, y * w + x, ox, oy));
                }
            }
        }
    }

    let mut out = Vec::new();
    for slot in best.into_iter().flatten() {
        let (v, li, _, ox, oy) = slot;
        out.push(Keypoint {
            x: ox,
            y: oy,
            sigma: DENSE_UNIT_RADIUS * ScaleStack::nominal_factor(li),
            response: v,
            scale_index: li as u32,
            detector: DetectorId::DenseIp,
            polarity: Polarity::Max,
        });
    }
    out
}

/// Descriptor oracle: given a level image and a pixel on it, produce the
/// unnormalized descriptor for a patch centered there, or None when the
/// patch support leaves the image.
pub type Describer<'a> = dyn Fn(&GrayImage, usize, usize) -> Option<Vec<f32>> + Sync + 'a;

/// Evaluates the descriptor norm at every stride-th pixel of every level
/// (border misses score 0), then keeps strict 3x3 maxima at or above tau.
pub fn detect_dense_l2norm(
    img: &GrayImage,
    p: &L2NormParams,
    describer: &Describer,
) -> Vec<Keypoint> {
    use rayon::prelude::*;
    let stack = ScaleStack::build(img, p.n_scales);
    let mut out = Vec::new();
    for (li, level) in stack.levels().iter().enumerate() {
        let gw = level.width().div_ceil(p.stride);
        let gh = level.height().div_ceil(p.stride);
        let mut values = vec![0.0f32; gw * gh];
        values
            .par_chunks_mut(gw)
            .enumerate()
            .for_each(|(gy, row)| {
                let y = gy * p.stride;
                for (gx, v) in row.iter_mut().enumerate() {
                    let x = gx * p.stride;
                    *v = match describer(level, x, y) {
                        Some(d) => d.iter().map(|c| c * c).sum::<f32>().sqrt(),
                        None => 0.0,
                    };
                }
            });
        let resp = ResponseMap::new(gw, gh, values, li);
        let sigma = L2NORM_UNIT_RADIUS * ScaleStack::nominal_factor(li);
        for e in local_extrema(
            &resp,
            NeighborhoodKind::Strict3x3,
            p.tau,
            SearchPolarity::Maxima,
        ) {
            let (ox, oy) = stack.to_original(li, (e.x * p.stride) as f32, (e.y * p.stride) as f32);
            out.push(Keypoint {
                x: ox,
                y: oy,
                sigma,
                response: e.value,
                scale_index: li as u32,
                detector: DetectorId::DenseL2Norm,
                polarity: Polarity::Max,
            });
        }
    }
    out
}
