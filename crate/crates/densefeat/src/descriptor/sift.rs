//! Up-right SIFT over a fixed patch: 4x4 spatial cells, 8 orientation bins,
//! Gaussian-weighted gradient magnitudes with trilinear spreading. No
//! rotation normalization, no clipping, no normalization of the raw vector;
//! its norm is meaningful downstream.

use std::f32::consts::TAU;

use super::patch::Patch;
use super::{DescState, Descriptor};
use crate::filtering::central_diff;
use crate::response::RESPONSE_INTENSITY_SCALE;

const CELLS: usize = 4;
const ORI_BINS: usize = 8;
pub const DESCRIPTOR_DIM: usize = CELLS * CELLS * ORI_BINS;

/// Raw descriptor of a patch. Gradient magnitudes count in 8-bit intensity
/// units; the Gaussian window has sigma of half the side, centered.
pub fn sift(patch: &Patch) -> Descriptor {
    assert!(patch.side >= 8, "patch side {} below minimum 8", patch.side);
    let p = patch.side;
    let (gx, gy) = central_diff(&patch.data, p, p);

    let center = (p - 1) as f32 / 2.0;
    let sigma = p as f32 / 2.0;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    // Cell pitch p/4; cell centers sit at fractional coordinates 0..3 with
    // the patch center falling between cells 1 and 2.
    let pitch = p as f32 / CELLS as f32;

    let mut acc = [0.0f64; DESCRIPTOR_DIM];
    for y in 0..p {
        for x in 0..p {
            let i = y * p + x;
            let (dx, dy) = (gx[i], gy[i]);
            let mag =
                (dx * dx + dy * dy).sqrt() * RESPONSE_INTENSITY_SCALE;
            if mag == 0.0 {
                continue;
            }
            let (fx, fy) = (x as f32 - center, y as f32 - center);
            let w = (-(fx * fx + fy * fy) * inv_two_sigma2).exp();

            let cx = fx / pitch + 1.5;
            let cy = fy / pitch + 1.5;
            let mut o = dy.atan2(dx) / TAU * ORI_BINS as f32;
            if o < 0.0 {
                o += ORI_BINS as f32;
            }

            let (cx0, cxf) = (cx.floor(), cx - cx.floor());
            let (cy0, cyf) = (cy.floor(), cy - cy.floor());
            let (o0, of) = (o.floor(), o - o.floor());
            let o0 = o0 as usize % ORI_BINS;
            for (dcx, wx) in [(0i32, 1.0 - cxf), (1, cxf)] {
                let ix = cx0 as i32 + dcx;
                if !(0..CELLS as i32).contains(&ix) {
                    continue;
                }
                for (dcy, wy) in [(0i32, 1.0 - cyf), (1, cyf)] {
                    let iy = cy0 as i32 + dcy;
                    if !(0..CELLS as i32).contains(&iy) {
                        continue;
                    }
                    for (db, wo) in [(0usize, 1.0 - of), (1, of)] {
                        let bin = (o0 + db) % ORI_BINS;
                        let idx = (iy as usize * CELLS + ix as usize) * ORI_BINS + bin;
                        acc[idx] += (mag * w * wx * wy * wo) as f64;
                    }
                }
            }
        }
    }
    Descriptor {
        values: acc.iter().map(|&v| v as f32).collect(),
        state: DescState::Raw,
        source: patch.source,
    }
}
