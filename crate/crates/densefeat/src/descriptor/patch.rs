//! Measurement-region scaling and patch extraction. A keypoint's detection
//! radius (its sigma) is enlarged by a per-detector-family factor tied to the
//! patch resolution, and the enlarged square region is resampled bilinearly.

use crate::error::{Error, Result};
use crate::img::GrayImage;
use crate::keypoint::{DetectorId, Keypoint};

/// Conversion from patch side to measurement-region scaling factor. Each
/// variant covers the detector group sharing the rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingRule {
    /// s = (p-1)/20: dense grids and scale-selected blob or region detectors,
    /// whose unit measurement region spans 21 pixels.
    Region21,
    /// s = p/2.88: corner and difference-of-gaussians points.
    CornerPoint,
    /// s = (p-1)/3: edge-focused samplers with a fine 1.5-pixel unit radius.
    EdgePoint,
    /// s = p/11: moment-filter responses, whose unit region is the 11-pixel
    /// filter itself.
    MomentFilter,
}

impl ScalingRule {
    pub fn for_detector(d: DetectorId) -> ScalingRule {
        match d {
            DetectorId::Dense
            | DetectorId::DenseIp
            | DetectorId::Hessian
            | DetectorId::Mser
            | DetectorId::Ssr => ScalingRule::Region21,
            DetectorId::Harris | DetectorId::Frobenius | DetectorId::Dog => {
                ScalingRule::CornerPoint
            }
            DetectorId::DenseL2Norm
            | DetectorId::MserEdge
            | DetectorId::SsrEdge
            | DetectorId::FastEdge => ScalingRule::EdgePoint,
            DetectorId::Zernike => ScalingRule::MomentFilter,
        }
    }
}

/// Scaling factor for a detector family at patch side `p`.
pub fn patch_to_scale(family: ScalingRule, p: usize) -> Result<f64> {
    if p < 5 {
        return Err(Error::param(format!("patch side {p} below minimum 5")));
    }
    let p = p as f64;
    Ok(match family {
        ScalingRule::Region21 => (p - 1.0) / 20.0,
        ScalingRule::CornerPoint => p / 2.88,
        ScalingRule::EdgePoint => (p - 1.0) / 3.0,
        ScalingRule::MomentFilter => p / 11.0,
    })
}

/// Square raster resampled from the measurement region around a keypoint.
#[derive(Debug, Clone)]
pub struct Patch {
    pub side: usize,
    /// side*side values, row-major.
    pub data: Vec<f32>,
    pub source: Keypoint,
}

/// Resamples the scaled measurement region around `kp` to a `p` by `p` patch.
/// The region radius is the scaling factor times the keypoint's sigma; a
/// region leaving the pixel-center rectangle is discarded (None).
pub fn extract_patch(
    img: &GrayImage,
    kp: &Keypoint,
    family: ScalingRule,
    p: usize,
) -> Result<Option<Patch>> {
    let s = patch_to_scale(family, p)?;
    let r = s * kp.sigma as f64;
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (x, y) = (kp.x as f64, kp.y as f64);
    if x - r < 0.0 || x + r > w - 1.0 || y - r < 0.0 || y + r > h - 1.0 {
        return Ok(None);
    }
    let spacing = 2.0 * r / (p - 1) as f64;
    let half = (p - 1) as f64 / 2.0;
    let mut data = Vec::with_capacity(p * p);
    for j in 0..p {
        let fy = y + (j as f64 - half) * spacing;
        for i in 0..p {
            let fx = x + (i as f64 - half) * spacing;
            data.push(img.bilinear(fx as f32, fy as f32));
        }
    }
    Ok(Some(Patch {
        side: p,
        data,
        source: *kp,
    }))
}
