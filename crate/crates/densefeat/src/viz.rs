//! Keypoint overlays: squares for fixed-scale detectors, circles for
//! scale-selecting ones, drawn on an RGB copy of the source image.

use std::path::Path;

use crate::error::Result;
use crate::img::{load_image, save_rgb_png, GrayImage};
use crate::keypoint::{read_keypoints, Keypoint, Polarity};

const MAX_COLOR: [u8; 3] = [220, 40, 30];
const MIN_COLOR: [u8; 3] = [40, 90, 230];
const PLAIN_COLOR: [u8; 3] = [40, 180, 70];

fn color_of(p: Polarity) -> [u8; 3] {
    match p {
        Polarity::Max => MAX_COLOR,
        Polarity::Min => MIN_COLOR,
        Polarity::NoPolarity => PLAIN_COLOR,
    }
}

struct Overlay {
    w: i64,
    h: i64,
    rgb: Vec<u8>,
}

impl Overlay {
    fn new(img: &GrayImage) -> Overlay {
        let rgb = img
            .data()
            .iter()
            .flat_map(|&v| {
                let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                [g, g, g]
            })
            .collect();
        Overlay {
            w: img.width() as i64,
            h: img.height() as i64,
            rgb,
        }
    }

    fn set(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && x < self.w && y < self.h {
            let i = ((y * self.w + x) * 3) as usize;
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    /// Axis-aligned square outline with half side `half`.
    fn square(&mut self, cx: i64, cy: i64, half: i64, c: [u8; 3]) {
        for d in -half..=half {
            self.set(cx + d, cy - half, c);
            self.set(cx + d, cy + half, c);
            self.set(cx - half, cy + d, c);
            self.set(cx + half, cy + d, c);
        }
    }

    fn circle(&mut self, cx: i64, cy: i64, r: f32, c: [u8; 3]) {
        let steps = ((std::f32::consts::TAU * r).ceil() as usize * 2).max(16);
        for i in 0..steps {
            let a = i as f32 / steps as f32 * std::f32::consts::TAU;
            self.set(
                cx + (r * a.cos()).round() as i64,
                cy + (r * a.sin()).round() as i64,
                c,
            );
        }
    }
}

/// Draws markers for `kps` (optionally only scale_index 0) over the image.
/// Returns the RGB rows and the number of keypoints drawn; markers clip at
/// the borders rather than dropping.
pub fn overlay_keypoints(
    img: &GrayImage,
    kps: &[Keypoint],
    first_scale_only: bool,
) -> (Vec<u8>, usize) {
    let mut canvas = Overlay::new(img);
    let mut drawn = 0usize;
    for kp in kps {
        if first_scale_only && kp.scale_index != 0 {
            continue;
        }
        let c = color_of(kp.polarity);
        let (cx, cy) = (kp.x.round() as i64, kp.y.round() as i64);
        canvas.set(cx, cy, c);
        if kp.detector.is_fixed_scale() {
            canvas.square(cx, cy, kp.sigma.round().max(1.0) as i64, c);
        } else {
            canvas.circle(cx, cy, kp.sigma.max(1.0), c);
        }
        drawn += 1;
    }
    (canvas.rgb, drawn)
}

/// File-level wrapper: image plus keypoint file to overlay PNG. Returns the
/// marker count.
pub fn visualize(
    img_path: &Path,
    kp_path: &Path,
    out_path: &Path,
    first_scale_only: bool,
) -> Result<usize> {
    let img = load_image(img_path)?;
    let kps = read_keypoints(kp_path)?;
    let (rgb, drawn) = overlay_keypoints(&img, &kps, first_scale_only);
    save_rgb_png(out_path, img.width(), img.height(), &rgb)?;
    Ok(drawn)
}
