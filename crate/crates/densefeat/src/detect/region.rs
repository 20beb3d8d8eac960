//! Pixel regions, equivalent-ellipse keypoints, and region-boundary edge
//! maps.

use crate::keypoint::{DetectorId, Keypoint, Polarity};

use super::edges::EdgeMap;

/// Connected pixel set with the polarity of its extremal detection. Min is
/// dark-on-bright, Max is bright-on-dark, NoPolarity marks plain segments.
#[derive(Debug, Clone)]
pub struct Region {
    /// Row-major sorted, 4-connected, inside image bounds.
    pub pixels: Vec<(u32, u32)>,
    pub polarity: Polarity,
    pub stability: f64,
    /// Quantized intensity level the region was detected at; 0 for
    /// segmentation output.
    pub threshold: u8,
}

impl Region {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

pub(crate) struct Moments {
    pub cx: f64,
    pub cy: f64,
    pub mxx: f64,
    pub mxy: f64,
    pub myy: f64,
}

pub(crate) fn region_moments(region: &Region) -> Moments {
    let n = region.pixels.len() as f64;
    let (mut sx, mut sy) = (0.0f64, 0.0f64);
    for &(x, y) in &region.pixels {
        sx += x as f64;
        sy += y as f64;
    }
    let (cx, cy) = (sx / n, sy / n);
    let (mut mxx, mut mxy, mut myy) = (0.0f64, 0.0f64, 0.0f64);
    for &(x, y) in &region.pixels {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        mxx += dx * dx;
        mxy += dx * dy;
        myy += dy * dy;
    }
    Moments {
        cx,
        cy,
        mxx: mxx / n,
        mxy: mxy / n,
        myy: myy / n,
    }
}

/// Centroid keypoint whose sigma is twice the geometric mean of the
/// equivalent ellipse semi-axes, floored at 1.0. Upright fits use only the
/// axis-aligned standard deviations and are tagged as segmentation regions;
/// general fits use the full second-moment ellipse.
pub fn fit_ellipse(region: &Region, upright: bool) -> Keypoint {
    assert!(!region.pixels.is_empty());
    let m = region_moments(region);
    let det = if upright {
        m.mxx * m.myy
    } else {
        (m.mxx * m.myy - m.mxy * m.mxy).max(0.0)
    };
    let sigma = (2.0 * det.powf(0.25)).max(1.0);
    Keypoint {
        x: m.cx as f32,
        y: m.cy as f32,
        sigma: sigma as f32,
        response: region.stability as f32,
        scale_index: 0,
        detector: if upright {
            DetectorId::Ssr
        } else {
            DetectorId::Mser
        },
        polarity: region.polarity,
    }
}

/// Groups a compact label map into regions ordered by label. Labels are
/// expected to be numbered by first row-major occurrence.
pub fn labels_to_regions(labels: &[u32], width: usize, height: usize) -> Vec<Region> {
    assert_eq!(labels.len(), width * height);
    let n = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut pixels: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for y in 0..height {
        for x in 0..width {
            pixels[labels[y * width + x] as usize].push((x as u32, y as u32));
        }
    }
    pixels
        .into_iter()
        .map(|p| Region {
            pixels: p,
            polarity: Polarity::NoPolarity,
            stability: 0.0,
            threshold: 0,
        })
        .collect()
}

/// Marks interior pixels that have a 4-neighbor with a different label.
/// Image-frame pixels are never edges.
pub fn edge_map_from_labels(labels: &[u32], width: usize, height: usize) -> EdgeMap {
    assert_eq!(labels.len(), width * height);
    let mut strength = vec![0.0f32; width * height];
    for y in 1..height.saturating_sub(1) {
        for x in 1..width.saturating_sub(1) {
            let c = labels[y * width + x];
            let differs = labels[y * width + x - 1] != c
                || labels[y * width + x + 1] != c
                || labels[(y - 1) * width + x] != c
                || labels[(y + 1) * width + x] != c;
            if differs {
                strength[y * width + x] = 1.0;
            }
        }
    }
    EdgeMap::new(width, height, strength).unwrap()
}

/// Marks interior pixels of each region that have a 4-neighbor outside that
/// region; overlapping regions contribute the union of their borders.
/// Image-frame pixels are never edges.
pub fn edge_map_from_regions(regions: &[Region], width: usize, height: usize) -> EdgeMap {
    let mut strength = vec![0.0f32; width * height];
    let mut member = vec![false; width * height];
    for region in regions {
        for &(x, y) in &region.pixels {
            member[y as usize * width + x as usize] = true;
        }
        for &(x, y) in &region.pixels {
            let (x, y) = (x as usize, y as usize);
            if x == 0 || y == 0 || x + 1 == width || y + 1 == height {
                continue;
            }
            let outside = !member[y * width + x - 1]
                || !member[y * width + x + 1]
                || !member[(y - 1) * width + x]
                || !member[(y + 1) * width + x];
            if outside {
                strength[y * width + x] = 1.0;
            }
        }
        for &(x, y) in &region.pixels {
            member[y as usize * width + x as usize] = false;
        }
    }
    EdgeMap::new(width, height, strength).unwrap()
}
