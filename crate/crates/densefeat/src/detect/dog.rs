//! Difference-of-Gaussians detector: per-octave blur ladder, consecutive
//! differences, 3x3x3 extrema of both polarities. Every extremum above the
//! contrast threshold is kept, with no edge elimination and no sub-pixel
//! refinement, to favor dense output.

use crate::filtering::blur_slice;
use crate::img::GrayImage;
use crate::keypoint::{DetectorId, Keypoint, Polarity};
use crate::response::RESPONSE_INTENSITY_SCALE;

/// Blur of the first ladder image in every octave.
const BASE_SIGMA: f32 = 1.6;
/// Blur assumed already present in the input image.
const INPUT_SIGMA: f32 = 0.5;
/// Octaves stop once a side would shrink under this.
const MIN_OCTAVE_SIDE: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct DogParams {
    /// Intervals per octave (the classical S); S+3 blurred images and S+2
    /// difference layers are built per octave.
    pub scales_per_octave: usize,
    pub n_octaves: usize,
    /// Contrast threshold on |response|, in 8-bit intensity units.
    pub tau: f32,
}

impl Default for DogParams {
    fn default() -> Self {
        DogParams {
            scales_per_octave: 3,
            n_octaves: 4,
            tau: 0.1,
        }
    }
}

struct Octave {
    w: usize,
    h: usize,
    /// S+2 difference layers, each w*h.
    dogs: Vec<Vec<f32>>,
}

fn build_octaves(img: &GrayImage, p: &DogParams) -> Vec<Octave> {
    let s = p.scales_per_octave;
    let k = 2.0f64.powf(1.0 / s as f64);

    let mut base: Vec<f32> = img
        .data()
        .iter()
        .map(|&v| v * RESPONSE_INTENSITY_SCALE)
        .collect();
    let (mut w, mut h) = (img.width(), img.height());
    // Bring the input up to BASE_SIGMA assuming it already carries INPUT_SIGMA.
    let boost = (BASE_SIGMA * BASE_SIGMA - INPUT_SIGMA * INPUT_SIGMA).sqrt();
    base = blur_slice(&base, w, h, boost);

    let mut octaves = Vec::new();
    for _ in 0..p.n_octaves {
        if w < MIN_OCTAVE_SIDE || h < MIN_OCTAVE_SIDE {
            break;
        }
        let mut gauss = vec![base.clone()];
        for i in 1..=s + 2 {
            let prev_sigma = BASE_SIGMA as f64 * k.powi(i as i32 - 1);
            let next_sigma = BASE_SIGMA as f64 * k.powi(i as i32);
            let inc = ((next_sigma * next_sigma - prev_sigma * prev_sigma).sqrt()) as f32;
            let blurred = blur_slice(gauss.last().unwrap(), w, h, inc);
            gauss.push(blurred);
        }
        // Finer minus coarser, so bright blobs read as maxima and dark blobs
        // as minima.
        let dogs = gauss
            .windows(2)
            .map(|pair| pair[0].iter().zip(&pair[1]).map(|(a, b)| a - b).collect())
            .collect();
        octaves.push(Octave { w, h, dogs });

        // Next octave: the ladder image at twice the base blur, decimated by
        // keeping every other pixel.
        let doubled = &gauss[s];
        let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
        let mut next = Vec::with_capacity(nw * nh);
        for y in 0..nh {
            for x in 0..nw {
                next.push(doubled[(y * 2) * w + x * 2]);
            }
        }
        base = next;
        w = nw;
        h = nh;
    }
    octaves
}

/// 3-D strict extrema over the 26 neighbors in the difference stack, both
/// polarities, |response| >= tau. Coordinates are mapped back to the
/// original resolution; sigma is the ladder blur of the layer the point was
/// found in.
pub fn detect_dog(img: &GrayImage, p: &DogParams) -> Vec<Keypoint> {
    assert!(p.scales_per_octave >= 1 && p.n_octaves >= 1 && p.tau >= 0.0);
    let s = p.scales_per_octave;
    let k = 2.0f64.powf(1.0 / s as f64);
    let octaves = build_octaves(img, p);

    let mut out = Vec::new();
    for (oi, oct) in octaves.iter().enumerate() {
        let (w, h) = (oct.w, oct.h);
        if w < 3 || h < 3 {
            continue;
        }
        let step = 1usize << oi;
        for li in 1..=s {
            let cur = &oct.dogs[li];
            let below = &oct.dogs[li - 1];
            let above = &oct.dogs[li + 1];
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let c = cur[y * w + x];
                    if c.abs() < p.tau {
                        continue;
                    }
                    let mut is_max = true;
                    let mut is_min = true;
                    'scan: for (wi, layer) in [below, cur, above].into_iter().enumerate() {
                        for dy in -1isize..=1 {
                            for dx in -1isize..=1 {
                                if wi == 1 && dx == 0 && dy == 0 {
                                    continue;
                                }
                                let n = layer
                                    [(y as isize + dy) as usize * w + (x as isize + dx) as usize];
                                if c <= n {
                                    is_max = false;
                                }
                                if c >= n {
                                    is_min = false;
                                }
                                if !is_max && !is_min {
                                    break 'scan;
                                }
                            }
                        }
                    }
                    if is_max || is_min {
                        let sigma = (BASE_SIGMA as f64 * k.powi(li as i32)) as f32
                            * step as f32;
                        out.push(Keypoint {
                            x: (x * step) as f32,
                            y: (y * step) as f32,
                            sigma,
                            response: c,
                            scale_index: (oi * s + (li - 1)) as u32,
                            detector: DetectorId::Dog,
                            polarity: if is_max { Polarity::Max } else { Polarity::Min },
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_yields_nothing() {
        let img = GrayImage::filled(64, 64, 0.6);
        assert!(detect_dog(&img, &DogParams::default()).is_empty());
    }

    #[test]
    fn bright_dot_is_a_maximum() {
        // Blob sigma 2.83 sits inside the scanned band; without an upsampled
        // pre-octave the first searchable layer is already sigma 2.0, so
        // anything much finer peaks below the band and is invisible.
        let img = GrayImage::from_fn(64, 64, |x, y| {
            let dx = x as f32 - 31.0;
            let dy = y as f32 - 31.0;
            0.05 + 0.9 * (-(dx * dx + dy * dy) / 16.0).exp()
        });
        let kps = detect_dog(&img, &DogParams::default());
        assert!(kps
            .iter()
            .any(|k| k.polarity == Polarity::Max
                && (k.x - 31.0).abs() <= 2.0
                && (k.y - 31.0).abs() <= 2.0));
    }

    #[test]
    fn threshold_nesting() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let img = GrayImage::from_fn(48, 48, |_, _| rng.random::<f32>());
        let loose = detect_dog(
            &img,
            &DogParams {
                tau: 0.1,
                ..Default::default()
            },
        );
        let tight = detect_dog(
            &img,
            &DogParams {
                tau: 0.3,
                ..Default::default()
            },
        );
        assert!(tight.len() <= loose.len());
        for kp in &tight {
            assert!(loose
                .iter()
                .any(|l| l.x == kp.x && l.y == kp.y && l.scale_index == kp.scale_index));
        }
    }

    #[test]
    fn both_polarities_appear() {
        let img = GrayImage::from_fn(64, 64, |x, y| {
            let bright = ((x as f32 - 16.0).powi(2) + (y as f32 - 16.0).powi(2)) / 16.0;
            let dark = ((x as f32 - 47.0).powi(2) + (y as f32 - 47.0).powi(2)) / 16.0;
            (0.5 + 0.45 * (-bright).exp() - 0.45 * (-dark).exp()).clamp(0.0, 1.0)
        });
        let kps = detect_dog(&img, &DogParams::default());
        assert!(kps.iter().any(|k| k.polarity == Polarity::Max));
        assert!(kps.iter().any(|k| k.polarity == Polarity::Min));
    }

    #[test]
    fn coordinates_stay_in_bounds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let img = GrayImage::from_fn(50, 34, |_, _| rng.random::<f32>());
        for kp in detect_dog(&img, &DogParams::default()) {
            assert!(kp.x >= 0.0 && kp.x < 50.0);
            assert!(kp.y >= 0.0 && kp.y < 34.0);
            assert!(kp.sigma > 0.0);
        }
    }
}
