//! Separable Gaussian smoothing, finite-difference derivatives, and direct
//! 2-D convolution. All border handling mirrors the image without repeating
//! the edge pixel.

use rayon::prelude::*;

use crate::img::GrayImage;
use crate::response::ResponseMap;

/// Mirror index without repeating the edge sample: -1 maps to 1, n maps to n-2.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * n - 2;
    let i = i.rem_euclid(period);
    if i >= n {
        (period - i) as usize
    } else {
        i as usize
    }
}

/// Sampled Gaussian, radius ceil(3 sigma), normalized to sum exactly 1 in f64.
pub fn gaussian_kernel(sigma: f32) -> Vec<f64> {
    assert!(sigma > 0.0 && sigma.is_finite());
    let r = (3.0 * sigma as f64).ceil() as usize;
    let s2 = 2.0 * (sigma as f64) * (sigma as f64);
    let mut k: Vec<f64> = (0..=2 * r)
        .map(|i| {
            let d = i as f64 - r as f64;
            (-d * d / s2).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// One horizontal then one vertical pass with the same kernel, f64 accumulation.
pub(crate) fn convolve_sep(values: &[f32], w: usize, h: usize, kernel: &[f64]) -> Vec<f32> {
    assert_eq!(values.len(), w * h);
    let r = kernel.len() / 2;

    let mut tmp = vec![0.0f32; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let src = &values[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for (i, &k) in kernel.iter().enumerate() {
                let sx = reflect(x as isize + i as isize - r as isize, w);
                acc += k * src[sx] as f64;
            }
            *out = acc as f32;
        }
    });

    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for (i, &k) in kernel.iter().enumerate() {
                let sy = reflect(y as isize + i as isize - r as isize, h);
                acc += k * tmp[sy * w + x] as f64;
            }
            *o = acc as f32;
        }
    });
    out
}

pub(crate) fn blur_slice(values: &[f32], w: usize, h: usize, sigma: f32) -> Vec<f32> {
    if !sigma.is_finite() || sigma <= 0.0 {
        log::warn!("gaussian_blur called with sigma {sigma}, returning input unchanged");
        return values.to_vec();
    }
    convolve_sep(values, w, h, &gaussian_kernel(sigma))
}

pub fn gaussian_blur(img: &GrayImage, sigma: f32) -> GrayImage {
    let data = blur_slice(img.data(), img.width(), img.height(), sigma);
    GrayImage::new(img.width(), img.height(), data).unwrap()
}

/// Central differences (half the two-pixel span), mirrored at the borders.
pub(crate) fn central_diff(values: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let at = |x: isize, y: isize| values[reflect(y, h) * w + reflect(x, w)];
    let mut dx = vec![0.0f32; w * h];
    let mut dy = vec![0.0f32; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            dx[i] = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            dy[i] = (at(x, y + 1) - at(x, y - 1)) / 2.0;
        }
    }
    (dx, dy)
}

/// First derivatives of the sigma_d-smoothed image.
pub fn gradients(img: &GrayImage, sigma_d: f32) -> (ResponseMap, ResponseMap) {
    let (w, h) = (img.width(), img.height());
    let smoothed = blur_slice(img.data(), w, h, sigma_d);
    let (dx, dy) = central_diff(&smoothed, w, h);
    (ResponseMap::new(w, h, dx, 0), ResponseMap::new(w, h, dy, 0))
}

/// Second derivatives (Lxx, Lxy, Lyy) of an already-smoothed value grid.
pub(crate) fn second_derivs(values: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>, Vec<f32>) {
    let at = |x: isize, y: isize| values[reflect(y, h) * w + reflect(x, w)];
    let mut lxx = vec![0.0f32; w * h];
    let mut lxy = vec![0.0f32; w * h];
    let mut lyy = vec![0.0f32; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let c = at(x, y);
            lxx[i] = at(x + 1, y) - 2.0 * c + at(x - 1, y);
            lyy[i] = at(x, y + 1) - 2.0 * c + at(x, y - 1);
            lxy[i] = (at(x + 1, y + 1) + at(x - 1, y - 1) - at(x + 1, y - 1) - at(x - 1, y + 1))
                / 4.0;
        }
    }
    (lxx, lxy, lyy)
}

/// Direct 2-D correlation with a square odd-sided kernel, mirrored borders,
/// f64 accumulation. `scale` multiplies every input sample.
pub(crate) fn convolve2d(
    values: &[f32],
    w: usize,
    h: usize,
    kernel: &[f64],
    side: usize,
    scale: f64,
) -> Vec<f32> {
    assert_eq!(kernel.len(), side * side);
    assert!(side % 2 == 1);
    let r = (side / 2) as isize;
    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let y = y as isize;
        for (x, o) in row.iter_mut().enumerate() {
            let x = x as isize;
            let mut acc = 0.0f64;
            for ky in -r..=r {
                let sy = reflect(y + ky, h) * w;
                let krow = ((ky + r) as usize) * side;
                for kx in -r..=r {
                    let sx = reflect(x + kx, w);
                    acc += kernel[krow + (kx + r) as usize] * values[sy + sx] as f64;
                }
            }
            *o = (acc * scale) as f32;
        }
    });
    out
}
