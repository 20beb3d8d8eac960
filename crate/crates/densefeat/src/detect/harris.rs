//! Second-moment-matrix (cornerness and Frobenius) and Hessian-determinant
//! detectors with Laplacian scale selection over a sigma ladder.

use rayon::prelude::*;

use crate::filtering::{blur_slice, central_diff, second_derivs};
use crate::img::GrayImage;
use crate::keypoint::{DetectorId, Keypoint, Polarity};
use crate::response::{
    local_extrema, NeighborhoodKind, ResponseMap, SearchPolarity, RESPONSE_INTENSITY_SCALE,
};

/// Scale ladder used for both detectors in this module: seven differentiation
/// scales, each 1.4 times the previous.
pub const LADDER_LEVELS: usize = 7;
pub const LADDER_RATIO: f32 = 1.4;

/// Ratio between integration and differentiation scale, sigma_d = 0.7 sigma_i.
pub const SIGMA_D_OVER_I: f32 = 0.7;

#[derive(Debug, Clone, Copy)]
pub struct HarrisParams {
    pub sigma_d: f32,
    pub sigma_i: f32,
    pub alpha: f32,
    pub tau: f32,
    pub use_frobenius: bool,
    pub relaxed: bool,
}

impl Default for HarrisParams {
    fn default() -> Self {
        HarrisParams {
            sigma_d: 1.0,
            sigma_i: 1.0 / SIGMA_D_OVER_I,
            alpha: 0.05,
            tau: 0.0,
            use_frobenius: false,
            relaxed: false,
        }
    }
}

impl HarrisParams {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.sigma_d > 0.0 && self.sigma_i > self.sigma_d) {
            return Err(crate::Error::param(format!(
                "need sigma_i > sigma_d > 0, got sigma_d {} sigma_i {}",
                self.sigma_d, self.sigma_i
            )));
        }
        if self.tau < 0.0 {
            return Err(crate::Error::param("tau must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HessianParams {
    pub sigma_d: f32,
    pub tau: f32,
}

impl Default for HessianParams {
    fn default() -> Self {
        HessianParams {
            sigma_d: 1.0,
            tau: 0.0,
        }
    }
}

/// Per-pixel response of the scale-adapted second-moment matrix
/// M = sigma_d^2 g(sigma_i) * [Lx^2, LxLy; LxLy, Ly^2].
/// Cornerness is det(M) - alpha trace(M)^2; the Frobenius variant is
/// sqrt(M11^2 + 2 M12^2 + M22^2), which also fires on edges.
/// Intensities count in 8-bit units, so thresholds are comparable across
/// detectors.
pub fn harris_matrix_response(img: &GrayImage, p: &HarrisParams) -> ResponseMap {
    let (w, h) = (img.width(), img.height());
    let smoothed = blur_slice(img.data(), w, h, p.sigma_d);
    let (lx, ly) = central_diff(&smoothed, w, h);

    let n = w * h;
    let mut axx = vec![0.0f32; n];
    let mut axy = vec![0.0f32; n];
    let mut ayy = vec![0.0f32; n];
    for i in 0..n {
        axx[i] = lx[i] * lx[i];
        axy[i] = lx[i] * ly[i];
        ayy[i] = ly[i] * ly[i];
    }
    let axx = blur_slice(&axx, w, h, p.sigma_i);
    let axy = blur_slice(&axy, w, h, p.sigma_i);
    let ayy = blur_slice(&ayy, w, h, p.sigma_i);

    let unit = RESPONSE_INTENSITY_SCALE as f64;
    let pref = (p.sigma_d as f64).powi(2) * unit * unit;
    let alpha = p.alpha as f64;
    let mut values = vec![0.0f32; n];
    for i in 0..n {
        let m11 = pref * axx[i] as f64;
        let m12 = pref * axy[i] as f64;
        let m22 = pref * ayy[i] as f64;
        values[i] = if p.use_frobenius {
            (m11 * m11 + 2.0 * m12 * m12 + m22 * m22).sqrt() as f32
        } else {
            let det = m11 * m22 - m12 * m12;
            let tr = m11 + m22;
            (det - alpha * tr * tr) as f32
        };
    }
    ResponseMap::new(w, h, values, 0)
}

/// Scale-normalized Laplacian sigma^2 (Lxx + Lyy) of the sigma-smoothed
/// image, signed; callers compare magnitudes.
fn normalized_log(img: &GrayImage, sigma: f32) -> Vec<f32> {
    let (w, h) = (img.width(), img.height());
    let smoothed = blur_slice(img.data(), w, h, sigma);
    let (lxx, _, lyy) = second_derivs(&smoothed, w, h);
    let pref = (sigma * sigma) * RESPONSE_INTENSITY_SCALE;
    lxx.iter()
        .zip(&lyy)
        .map(|(a, b)| pref * (a + b))
        .collect()
}

fn ladder_sigmas(base_d: f32, base_i: f32) -> Vec<(f32, f32)> {
    (0..LADDER_LEVELS)
        .map(|k| {
            let f = LADDER_RATIO.powi(k as i32);
            (base_d * f, base_i * f)
        })
        .collect()
}

/// Shared scale-selection driver: spatial extrema of a per-level response,
/// kept only where the Laplacian magnitude peaks across the three-level scale
/// neighborhood. Ladder endpoints can never be selected.
fn detect_with_ladder(
    img: &GrayImage,
    sigmas: &[(f32, f32)],
    response: impl Fn(f32, f32) -> ResponseMap + Sync,
    kind: NeighborhoodKind,
    tau: f32,
    detector: DetectorId,
) -> Vec<Keypoint> {
    let per_level: Vec<(ResponseMap, Vec<f32>)> = sigmas
        .par_iter()
        .map(|&(sd, si)| (response(sd, si), normalized_log(img, si)))
        .collect();

    let mut out = Vec::new();
    for k in 1..sigmas.len() - 1 {
        let (resp, log) = &per_level[k];
        let log_prev = &per_level[k - 1].1;
        let log_next = &per_level[k + 1].1;
        for e in local_extrema(resp, kind, tau, SearchPolarity::Maxima) {
            let i = e.y * img.width() + e.x;
            let m = log[i].abs();
            if m > log_prev[i].abs() && m > log_next[i].abs() {
                out.push(Keypoint {
                    x: e.x as f32,
                    y: e.y as f32,
                    sigma: sigmas[k].1,
                    response: e.value,
                    scale_index: k as u32,
                    detector,
                    polarity: Polarity::Max,
                });
            }
        }
    }
    out
}

/// Multi-scale cornerness (or Frobenius) detector. Spatial maxima use the
/// strict or relaxed neighborhood per `p.relaxed`; scale selection follows
/// the normalized Laplacian; `Keypoint.sigma` is the integration scale of the
/// selected level.
pub fn detect_harris_laplace(img: &GrayImage, p: &HarrisParams) -> Vec<Keypoint> {
    assert!(p.validate().is_ok(), "invalid params");
    let kind = if p.relaxed {
        NeighborhoodKind::Relaxed2Dir
    } else {
        NeighborhoodKind::Strict3x3
    };
    let detector = if p.use_frobenius {
        DetectorId::Frobenius
    } else {
        DetectorId::Harris
    };
    let sigmas = ladder_sigmas(p.sigma_d, p.sigma_i);
    detect_with_ladder(
        img,
        &sigmas,
        |sd, si| {
            harris_matrix_response(
                img,
                &HarrisParams {
                    sigma_d: sd,
                    sigma_i: si,
                    ..*p
                },
            )
        },
        kind,
        p.tau,
        detector,
    )
}

fn hessian_det_response(img: &GrayImage, sigma_d: f32) -> ResponseMap {
    let (w, h) = (img.width(), img.height());
    let smoothed = blur_slice(img.data(), w, h, sigma_d);
    let (lxx, lxy, lyy) = second_derivs(&smoothed, w, h);
    let s2 = (RESPONSE_INTENSITY_SCALE * RESPONSE_INTENSITY_SCALE) as f64;
    let values = lxx
        .iter()
        .zip(&lxy)
        .zip(&lyy)
        .map(|((&xx, &xy), &yy)| (s2 * (xx as f64 * yy as f64 - xy as f64 * xy as f64)) as f32)
        .collect();
    ResponseMap::new(w, h, values, 0)
}

/// Hessian-determinant detector over the same sigma ladder, strict spatial
/// maxima only, Laplacian scale selection, upright circular regions.
pub fn detect_hessian(img: &GrayImage, p: &HessianParams) -> Vec<Keypoint> {
    assert!(p.sigma_d > 0.0 && p.tau >= 0.0, "invalid params");
    let sigmas = ladder_sigmas(p.sigma_d, p.sigma_d / SIGMA_D_OVER_I);
    detect_with_ladder(
        img,
        &sigmas,
        |sd, _| hessian_det_response(img, sd),
        NeighborhoodKind::Strict3x3,
        p.tau,
        DetectorId::Hessian,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_zero_response_and_no_keypoints() {
        let img = GrayImage::filled(32, 32, 0.5);
        for frob in [false, true] {
            let p = HarrisParams {
                use_frobenius: frob,
                ..Default::default()
            };
            let resp = harris_matrix_response(&img, &p);
            assert!(resp.values.iter().all(|&v| v.abs() < 1e-6));
            assert!(detect_harris_laplace(&img, &p).is_empty());
        }
        assert!(detect_hessian(&img, &HessianParams::default()).is_empty());
    }

    fn step_image() -> GrayImage {
        GrayImage::from_fn(40, 40, |x, _| if x < 20 { 0.1 } else { 0.9 })
    }

    #[test]
    fn step_edge_cornerness_nonpositive_frobenius_positive() {
        let img = step_image();
        let corner = harris_matrix_response(&img, &HarrisParams::default());
        let frob = harris_matrix_response(
            &img,
            &HarrisParams {
                use_frobenius: true,
                ..Default::default()
            },
        );
        // On an ideal straight edge one eigenvalue of M vanishes, so
        // det(M) ~ 0 and the cornerness reduces to -alpha trace^2 <= 0,
        // while the Frobenius norm equals the surviving eigenvalue.
        for y in 5..35 {
            for x in 18..23 {
                assert!(corner.get(x, y) <= 1e-3, "cornerness at {x},{y}");
                assert!(frob.get(x, y) > 1.0, "frobenius at {x},{y}");
            }
        }
    }

    fn checkerboard(cell: usize) -> GrayImage {
        GrayImage::from_fn(48, 48, |x, y| {
            if ((x / cell) + (y / cell)).is_multiple_of(2) {
                0.9
            } else {
                0.1
            }
        })
    }

    #[test]
    fn checkerboard_corner_is_found() {
        // A touch of optical blur is load-bearing: on a perfectly sharp board
        // the Laplacian at a junction vanishes by symmetry and its off-center
        // magnitude decays monotonically with scale, so scale selection keeps
        // nothing. Blur sigma 1.5 puts the Laplacian peak inside the ladder.
        let img = crate::filtering::gaussian_blur(&checkerboard(16), 1.5);
        let kps = detect_harris_laplace(&img, &HarrisParams::default());
        // Interior junctions sit between pixels, at half-integer coordinates
        // on the 16-pixel lattice; each should attract a keypoint within 2 px.
        let junctions = [(15.5f32, 15.5f32), (31.5, 15.5), (15.5, 31.5), (31.5, 31.5)];
        let mut weakest = f32::INFINITY;
        for (jx, jy) in junctions {
            let hit = kps
                .iter()
                .filter(|k| (k.x - jx).abs() <= 2.0 && (k.y - jy).abs() <= 2.0)
                .max_by(|a, b| a.response.partial_cmp(&b.response).unwrap());
            let hit = hit.unwrap_or_else(|| panic!("no keypoint near junction {jx},{jy}"));
            weakest = weakest.min(hit.response);
        }
        // Any threshold below the corner response keeps the corner.
        let p = HarrisParams {
            tau: weakest * 0.999,
            ..Default::default()
        };
        let strict = detect_harris_laplace(&img, &p);
        for (jx, jy) in junctions {
            assert!(
                strict
                    .iter()
                    .any(|k| (k.x - jx).abs() <= 2.0 && (k.y - jy).abs() <= 2.0),
                "junction {jx},{jy} lost under tau below its response"
            );
        }
    }

    #[test]
    fn relaxed_never_loses_keypoints() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let img = GrayImage::from_fn(48, 48, |_, _| rng.random::<f32>());
            let strict = detect_harris_laplace(&img, &HarrisParams::default());
            let relaxed = detect_harris_laplace(
                &img,
                &HarrisParams {
                    relaxed: true,
                    ..Default::default()
                },
            );
            assert!(relaxed.len() >= strict.len());
            for kp in &strict {
                assert!(relaxed
                    .iter()
                    .any(|r| r.x == kp.x && r.y == kp.y && r.scale_index == kp.scale_index));
            }
        }
    }

    #[test]
    fn threshold_monotonicity() {
        let img = checkerboard(8);
        let lo = detect_harris_laplace(
            &img,
            &HarrisParams {
                tau: 0.0,
                ..Default::default()
            },
        );
        let strongest = lo.iter().map(|k| k.response).fold(0.0f32, f32::max);
        let hi = detect_harris_laplace(
            &img,
            &HarrisParams {
                tau: strongest / 2.0,
                ..Default::default()
            },
        );
        assert!(hi.len() <= lo.len());
        for kp in &hi {
            assert!(lo
                .iter()
                .any(|l| l.x == kp.x && l.y == kp.y && l.scale_index == kp.scale_index));
        }
    }

    #[test]
    fn transposed_image_swaps_coordinates() {
        let img = GrayImage::from_fn(40, 32, |x, y| {
            (0.5 + 0.5 * ((x as f32 * 0.7).sin() * (y as f32 * 0.5).cos())).clamp(0.0, 1.0)
        });
        let p = HarrisParams::default();
        let a = harris_matrix_response(&img, &p);
        let b = harris_matrix_response(&img.transpose(), &p);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let d = (a.get(x, y) - b.get(y, x)).abs();
                let m = a.get(x, y).abs().max(1.0);
                assert!(d / m < 1e-4, "at {x},{y}: {} vs {}", a.get(x, y), b.get(y, x));
            }
        }
    }

    #[test]
    fn gaussian_blob_scale_recovered_by_hessian() {
        let s = 3.0f32;
        let img = GrayImage::from_fn(64, 64, |x, y| {
            let dx = x as f32 - 32.0;
            let dy = y as f32 - 32.0;
            0.9 * (-(dx * dx + dy * dy) / (2.0 * s * s)).exp()
        });
        let kps = detect_hessian(&img, &HessianParams::default());
        assert!(!kps.is_empty());
        let strongest = kps
            .iter()
            .max_by(|a, b| a.response.partial_cmp(&b.response).unwrap())
            .unwrap();
        assert!(
            (strongest.x - 32.0).abs() <= 2.0 && (strongest.y - 32.0).abs() <= 2.0,
            "strongest at {},{}",
            strongest.x,
            strongest.y
        );
        let ratio = strongest.sigma / s;
        assert!(
            (1.0 / 1.5..=1.5).contains(&ratio),
            "sigma {} vs blob scale {s}",
            strongest.sigma
        );
    }

    #[test]
    fn infinite_threshold_empties_hessian() {
        let img = checkerboard(8);
        let kps = detect_hessian(
            &img,
            &HessianParams {
                sigma_d: 1.0,
                tau: f32::INFINITY,
            },
        );
        assert!(kps.is_empty());
    }

    #[test]
    fn sigmas_positive_and_bounded_by_ladder() {
        let img = checkerboard(8);
        let p = HarrisParams::default();
        let top = p.sigma_i * LADDER_RATIO.powi(LADDER_LEVELS as i32 - 1);
        for kp in detect_harris_laplace(&img, &p) {
            assert!(kp.sigma > 0.0 && kp.sigma <= top);
        }
    }
}
