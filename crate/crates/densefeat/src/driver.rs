//! Builds a ready-to-run detector from a parsed configuration, so the CLI and
//! the evaluation harness share one mapping from detector name to parameters.

use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::descriptor::{patch_to_scale, sift, Patch, ScalingRule};
use crate::detect::dense::{
    detect_dense_grid, detect_dense_ip, detect_dense_l2norm, DenseIpParams, DenseParams,
    L2NormParams, ResponseKind, L2NORM_UNIT_RADIUS,
};
use crate::detect::dog::{detect_dog, DogParams};
use crate::detect::edges::{detect_fast_edge, detect_mser_edge, detect_ssr_edge, load_edge_map};
use crate::detect::harris::{detect_harris_laplace, detect_hessian, HarrisParams, HessianParams};
use crate::detect::mser::{detect_mser_keypoints, MserParams};
use crate::detect::segment::{detect_ssr, SegParams};
use crate::detect::zernike::{build_filter_bank, detect_zernike, FilterBank};
use crate::error::{Error, Result};
use crate::img::GrayImage;
use crate::keypoint::{DetectorId, Keypoint, Polarity};
use crate::scale::DEFAULT_N_SIGMA;

#[derive(Debug)]
pub enum DetectorDriver {
    Dense(DenseParams),
    DenseIp(DenseIpParams),
    DenseL2Norm { params: L2NormParams, patch_size: usize },
    Harris(HarrisParams),
    Frobenius(HarrisParams),
    Hessian(HessianParams),
    Dog(DogParams),
    Zernike { bank: FilterBank, n_z: usize, n_scales: usize },
    Mser(MserParams),
    Ssr(SegParams),
    MserEdge { params: MserParams, n_scales: usize, tau: f32 },
    SsrEdge { params: SegParams, n_scales: usize, tau: f32 },
    FastEdge { edges: PathBuf, n_scales: usize, tau: f32 },
}

fn mser_params(cfg: &Config, section: &str) -> Result<MserParams> {
    let d = MserParams::default();
    let p = MserParams {
        delta: cfg.u32_or(section, "delta", d.delta)?,
        min_area: cfg.usize_or(section, "min_area", d.min_area)?,
        max_area: match cfg.get(section, "max_area") {
            None => None,
            Some(_) => Some(cfg.usize_or(section, "max_area", 0)?),
        },
        max_variation: cfg.f64_or(section, "max_variation", d.max_variation)?,
    };
    p.validate().map_err(|e| Error::config(format!("[{section}]: {e}")))?;
    Ok(p)
}

fn seg_params(cfg: &Config, section: &str) -> Result<SegParams> {
    let d = SegParams::default();
    Ok(SegParams {
        k: cfg.f32_or(section, "k", d.k)?,
        min_size: cfg.usize_or(section, "min_size", d.min_size)?,
    })
}

fn harris_params(cfg: &Config, section: &str, frobenius: bool) -> Result<HarrisParams> {
    let d = HarrisParams::default();
    Ok(HarrisParams {
        sigma_d: cfg.f32_or(section, "sigma_d", d.sigma_d)?,
        sigma_i: cfg.f32_or(section, "sigma_i", d.sigma_i)?,
        alpha: cfg.f32_or(section, "alpha", d.alpha)?,
        tau: cfg.f32_or(section, "tau", d.tau)?,
        use_frobenius: frobenius,
        relaxed: cfg.bool_or(section, "relaxed", frobenius)?,
    })
}

impl DetectorDriver {
    /// `base` is the directory config-relative paths resolve against.
    pub fn from_config(id: DetectorId, cfg: &Config, base: &Path) -> Result<DetectorDriver> {
        use DetectorDriver as D;
        Ok(match id {
            DetectorId::Dense => D::Dense(DenseParams {
                delta_xy: cfg.usize_or("dense", "delta_xy", 8)?,
                n_scales: cfg.usize_or("dense", "n_scales", DEFAULT_N_SIGMA)?,
            }),
            DetectorId::DenseIp => D::DenseIp(DenseIpParams {
                cell: cfg.usize_or("dense-ip", "cell", 16)?,
                search_scales: cfg.usize_or("dense-ip", "search_scales", DEFAULT_N_SIGMA)?,
                response_kind: match cfg.get("dense-ip", "response").unwrap_or("frobenius") {
                    "frobenius" => ResponseKind::Frobenius,
                    "harris" => ResponseKind::Harris,
                    v => {
                        return Err(Error::config(format!(
                            "[dense-ip] response: expected frobenius or harris, got '{v}'"
                        )))
                    }
                },
            }),
            DetectorId::DenseL2Norm => D::DenseL2Norm {
                params: L2NormParams {
                    tau: cfg.f32_or("dense-l2norm", "tau", 0.0)?,
                    n_scales: cfg.usize_or("dense-l2norm", "n_scales", DEFAULT_N_SIGMA)?,
                    stride: cfg.usize_or("dense-l2norm", "stride", 1)?,
                },
                patch_size: cfg.usize_or(
                    "pipeline",
                    "patch_size",
                    crate::config::DEFAULT_PATCH_SIZE,
                )?,
            },
            DetectorId::Harris => D::Harris(harris_params(cfg, "harris", false)?),
            DetectorId::Frobenius => D::Frobenius(harris_params(cfg, "frobenius", true)?),
            DetectorId::Hessian => {
                let d = HessianParams::default();
                D::Hessian(HessianParams {
                    sigma_d: cfg.f32_or("hessian", "sigma_d", d.sigma_d)?,
                    tau: cfg.f32_or("hessian", "tau", d.tau)?,
                })
            }
            DetectorId::Dog => {
                let d = DogParams::default();
                D::Dog(DogParams {
                    scales_per_octave: cfg.usize_or("dog", "scales_per_octave", d.scales_per_octave)?,
                    n_octaves: cfg.usize_or("dog", "octaves", d.n_octaves)?,
                    tau: cfg.f32_or("dog", "tau", d.tau)?,
                })
            }
            DetectorId::Zernike => {
                // Order 2 gives the 8-filter bank, the retrieval operating
                // point.
                let order = cfg.u32_or("zernike", "order", 2)?;
                let filter_size = cfg.usize_or("zernike", "filter_size", 11)?;
                let bank = build_filter_bank(order, filter_size)
                    .map_err(|e| Error::config(format!("[zernike]: {e}")))?;
                D::Zernike {
                    bank,
                    n_z: cfg.usize_or("zernike", "n_z", 16_000)?,
                    n_scales: cfg.usize_or("zernike", "n_scales", DEFAULT_N_SIGMA)?,
                }
            }
            DetectorId::Mser => D::Mser(mser_params(cfg, "mser")?),
            DetectorId::Ssr => D::Ssr(seg_params(cfg, "ssr")?),
            DetectorId::MserEdge => D::MserEdge {
                params: mser_params(cfg, "mser-edge")?,
                n_scales: cfg.usize_or("mser-edge", "n_scales", DEFAULT_N_SIGMA)?,
                tau: cfg.f32_or("mser-edge", "tau", 0.0)?,
            },
            DetectorId::SsrEdge => D::SsrEdge {
                params: seg_params(cfg, "ssr-edge")?,
                n_scales: cfg.usize_or("ssr-edge", "n_scales", DEFAULT_N_SIGMA)?,
                tau: cfg.f32_or("ssr-edge", "tau", 0.0)?,
            },
            DetectorId::FastEdge => D::FastEdge {
                edges: cfg.path_opt("fast-edge", "edges", base).ok_or_else(|| {
                    Error::config("[fast-edge] edges: an edge map file or directory is required".to_string())
                })?,
                n_scales: cfg.usize_or("fast-edge", "n_scales", DEFAULT_N_SIGMA)?,
                tau: cfg.f32_or("fast-edge", "tau", 0.0)?,
            },
        })
    }

    pub fn id(&self) -> DetectorId {
        use DetectorDriver as D;
        match self {
            D::Dense(_) => DetectorId::Dense,
            D::DenseIp(_) => DetectorId::DenseIp,
            D::DenseL2Norm { .. } => DetectorId::DenseL2Norm,
            D::Harris(_) => DetectorId::Harris,
            D::Frobenius(_) => DetectorId::Frobenius,
            D::Hessian(_) => DetectorId::Hessian,
            D::Dog(_) => DetectorId::Dog,
            D::Zernike { .. } => DetectorId::Zernike,
            D::Mser(_) => DetectorId::Mser,
            D::Ssr(_) => DetectorId::Ssr,
            D::MserEdge { .. } => DetectorId::MserEdge,
            D::SsrEdge { .. } => DetectorId::SsrEdge,
            D::FastEdge { .. } => DetectorId::FastEdge,
        }
    }

    /// Runs detection. `image_path` names the image for detectors that pull
    /// side inputs from disk (precomputed edge maps).
    pub fn detect(&self, img: &GrayImage, image_path: Option<&Path>) -> Result<Vec<Keypoint>> {
        use DetectorDriver as D;
        Ok(match self {
            D::Dense(p) => detect_dense_grid(img, p),
            D::DenseIp(p) => detect_dense_ip(img, p),
            D::DenseL2Norm { params, patch_size } => {
                let p = *patch_size;
                let describer = move |level: &GrayImage, x: usize, y: usize| {
                    level_patch(level, x, y, p).map(|patch| sift(&patch).values)
                };
                detect_dense_l2norm(img, params, &describer)
            }
            D::Harris(p) | D::Frobenius(p) => detect_harris_laplace(img, p),
            D::Hessian(p) => detect_hessian(img, p),
            D::Dog(p) => detect_dog(img, p),
            D::Zernike { bank, n_z, n_scales } => detect_zernike(img, bank, *n_z, *n_scales),
            D::Mser(p) => detect_mser_keypoints(img, p),
            D::Ssr(p) => detect_ssr(img, p),
            D::MserEdge { params, n_scales, tau } => detect_mser_edge(img, params, *n_scales, *tau),
            D::SsrEdge { params, n_scales, tau } => detect_ssr_edge(img, params, *n_scales, *tau),
            D::FastEdge { edges, n_scales, tau } => {
                let map_path = edge_map_path(edges, image_path)?;
                let em = load_edge_map(&map_path)?;
                if em.width() != img.width() || em.height() != img.height() {
                    return Err(Error::param(format!(
                        "edge map {} is {}x{} but the image is {}x{}",
                        map_path.display(),
                        em.width(),
                        em.height(),
                        img.width(),
                        img.height()
                    )));
                }
                detect_fast_edge(&em, *n_scales, *tau)
            }
        })
    }
}

/// A directory of edge maps is keyed by image file stem; a plain file is used
/// as-is.
fn edge_map_path(edges: &Path, image_path: Option<&Path>) -> Result<PathBuf> {
    if edges.is_dir() {
        let img = image_path.ok_or_else(|| {
            Error::param("edge map directory lookup needs a named input image".to_string())
        })?;
        let stem = img
            .file_stem()
            .ok_or_else(|| Error::param(format!("{}: no file stem", img.display())))?;
        Ok(edges.join(Path::new(stem).with_extension("emap")))
    } else {
        Ok(edges.to_path_buf())
    }
}

/// Samples a p by p patch centered on a level pixel, unit spacing; the norm
/// detector's measurement radius at level resolution is constant, so this is
/// the whole family-specific scaling. Returns None when the square leaves the
/// level.
fn level_patch(level: &GrayImage, x: usize, y: usize, p: usize) -> Option<Patch> {
    let s = patch_to_scale(ScalingRule::EdgePoint, p).ok()? as f32;
    let r = s * L2NORM_UNIT_RADIUS;
    let (cx, cy) = (x as f32, y as f32);
    if cx - r < 0.0
        || cy - r < 0.0
        || cx + r > (level.width() - 1) as f32
        || cy + r > (level.height() - 1) as f32
    {
        return None;
    }
    let step = 2.0 * r / (p - 1) as f32;
    let mut data = Vec::with_capacity(p * p);
    for j in 0..p {
        for i in 0..p {
            data.push(level.bilinear(cx - r + i as f32 * step, cy - r + j as f32 * step));
        }
    }
    Some(Patch {
        side: p,
        data,
        source: Keypoint {
            x: cx,
            y: cy,
            sigma: r,
            response: 0.0,
            scale_index: 0,
            detector: DetectorId::DenseL2Norm,
            polarity: Polarity::NoPolarity,
        },
    })
}
