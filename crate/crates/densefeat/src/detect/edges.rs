//! Edge maps, their file format, and keypoint sampling on edge pixels with
//! a separate interestingness map.

use std::path::Path;

use crate::error::{Error, Result};
use crate::filtering::gradients;
use crate::img::GrayImage;
use crate::io;
use crate::keypoint::{DetectorId, Keypoint, Polarity};
use crate::response::{local_extrema, NeighborhoodKind, ResponseMap, SearchPolarity};
use crate::scale::ScaleStack;

use super::mser::{detect_mser, MserParams};
use super::region::{edge_map_from_labels, edge_map_from_regions};
use super::segment::{segment_graph, SegParams};

pub const EMAP_MAGIC: &[u8; 4] = b"EMAP";
/// Detection radius of the edge samplers at the finest level, from their
/// descriptor measurement unit of 3 px.
pub const EDGE_UNIT_RADIUS: f32 = 1.5;
/// Differentiation scale for the gradient-magnitude interestingness of the
/// region-boundary samplers.
pub const EDGE_GRADIENT_SIGMA: f32 = 1.0;

/// Per-pixel edge strength; 0 marks non-edge pixels, strengths stay in
/// native [0,1] units.
#[derive(Debug, Clone)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    strength: Vec<f32>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, strength: Vec<f32>) -> Result<EdgeMap> {
        if strength.len() != width * height {
            return Err(Error::param(format!(
                "edge map size {} does not match {width}x{height}",
                strength.len()
            )));
        }
        if let Some(v) = strength.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::param(format!("edge strength {v} is invalid")));
        }
        Ok(EdgeMap {
            width,
            height,
            strength,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn strength(&self) -> &[f32] {
        &self.strength
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.strength[y * self.width + x]
    }
}

pub fn load_edge_map(path: &Path) -> Result<EdgeMap> {
    let (w, h, values) = io::read_raster(path, EMAP_MAGIC)?;
    if let Some(i) = values.iter().position(|&v| v < 0.0) {
        return Err(Error::format(
            path,
            12 + 4 * i as u64,
            format!("negative edge strength {}", values[i]),
        ));
    }
    EdgeMap::new(w as usize, h as usize, values)
}

pub fn save_edge_map(em: &EdgeMap, path: &Path) -> Result<()> {
    io::write_raster(
        path,
        EMAP_MAGIC,
        em.width as u32,
        em.height as u32,
        &em.strength,
    )
}

/// Strict 3x3 maxima of the interest map restricted to edge pixels
/// (non-edge neighbors count as minus infinity), at or above tau. Each
/// selected location emits n_scales keypoints, one per stack scale.
pub fn sample_edge_map(
    edges: &EdgeMap,
    interest: &ResponseMap,
    n_scales: usize,
    tau: f32,
    detector: DetectorId,
) -> Vec<Keypoint> {
    assert_eq!(
        (edges.width, edges.height),
        (interest.width, interest.height),
        "edge and interest maps must share dimensions"
    );
    assert!(n_scales >= 1);
    let masked: Vec<f32> = edges
        .strength
        .iter()
        .zip(&interest.values)
        .map(|(&e, &v)| if e > 0.0 { v } else { f32::NEG_INFINITY })
        .collect();
    let resp = ResponseMap::new(edges.width, edges.height, masked, 0);
    let mut out = Vec::new();
    for e in local_extrema(
        &resp,
        NeighborhoodKind::Strict3x3,
        tau,
        SearchPolarity::Maxima,
    ) {
        for i in 0..n_scales {
            out.push(Keypoint {
                x: e.x as f32,
                y: e.y as f32,
                sigma: EDGE_UNIT_RADIUS * ScaleStack::nominal_factor(i),
                response: e.value,
                scale_index: i as u32,
                detector,
                polarity: Polarity::Max,
            });
        }
    }
    out
}

/// Gradient magnitude in native intensity units, the interestingness for
/// region-boundary sampling.
pub fn gradient_interest(img: &GrayImage, sigma_d: f32) -> ResponseMap {
    let (lx, ly) = gradients(img, sigma_d);
    let values = lx
        .values
        .iter()
        .zip(&ly.values)
        .map(|(&x, &y)| (x * x + y * y).sqrt())
        .collect();
    ResponseMap::new(img.width(), img.height(), values, 0)
}

pub fn detect_mser_edge(
    img: &GrayImage,
    mp: &MserParams,
    n_scales: usize,
    tau: f32,
) -> Vec<Keypoint> {
    let regions = detect_mser(img, mp);
    let em = edge_map_from_regions(&regions, img.width(), img.height());
    let interest = gradient_interest(img, EDGE_GRADIENT_SIGMA);
    sample_edge_map(&em, &interest, n_scales, tau, DetectorId::MserEdge)
}

pub fn detect_ssr_edge(
    img: &GrayImage,
    sp: &SegParams,
    n_scales: usize,
    tau: f32,
) -> Vec<Keypoint> {
    let labels = segment_graph(img, sp);
    let em = edge_map_from_labels(&labels, img.width(), img.height());
    let interest = gradient_interest(img, EDGE_GRADIENT_SIGMA);
    sample_edge_map(&em, &interest, n_scales, tau, DetectorId::SsrEdge)
}

/// The edge detector's own strengths double as the interestingness.
pub fn detect_fast_edge(edges: &EdgeMap, n_scales: usize, tau: f32) -> Vec<Keypoint> {
    let interest = ResponseMap::new(edges.width, edges.height, edges.strength.clone(), 0);
    sample_edge_map(edges, &interest, n_scales, tau, DetectorId::FastEdge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_interest(w: usize, h: usize, v: f32) -> ResponseMap {
        ResponseMap::new(w, h, vec![v; w * h], 0)
    }

    #[test]
    fn empty_edges_sample_nothing() {
        let em = EdgeMap::new(20, 20, vec![0.0; 400]).unwrap();
        let interest = flat_interest(20, 20, 1.0);
        assert!(sample_edge_map(&em, &interest, 5, 0.0, DetectorId::FastEdge).is_empty());
    }

    #[test]
    fn isolated_edge_pixel_emits_one_keypoint_per_scale() {
        let mut strength = vec![0.0f32; 400];
        strength[7 * 20 + 5] = 1.0;
        let em = EdgeMap::new(20, 20, strength).unwrap();
        let interest = flat_interest(20, 20, 0.7);
        let kps = sample_edge_map(&em, &interest, 5, 0.5, DetectorId::MserEdge);
        assert_eq!(kps.len(), 5);
        for (i, kp) in kps.iter().enumerate() {
            assert_eq!((kp.x, kp.y), (5.0, 7.0));
            assert_eq!(kp.scale_index, i as u32);
            let expect = 1.5 * 2.0f32.powf(i as f32 / 2.0);
            assert!((kp.sigma - expect).abs() < 1e-5);
            assert_eq!(kp.response, 0.7);
        }
    }

    #[test]
    fn tau_sweep_gives_nested_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let (w, h) = (30, 24);
        let strength: Vec<f32> = (0..w * h)
            .map(|_| if rng.random::<f32>() < 0.3 { 1.0 } else { 0.0 })
            .collect();
        let em = EdgeMap::new(w, h, strength).unwrap();
        let values: Vec<f32> = (0..w * h).map(|_| rng.random::<f32>() * 0.4).collect();
        let interest = ResponseMap::new(w, h, values, 0);
        let mut prev: Option<Vec<(f32, f32)>> = None;
        for tau in [0.0, 0.1, 0.2, 0.3] {
            let kps = sample_edge_map(&em, &interest, 1, tau, DetectorId::FastEdge);
            assert!(kps.iter().all(|k| k.response >= tau));
            let locs: Vec<(f32, f32)> = kps.iter().map(|k| (k.x, k.y)).collect();
            if let Some(p) = &prev {
                for l in &locs {
                    assert!(p.contains(l), "tau {tau} grew the set");
                }
            }
            prev = Some(locs);
        }
    }

    #[test]
    fn sampled_locations_lie_on_edges() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (w, h) = (25, 25);
        let strength: Vec<f32> = (0..w * h)
            .map(|_| if rng.random::<f32>() < 0.4 { 0.8 } else { 0.0 })
            .collect();
        let em = EdgeMap::new(w, h, strength).unwrap();
        let values: Vec<f32> = (0..w * h).map(|_| rng.random::<f32>()).collect();
        let interest = ResponseMap::new(w, h, values, 0);
        let kps = sample_edge_map(&em, &interest, 3, 0.2, DetectorId::SsrEdge);
        assert_eq!(kps.len() % 3, 0);
        for kp in &kps {
            assert!(em.get(kp.x as usize, kp.y as usize) > 0.0);
            assert!(kp.response >= 0.2);
        }
    }

    #[test]
    fn emap_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emap");
        let em = EdgeMap::new(2, 2, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        save_edge_map(&em, &path).unwrap();
        let back = load_edge_map(&path).unwrap();
        assert_eq!(back.strength(), em.strength());
        assert_eq!((back.width(), back.height()), (2, 2));
    }

    #[test]
    fn truncated_emap_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.emap");
        let mut buf = Vec::new();
        buf.extend_from_slice(EMAP_MAGIC);
        crate::io::push_u32(&mut buf, 2);
        crate::io::push_u32(&mut buf, 2);
        crate::io::push_f32s(&mut buf, &[1.0, 2.0]);
        crate::io::write_file(&path, &buf).unwrap();
        match load_edge_map(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn negative_strength_rejected_with_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.emap");
        let mut buf = Vec::new();
        buf.extend_from_slice(EMAP_MAGIC);
        crate::io::push_u32(&mut buf, 2);
        crate::io::push_u32(&mut buf, 1);
        crate::io::push_f32s(&mut buf, &[0.5, -0.1]);
        crate::io::write_file(&path, &buf).unwrap();
        match load_edge_map(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn ssr_edge_finds_the_half_boundary() {
        // Faint texture keeps the boundary gradient from forming a perfect
        // plateau, which strict 3x3 maxima would reject wholesale.
        let img = GrayImage::from_fn(40, 30, |x, y| {
            let base = if x < 20 { 0.0 } else { 1.0 };
            base + ((x * 31 + y * 17) % 13) as f32 / 13.0 * 0.02
        });
        let kps = detect_ssr_edge(
            &img,
            &SegParams {
                k: 500.0,
                min_size: 10,
            },
            1,
            0.0,
        );
        assert!(!kps.is_empty());
        for kp in &kps {
            assert!(
                (18.0..=21.0).contains(&kp.x),
                "keypoint off the boundary at x={}",
                kp.x
            );
        }
    }

    #[test]
    fn mser_edge_rings_the_square() {
        let img = GrayImage::from_fn(40, 40, |x, y| {
            if (10..30).contains(&x) && (10..30).contains(&y) {
                0.2
            } else {
                0.8
            }
        });
        let kps = detect_mser_edge(&img, &MserParams::default(), 5, 0.0);
        assert_eq!(kps.len() % 5, 0);
        assert!(!kps.is_empty());
        for kp in &kps {
            let on_x = (kp.x - 9.5).abs() < 3.0 || (kp.x - 29.5).abs() < 3.0;
            let on_y = (kp.y - 9.5).abs() < 3.0 || (kp.y - 29.5).abs() < 3.0;
            assert!(on_x || on_y, "keypoint away from the ring at {},{}", kp.x, kp.y);
        }
    }

    #[test]
    fn fast_edge_uses_strength_as_interest() {
        let mut strength = vec![0.0f32; 100];
        strength[5 * 10 + 5] = 0.9;
        strength[5 * 10 + 6] = 0.4;
        let em = EdgeMap::new(10, 10, strength).unwrap();
        let kps = detect_fast_edge(&em, 1, 0.1);
        assert_eq!(kps.len(), 1);
        assert_eq!((kps[0].x, kps[0].y, kps[0].response), (5.0, 5.0, 0.9));
    }
}
