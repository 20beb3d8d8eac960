//! Response ("interestingness") maps and the local-extremum machinery shared
//! by every detector that looks for peaks.

use std::path::Path;

use crate::error::Result;
use crate::keypoint::Polarity;

/// Detector responses are computed on 8-bit-equivalent intensities (stored
/// values times 255) so thresholds keep their classical meaning. Edge-map
/// strengths are the one exception and stay in [0,1].
pub const RESPONSE_INTENSITY_SCALE: f32 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
    pub scale_index: usize,
}

pub const RMAP_MAGIC: &[u8; 4] = b"RMAP";

impl ResponseMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>, scale_index: usize) -> Self {
        assert_eq!(values.len(), width * height);
        ResponseMap {
            width,
            height,
            values,
            scale_index,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn write_rmap(&self, path: &Path) -> Result<()> {
        crate::io::write_raster(
            path,
            RMAP_MAGIC,
            self.width as u32,
            self.height as u32,
            &self.values,
        )
    }

    pub fn read_rmap(path: &Path) -> Result<ResponseMap> {
        let (w, h, values) = crate::io::read_raster(path, RMAP_MAGIC)?;
        Ok(ResponseMap::new(w as usize, h as usize, values, 0))
    }
}

/// Spatial comparison rule for [`local_extrema`]. `Cube3x3x3` is the 3-D rule
/// used inside the difference-of-Gaussians detector; in the 2-D search it
/// falls back to its in-plane restriction, `Strict3x3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodKind {
    Strict3x3,
    Relaxed2Dir,
    Cube3x3x3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchPolarity {
    Maxima,
    Minima,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremumPoint {
    pub x: usize,
    pub y: usize,
    pub value: f32,
    pub polarity: Polarity,
}

/// The four directional pairs of `Relaxed2Dir`: E/W, N/S, NE/SW, NW/SE.
const DIRECTION_PAIRS: [[(isize, isize); 2]; 4] = [
    [(1, 0), (-1, 0)],
    [(0, 1), (0, -1)],
    [(1, -1), (-1, 1)],
    [(-1, -1), (1, 1)],
];

/// Finds strict local extrema of `resp`, excluding the one-pixel border
/// frame. Maxima must satisfy value >= threshold, minima value <= -threshold;
/// all comparisons against neighbors are strict, so plateaus yield nothing.
/// Output is in row-major order.
pub fn local_extrema(
    resp: &ResponseMap,
    kind: NeighborhoodKind,
    threshold: f32,
    polarity: SearchPolarity,
) -> Vec<ExtremumPoint> {
    let (w, h) = (resp.width, resp.height);
    let mut out = Vec::new();
    if w < 3 || h < 3 {
        return out;
    }
    let v = &resp.values;
    let want_max = matches!(polarity, SearchPolarity::Maxima | SearchPolarity::Both);
    let want_min = matches!(polarity, SearchPolarity::Minima | SearchPolarity::Both);

    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = v[y * w + x];
            let neighbor = |dx: isize, dy: isize| {
                v[(y as isize + dy) as usize * w + (x as isize + dx) as usize]
            };
            if want_max && c >= threshold {
                let is_max = match kind {
                    NeighborhoodKind::Strict3x3 | NeighborhoodKind::Cube3x3x3 => {
                        full_ring(&neighbor).all(|n| c > n)
                    }
                    NeighborhoodKind::Relaxed2Dir => DIRECTION_PAIRS
                        .iter()
                        .any(|pair| pair.iter().all(|&(dx, dy)| c > neighbor(dx, dy))),
                };
                if is_max {
                    out.push(ExtremumPoint {
                        x,
                        y,
                        value: c,
                        polarity: Polarity::Max,
                    });
                    continue;
                }
            }
            if want_min && c <= -threshold {
                let is_min = match kind {
                    NeighborhoodKind::Strict3x3 | NeighborhoodKind::Cube3x3x3 => {
                        full_ring(&neighbor).all(|n| c < n)
                    }
                    NeighborhoodKind::Relaxed2Dir => DIRECTION_PAIRS
                        .iter()
                        .any(|pair| pair.iter().all(|&(dx, dy)| c < neighbor(dx, dy))),
                };
                if is_min {
                    out.push(ExtremumPoint {
                        x,
                        y,
                        value: c,
                        polarity: Polarity::Min,
                    });
                }
            }
        }
    }
    out
}

fn full_ring<'a>(neighbor: &'a impl Fn(isize, isize) -> f32) -> impl Iterator<Item = f32> + 'a {
    [
        (-1, -1),
        (0, -1),
        (1, -1),
        (-1, 0),
        (1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ]
    .into_iter()
    .map(move |(dx, dy)| neighbor(dx, dy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> f32) -> ResponseMap {
        let mut v = Vec::new();
        for y in 0..h {
            for x in 0..w {
                v.push(f(x, y));
            }
        }
        ResponseMap::new(w, h, v, 0)
    }

    #[test]
    fn single_peak_found_by_both_kinds() {
        let m = map(9, 9, |x, y| if (x, y) == (4, 5) { 1.0 } else { 0.0 });
        for kind in [NeighborhoodKind::Strict3x3, NeighborhoodKind::Relaxed2Dir] {
            let pts = local_extrema(&m, kind, 0.0, SearchPolarity::Maxima);
            assert_eq!(pts.len(), 1);
            assert_eq!((pts[0].x, pts[0].y), (4, 5));
            assert_eq!(pts[0].polarity, Polarity::Max);
        }
    }

    #[test]
    fn ridge_is_invisible_to_strict_but_not_relaxed() {
        // One-pixel-wide horizontal bright line: every ridge pixel ties with
        // its left/right neighbors, so the strict rule rejects it, while the
        // vertical direction pair accepts it.
        let m = map(12, 9, |_, y| if y == 4 { 1.0 } else { 0.0 });
        let strict = local_extrema(&m, NeighborhoodKind::Strict3x3, 0.0, SearchPolarity::Maxima);
        assert!(strict.is_empty());
        let relaxed = local_extrema(&m, NeighborhoodKind::Relaxed2Dir, 0.0, SearchPolarity::Maxima);
        assert_eq!(relaxed.len(), 10);
        assert!(relaxed.iter().all(|p| p.y == 4));
    }

    #[test]
    fn relaxed_is_superset_of_strict_on_random_maps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = map(32, 32, |_, _| rng.random::<f32>());
            for pol in [SearchPolarity::Maxima, SearchPolarity::Minima] {
                let strict: Vec<_> = local_extrema(&m, NeighborhoodKind::Strict3x3, 0.0, pol)
                    .iter()
                    .map(|p| (p.x, p.y))
                    .collect();
                let relaxed: Vec<_> = local_extrema(&m, NeighborhoodKind::Relaxed2Dir, 0.0, pol)
                    .iter()
                    .map(|p| (p.x, p.y))
                    .collect();
                for s in &strict {
                    assert!(relaxed.contains(s));
                }
            }
        }
    }

    #[test]
    fn plateaus_produce_nothing() {
        let m = map(8, 8, |_, _| 0.5);
        for kind in [NeighborhoodKind::Strict3x3, NeighborhoodKind::Relaxed2Dir] {
            assert!(local_extrema(&m, kind, 0.0, SearchPolarity::Both).is_empty());
        }
    }

    #[test]
    fn border_frame_excluded() {
        let m = map(7, 7, |x, y| if (x, y) == (0, 3) { 5.0 } else { 0.0 });
        assert!(local_extrema(&m, NeighborhoodKind::Strict3x3, 0.0, SearchPolarity::Maxima)
            .is_empty());
    }

    #[test]
    fn threshold_applies_per_polarity() {
        let m = map(9, 9, |x, y| match (x, y) {
            (2, 2) => 0.4,
            (6, 6) => -0.4,
            _ => 0.0,
        });
        let both = local_extrema(&m, NeighborhoodKind::Strict3x3, 0.3, SearchPolarity::Both);
        assert_eq!(both.len(), 2);
        let tight = local_extrema(&m, NeighborhoodKind::Strict3x3, 0.5, SearchPolarity::Both);
        assert!(tight.is_empty());
        let mins = local_extrema(&m, NeighborhoodKind::Strict3x3, 0.3, SearchPolarity::Minima);
        assert_eq!(mins.len(), 1);
        assert_eq!(mins[0].polarity, Polarity::Min);
        assert_eq!(mins[0].value, -0.4);
    }

    #[test]
    fn infinite_threshold_selects_nothing() {
        let m = map(9, 9, |x, y| (x + y) as f32);
        assert!(local_extrema(
            &m,
            NeighborhoodKind::Strict3x3,
            f32::INFINITY,
            SearchPolarity::Both
        )
        .is_empty());
    }

    #[test]
    fn rmap_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.rmap");
        let m = map(4, 3, |x, y| x as f32 - y as f32);
        m.write_rmap(&p).unwrap();
        let back = ResponseMap::read_rmap(&p).unwrap();
        assert_eq!(back.values, m.values);
        assert_eq!((back.width, back.height), (4, 3));
    }
}
