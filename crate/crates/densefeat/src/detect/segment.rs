//! Greedy graph segmentation on the 8-connected pixel grid with
//! intensity-difference weights and adaptive threshold k over component
//! size.

use crate::error::{Error, Result};
use crate::img::GrayImage;
use crate::keypoint::Keypoint;
use crate::response::RESPONSE_INTENSITY_SCALE;

use super::region::{fit_ellipse, labels_to_regions};

#[derive(Debug, Clone, Copy)]
pub struct SegParams {
    /// Scale of observation: larger k tolerates larger internal variation
    /// and yields bigger segments.
    pub k: f32,
    pub min_size: usize,
}

impl Default for SegParams {
    fn default() -> Self {
        SegParams {
            k: 50.0,
            min_size: 10,
        }
    }
}

impl SegParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::param("k must be finite and positive"));
        }
        if self.min_size < 1 {
            return Err(Error::param("min_size must be at least 1"));
        }
        Ok(())
    }
}

struct Uf {
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Largest weight joined inside the component so far.
    internal: Vec<f32>,
}

impl Uf {
    fn new(n: usize) -> Self {
        Uf {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        loop {
            let p = self.parent[i as usize];
            if p == i {
                return i;
            }
            let gp = self.parent[p as usize];
            self.parent[i as usize] = gp;
            i = gp;
        }
    }

    fn union(&mut self, ra: u32, rb: u32, w: f32) {
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.internal[big as usize] = self.internal[big as usize]
            .max(self.internal[small as usize])
            .max(w);
    }
}

/// Full partition of the image into 8-connected segments. Edges sorted by
/// ascending weight merge two components when the weight does not exceed
/// either side's internal variation plus k over its size; a second pass
/// absorbs every component smaller than min_size. Labels are compact and
/// numbered by first row-major occurrence.
pub fn segment_graph(img: &GrayImage, p: &SegParams) -> Vec<u32> {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    // a, b, weight in 8-bit-equivalent intensity units
    let mut graph: Vec<(u32, u32, f32)> = Vec::with_capacity(4 * n);
    let weight = |a: usize, b: usize| {
        (img.data()[a] - img.data()[b]).abs() * RESPONSE_INTENSITY_SCALE
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                graph.push((i as u32, (i + 1) as u32, weight(i, i + 1)));
            }
            if y + 1 < h {
                graph.push((i as u32, (i + w) as u32, weight(i, i + w)));
                if x + 1 < w {
                    graph.push((i as u32, (i + w + 1) as u32, weight(i, i + w + 1)));
                }
                if x > 0 {
                    graph.push((i as u32, (i + w - 1) as u32, weight(i, i + w - 1)));
                }
            }
        }
    }
    let mut order: Vec<u32> = (0..graph.len() as u32).collect();
    order.sort_by(|&a, &b| {
        graph[a as usize]
            .2
            .partial_cmp(&graph[b as usize].2)
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut uf = Uf::new(n);
    for &ei in &order {
        let (a, b, wt) = graph[ei as usize];
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        let ta = uf.internal[ra as usize] + p.k / uf.size[ra as usize] as f32;
        let tb = uf.internal[rb as usize] + p.k / uf.size[rb as usize] as f32;
        if wt <= ta.min(tb) {
            uf.union(ra, rb, wt);
        }
    }
    for &ei in &order {
        let (a, b, wt) = graph[ei as usize];
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra != rb
            && ((uf.size[ra as usize] as usize) < p.min_size
                || (uf.size[rb as usize] as usize) < p.min_size)
        {
            uf.union(ra, rb, wt);
        }
    }

    let mut labels = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut of_root = vec![u32::MAX; n];
    for (i, label) in labels.iter_mut().enumerate() {
        let r = uf.find(i as u32) as usize;
        if of_root[r] == u32::MAX {
            of_root[r] = next;
            next += 1;
        }
        *label = of_root[r];
    }
    labels
}

/// Upright-ellipse keypoints for every segment.
pub fn detect_ssr(img: &GrayImage, p: &SegParams) -> Vec<Keypoint> {
    let labels = segment_graph(img, p);
    labels_to_regions(&labels, img.width(), img.height())
        .iter()
        .map(|r| fit_ellipse(r, true))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn segment_count(labels: &[u32]) -> usize {
        labels.iter().collect::<HashSet<_>>().len()
    }

    #[test]
    fn constant_image_is_one_segment() {
        let img = GrayImage::filled(30, 20, 0.4);
        let labels = segment_graph(&img, &SegParams::default());
        assert_eq!(segment_count(&labels), 1);
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn two_halves_split_with_small_k() {
        let img = GrayImage::from_fn(40, 30, |x, _| if x < 20 { 0.0 } else { 1.0 });
        let p = SegParams {
            k: 25.0,
            min_size: 10,
        };
        let labels = segment_graph(&img, &p);
        assert_eq!(segment_count(&labels), 2);
        assert_ne!(labels[0], labels[39]);
    }

    #[test]
    fn partition_covers_all_pixels_with_connected_segments() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let img = GrayImage::from_fn(25, 25, |_, _| rng.random::<f32>());
        let labels = segment_graph(&img, &SegParams::default());
        assert_eq!(labels.len(), 625);
        // Flood fill over 8-neighbors must recover each label class whole.
        let k = segment_count(&labels);
        let mut seen = vec![false; 625];
        let mut comps = 0;
        for start in 0..625usize {
            if seen[start] {
                continue;
            }
            comps += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (x, y) = (i % 25, i / 25);
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                        if nx < 0 || ny < 0 || nx >= 25 || ny >= 25 {
                            continue;
                        }
                        let j = ny as usize * 25 + nx as usize;
                        if !seen[j] && labels[j] == labels[i] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        assert_eq!(comps, k, "{k} labels but {comps} connected components");
    }

    #[test]
    fn min_size_is_enforced() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let img = GrayImage::from_fn(30, 30, |_, _| rng.random::<f32>());
        let p = SegParams {
            k: 10.0,
            min_size: 15,
        };
        let labels = segment_graph(&img, &p);
        let mut counts = std::collections::HashMap::new();
        for &l in &labels {
            *counts.entry(l).or_insert(0usize) += 1;
        }
        assert!(counts.values().all(|&c| c >= 15));
    }

    #[test]
    fn mean_segment_area_grows_with_k() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        let mut worse = 0;
        for _ in 0..20 {
            let img = GrayImage::from_fn(32, 32, |_, _| rng.random::<f32>());
            let mut last = 0.0f64;
            for k in [25.0, 50.0, 100.0] {
                let p = SegParams { k, min_size: 1 };
                let n = segment_count(&segment_graph(&img, &p)) as f64;
                let mean_area = 1024.0 / n;
                if mean_area < last {
                    worse += 1;
                }
                last = mean_area;
            }
        }
        assert_eq!(worse, 0, "mean area shrank when k grew on {worse} steps");
    }

    #[test]
    fn labels_numbered_by_first_occurrence() {
        let img = GrayImage::from_fn(40, 30, |x, _| if x < 20 { 0.0 } else { 1.0 });
        let labels = segment_graph(
            &img,
            &SegParams {
                k: 25.0,
                min_size: 10,
            },
        );
        assert_eq!(labels[0], 0);
        let first_right = labels[20];
        assert_eq!(first_right, 1);
    }

    #[test]
    fn ssr_keypoints_cover_segments() {
        let img = GrayImage::from_fn(40, 30, |x, _| if x < 20 { 0.1 } else { 0.9 });
        let kps = detect_ssr(
            &img,
            &SegParams {
                k: 25.0,
                min_size: 10,
            },
        );
        assert_eq!(kps.len(), 2);
        assert!((kps[0].y - 14.5).abs() < 1e-4);
        assert!((kps[0].x - 9.5).abs() < 1e-4);
        assert!(kps[0].sigma > 1.0);
    }
}
