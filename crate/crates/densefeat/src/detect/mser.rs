//! Maximally stable extremal regions on a 256-level quantization, both
//! polarities, via a single incremental union-find sweep per polarity.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::img::GrayImage;
use crate::keypoint::{Keypoint, Polarity};

use super::region::{fit_ellipse, Region};

#[derive(Debug, Clone, Copy)]
pub struct MserParams {
    /// Stability window: q(i) compares component areas at i+delta and
    /// i-delta.
    pub delta: u32,
    pub min_area: usize,
    /// None means a quarter of the image area.
    pub max_area: Option<usize>,
    pub max_variation: f64,
}

impl Default for MserParams {
    fn default() -> Self {
        MserParams {
            delta: 5,
            min_area: 10,
            max_area: None,
            max_variation: 1.0,
        }
    }
}

impl MserParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 1 {
            return Err(Error::param("delta must be at least 1"));
        }
        if self.min_area < 1 {
            return Err(Error::param("min_area must be at least 1"));
        }
        if !(self.max_variation >= 0.0 && self.max_variation.is_finite()) {
            return Err(Error::param(
                "max_variation must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// Rounds [0,1] intensities to the 256 discrete levels the component tree
/// operates on.
pub fn quantize(img: &GrayImage) -> Vec<u8> {
    img.data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

const ABSENT: u32 = u32::MAX;

struct Uf {
    parent: Vec<u32>,
    size: Vec<u32>,
    min_pix: Vec<u32>,
}

impl Uf {
    fn new(n: usize) -> Self {
        Uf {
            parent: vec![ABSENT; n],
            size: vec![0; n],
            min_pix: vec![0; n],
        }
    }

    fn add(&mut self, i: u32) {
        self.parent[i as usize] = i;
        self.size[i as usize] = 1;
        self.min_pix[i as usize] = i;
    }

    fn present(&self, i: u32) -> bool {
        self.parent[i as usize] != ABSENT
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

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.min_pix[big as usize] =
            self.min_pix[big as usize].min(self.min_pix[small as usize]);
        big
    }
}

struct Branch {
    seed: u32,
    start: usize,
    /// Component size containing the seed, one entry per level from start
    /// through 255.
    sizes: Vec<u32>,
    /// Last level at which this branch owns its component.
    end: Option<usize>,
}

/// q values are exact rationals; sizes are below 2^32 so cross products fit
/// in u128 comfortably.
fn q_less(a: (u64, u64), b: (u64, u64)) -> bool {
    (a.0 as u128) * (b.1 as u128) < (b.0 as u128) * (a.1 as u128)
}

fn q_equal(a: (u64, u64), b: (u64, u64)) -> bool {
    (a.0 as u128) * (b.1 as u128) == (b.0 as u128) * (a.1 as u128)
}

fn flood_fill(q: &[u8], w: usize, h: usize, seed: u32, level: u8) -> Vec<(u32, u32)> {
    let mut seen = vec![false; w * h];
    let mut stack = vec![seed];
    let mut out = Vec::new();
    seen[seed as usize] = true;
    while let Some(i) = stack.pop() {
        let (x, y) = (i as usize % w, i as usize / w);
        out.push((x as u32, y as u32));
        let mut push = |j: usize| {
            if !seen[j] && q[j] <= level {
                seen[j] = true;
                stack.push(j as u32);
            }
        };
        if x > 0 {
            push(i as usize - 1);
        }
        if x + 1 < w {
            push(i as usize + 1);
        }
        if y > 0 {
            push(i as usize - w);
        }
        if y + 1 < h {
            push(i as usize + w);
        }
    }
    out.sort_by_key(|&(x, y)| (y, x));
    out
}

/// One polarity of the sweep. Each leaf component opens a branch seeded at
/// its smallest row-major pixel; when components merge, the branch of the
/// largest previous-level child (ties to the child with the smallest
/// top-left pixel) continues and the others end. Stability minima are found
/// over runs of equal q along each branch, endpooints included, and the
/// region is recovered at the first level of the winning run.
fn mser_one_polarity(
    q: &[u8],
    w: usize,
    h: usize,
    p: &MserParams,
    polarity: Polarity,
    max_area: usize,
) -> Vec<Region> {
    let n = w * h;
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); 256];
    for (i, &v) in q.iter().enumerate() {
        buckets[v as usize].push(i as u32);
    }

    let mut uf = Uf::new(n);
    let mut branches: Vec<Branch> = Vec::new();
    // root pixel, size, min pixel, owner branch
    let mut prev_roots: Vec<(u32, u32, u32, u32)> = Vec::new();
    let delta = p.delta as usize;

    for (t, bucket) in buckets.iter().enumerate() {
        for &i in bucket {
            uf.add(i);
            let (x, y) = (i as usize % w, i as usize / w);
            if x > 0 && uf.present(i - 1) {
                uf.union(i, i - 1);
            }
            if x + 1 < w && uf.present(i + 1) {
                uf.union(i, i + 1);
            }
            if y > 0 && uf.present(i - w as u32) {
                uf.union(i, i - w as u32);
            }
            if y + 1 < h && uf.present(i + w as u32) {
                uf.union(i, i + w as u32);
            }
        }

        // Children of each current root, from the previous level's roots.
        let mut children: BTreeMap<u32, Vec<(u32, u32, u32)>> = BTreeMap::new();
        for &(r, size, min_pix, owner) in &prev_roots {
            children
                .entry(uf.find(r))
                .or_default()
                .push((size, min_pix, owner));
        }
        let mut cur_roots: Vec<u32> = prev_roots.iter().map(|&(r, ..)| uf.find(r)).collect();
        cur_roots.extend(bucket.iter().map(|&i| uf.find(i)));
        cur_roots.sort_unstable();
        cur_roots.dedup();

        prev_roots.clear();
        for &r in &cur_roots {
            let owner = match children.get(&r) {
                None => {
                    // All pixels arrived this level: a new leaf.
                    branches.push(Branch {
                        seed: uf.min_pix[r as usize],
                        start: t,
                        sizes: Vec::new(),
                        end: None,
                    });
                    branches.len() as u32 - 1
                }
                Some(ch) => {
                    ch.iter()
                        .max_by_key(|&&(size, min_pix, _)| (size, std::cmp::Reverse(min_pix)))
                        .unwrap()
                        .2
                }
            };
            prev_roots.push((r, uf.size[r as usize], uf.min_pix[r as usize], owner));
        }

        let mut owned = vec![false; branches.len()];
        for &(_, _, _, owner) in &prev_roots {
            owned[owner as usize] = true;
        }
        for (bi, b) in branches.iter_mut().enumerate() {
            if b.end.is_none() && b.start < t && !owned[bi] {
                b.end = Some(t - 1);
            }
            if b.start <= t {
                let root = uf.find(b.seed);
                b.sizes.push(uf.size[root as usize]);
            }
        }
    }

    let mut out = Vec::new();
    for b in &branches {
        let end = b.end.unwrap_or(255);
        let sz = |i: usize| b.sizes[i - b.start] as u64;
        let qs: Vec<(u64, u64)> = (b.start..=end)
            .map(|i| {
                let up = sz((i + delta).min(255));
                let down = if i >= b.start + delta { sz(i - delta) } else { 0 };
                (up - down, sz(i))
            })
            .collect();

        // Compress equal-q runs, then pick runs strictly below both
        // neighbors.
        let mut runs: Vec<((u64, u64), usize)> = Vec::new();
        for (off, &qv) in qs.iter().enumerate() {
            match runs.last() {
                Some(&(last, _)) if q_equal(last, qv) => {}
                _ => runs.push((qv, b.start + off)),
            }
        }
        for (j, &(qv, first)) in runs.iter().enumerate() {
            let below_prev = j == 0 || q_less(qv, runs[j - 1].0);
            let below_next = j + 1 == runs.len() || q_less(qv, runs[j + 1].0);
            if !(below_prev && below_next) {
                continue;
            }
            let area = sz(first) as usize;
            if area < p.min_area || area > max_area {
                continue;
            }
            let stability = qv.0 as f64 / qv.1 as f64;
            if stability > p.max_variation {
                continue;
            }
            out.push(Region {
                pixels: flood_fill(q, w, h, b.seed, first as u8),
                polarity,
                stability,
                threshold: first as u8,
            });
        }
    }
    out.sort_by_key(|r| {
        let (x, y) = r.pixels[0];
        (r.threshold, r.area(), y as usize * w + x as usize)
    });
    out
}

/// Dark-on-bright regions from the image, bright-on-dark from its
/// inversion; dark regions come first, each polarity ordered by detection
/// threshold, area, then top-left pixel. Bright thresholds are reported in
/// original intensity units, so pixels sit at or above them.
pub fn detect_mser(img: &GrayImage, p: &MserParams) -> Vec<Region> {
    let (w, h) = (img.width(), img.height());
    let max_area = p.max_area.unwrap_or(w * h / 4);
    let q = quantize(img);
    let mut out = mser_one_polarity(&q, w, h, p, Polarity::Min, max_area);
    let inv: Vec<u8> = q.iter().map(|&v| 255 - v).collect();
    let mut bright = mser_one_polarity(&inv, w, h, p, Polarity::Max, max_area);
    for r in &mut bright {
        r.threshold = 255 - r.threshold;
    }
    out.append(&mut bright);
    out
}

/// General second-moment ellipse keypoints for every stable region.
pub fn detect_mser_keypoints(img: &GrayImage, p: &MserParams) -> Vec<Keypoint> {
    detect_mser(img, p)
        .iter()
        .map(|r| fit_ellipse(r, false))
        .collect()
}
