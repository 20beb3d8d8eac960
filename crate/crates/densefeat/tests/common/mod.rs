//! Independent reference computations for the acceptance suite: a
//! threshold-sweep region oracle built on per-level component relabeling, a
//! radial-polynomial oracle built from exact rational coefficients, a
//! quadratic-time precision-curve oracle, and synthetic image generators.

use std::cmp::Reverse;
use std::collections::HashSet;

use densefeat::detect::mser::{quantize, MserParams};
use densefeat::detect::region::Region;
use densefeat::img::GrayImage;
use densefeat::keypoint::Polarity;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Threshold-sweep region oracle.
//
// Components are recomputed from scratch at every threshold by breadth-first
// search, with no incremental merging. Branch identity follows the rule that
// the largest previous-level component continues through a merge, ties going
// to the component with the smallest row-major pixel.

const UNLABELED: u32 = u32::MAX;

struct LevelComps {
    /// Per-pixel component id at this threshold, UNLABELED where the pixel
    /// is above it.
    labels: Vec<u32>,
    sizes: Vec<u32>,
    /// Smallest row-major pixel of each component.
    min_pix: Vec<u32>,
}

fn components_at(q: &[u8], w: usize, h: usize, t: u8) -> LevelComps {
    let n = w * h;
    let mut labels = vec![UNLABELED; n];
    let mut sizes = Vec::new();
    let mut min_pix = Vec::new();
    let mut queue = Vec::new();
    for start in 0..n {
        if q[start] > t || labels[start] != UNLABELED {
            continue;
        }
        let id = sizes.len() as u32;
        min_pix.push(start as u32);
        let mut count = 0u32;
        labels[start] = id;
        queue.push(start);
        while let Some(i) = queue.pop() {
            count += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if labels[j] == UNLABELED && q[j] <= t {
                    labels[j] = id;
                    queue.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(count);
    }
    LevelComps {
        labels,
        sizes,
        min_pix,
    }
}

struct OracleBranch {
    seed: u32,
    start: usize,
    /// Last threshold at which this branch still owns the component that
    /// contains its seed; 255 when ownership is never lost.
    end: usize,
}

fn ratio_less(a: (u64, u64), b: (u64, u64)) -> bool {
    (a.0 as u128) * (b.1 as u128) < (b.0 as u128) * (a.1 as u128)
}

fn ratio_equal(a: (u64, u64), b: (u64, u64)) -> bool {
    (a.0 as u128) * (b.1 as u128) == (b.0 as u128) * (a.1 as u128)
}

fn oracle_one_polarity(
    q: &[u8],
    w: usize,
    h: usize,
    p: &MserParams,
    polarity: Polarity,
    max_area: usize,
) -> Vec<Region> {
    let levels: Vec<LevelComps> = (0..256).map(|t| components_at(q, w, h, t as u8)).collect();

    let mut branches: Vec<OracleBranch> = Vec::new();
    let mut owner_prev: Vec<u32> = Vec::new();
    for t in 0..256usize {
        let lc = &levels[t];
        let ncomp = lc.sizes.len();
        // Strongest previous-level component inside each current component:
        // (size, Reverse(min_pix), owning branch).
        let mut best: Vec<Option<(u32, Reverse<u32>, u32)>> = vec![None; ncomp];
        if t > 0 {
            let prev = &levels[t - 1];
            for (c, &owner) in owner_prev.iter().enumerate() {
                let cur = lc.labels[prev.min_pix[c] as usize] as usize;
                let cand = (prev.sizes[c], Reverse(prev.min_pix[c]), owner);
                if best[cur].is_none_or(|b| (cand.0, cand.1) > (b.0, b.1)) {
                    best[cur] = Some(cand);
                }
            }
        }
        let mut owner_cur = Vec::with_capacity(ncomp);
        for (c, slot) in best.iter().enumerate() {
            owner_cur.push(match *slot {
                None => {
                    branches.push(OracleBranch {
                        seed: lc.min_pix[c],
                        start: t,
                        end: 255,
                    });
                    branches.len() as u32 - 1
                }
                Some((_, _, owner)) => owner,
            });
        }
        let mut owned = vec![false; branches.len()];
        for &o in &owner_cur {
            owned[o as usize] = true;
        }
        for (bi, b) in branches.iter_mut().enumerate() {
            if b.start < t && b.end == 255 && !owned[bi] {
                b.end = t - 1;
            }
        }
        owner_prev = owner_cur;
    }

    let delta = p.delta as usize;
    let mut out = Vec::new();
    for b in &branches {
        let sz = |i: usize| {
            let lc = &levels[i];
            lc.sizes[lc.labels[b.seed as usize] as usize] as u64
        };
        let ratios: Vec<(u64, u64)> = (b.start..=b.end)
            .map(|i| {
                let up = sz((i + delta).min(255));
                let down = if i >= b.start + delta { sz(i - delta) } else { 0 };
                (up - down, sz(i))
            })
            .collect();

        let mut runs: Vec<((u64, u64), usize)> = Vec::new();
        for (off, &rv) in ratios.iter().enumerate() {
            match runs.last() {
                Some(&(last, _)) if ratio_equal(last, rv) => {}
                _ => runs.push((rv, b.start + off)),
            }
        }
        for (j, &(rv, first)) in runs.iter().enumerate() {
            let below_prev = j == 0 || ratio_less(rv, runs[j - 1].0);
            let below_next = j + 1 == runs.len() || ratio_less(rv, runs[j + 1].0);
            if !(below_prev && below_next) {
                continue;
            }
            let area = sz(first) as usize;
            if area < p.min_area || area > max_area {
                continue;
            }
            let stability = rv.0 as f64 / rv.1 as f64;
            if stability > p.max_variation {
                continue;
            }
            let lc = &levels[first];
            let id = lc.labels[b.seed as usize];
            let pixels: Vec<(u32, u32)> = (0..w * h)
                .filter(|&i| lc.labels[i] == id)
                .map(|i| ((i % w) as u32, (i / w) as u32))
                .collect();
            out.push(Region {
                pixels,
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

/// Stable-region reference: dark regions from the quantized image, bright
/// regions from its inversion with thresholds mapped back, dark first.
pub fn mser_oracle(img: &GrayImage, p: &MserParams) -> Vec<Region> {
    let (w, h) = (img.width(), img.height());
    let max_area = p.max_area.unwrap_or(w * h / 4);
    let q = quantize(img);
    let mut out = oracle_one_polarity(&q, w, h, p, Polarity::Min, max_area);
    let inv: Vec<u8> = q.iter().map(|&v| 255 - v).collect();
    let mut bright = oracle_one_polarity(&inv, w, h, p, Polarity::Max, max_area);
    for r in &mut bright {
        r.threshold = 255 - r.threshold;
    }
    out.append(&mut bright);
    out
}

pub fn regions_equal(a: &[Region], b: &[Region]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.polarity == y.polarity
                && x.threshold == y.threshold
                && x.stability == y.stability
                && x.pixels == y.pixels
        })
}

// ---------------------------------------------------------------------------
// Radial polynomial oracle. Coefficients are exact reduced fractions
// computed with integer factorials; evaluation is a Horner pass over the
// dense coefficient list.

fn fact(n: usize) -> i128 {
    (1..=n as i128).product()
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

fn reduce(num: i128, den: i128) -> (i128, i128) {
    let g = gcd(num, den).max(1);
    let s = if den < 0 { -1 } else { 1 };
    (s * num / g, s * den / g)
}

/// Exact coefficients of the degree-n radial polynomial for repetition l,
/// ordered from the r^n term down to the constant. Entries below r^l are
/// zero.
pub fn radial_coeffs(n: u32, l: u32) -> Vec<(i128, i128)> {
    assert!(l <= n && n <= 8);
    let (n, l) = (n as usize, l as usize);
    let mut coeffs = vec![(0i128, 1i128); n + 1];
    for (s, slot) in coeffs.iter_mut().enumerate().take(n - l + 1) {
        let sign = if s % 2 == 0 { 1 } else { -1 };
        let num = sign * fact(2 * n + 1 - s);
        let den = fact(s) * fact(n - l - s) * fact(n + l + 1 - s);
        *slot = reduce(num, den);
    }
    coeffs
}

pub fn radial_eval(coeffs: &[(i128, i128)], r: f64) -> f64 {
    let mut acc = 0.0f64;
    for &(num, den) in coeffs {
        acc = acc * r + num as f64 / den as f64;
    }
    acc
}

/// Exact rational sum of the coefficients, which is the polynomial's value
/// at r = 1.
pub fn radial_coeff_sum(coeffs: &[(i128, i128)]) -> (i128, i128) {
    let mut acc = (0i128, 1i128);
    for &(num, den) in coeffs {
        acc = reduce(acc.0 * den + num * acc.1, acc.1 * den);
    }
    acc
}

// ---------------------------------------------------------------------------
// Quadratic-time ranking quality oracle: precision is recomputed from
// scratch at every cutoff, and cutoffs ending in a relevant item contribute
// their precision.

pub fn ap_oracle(ranked: &[usize], relevant: &HashSet<usize>) -> f64 {
    let mut sum = 0.0f64;
    for k in 1..=ranked.len() {
        if relevant.contains(&ranked[k - 1]) {
            let hits = ranked[..k].iter().filter(|id| relevant.contains(id)).count();
            sum += hits as f64 / k as f64;
        }
    }
    sum / relevant.len() as f64
}

// ---------------------------------------------------------------------------
// Synthetic images.

pub fn noise_image(seed: u64, w: usize, h: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(w, h, |_, _| rng.random::<f32>())
}

/// Random image whose pixels take one of `levels` evenly spaced gray values.
pub fn leveled_noise(seed: u64, w: usize, h: usize, levels: u32) -> GrayImage {
    assert!(levels >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(w, h, |_, _| {
        rng.random_range(0..levels) as f32 / (levels - 1) as f32
    })
}

/// Smooth scene of random signed Gaussian blobs over a mid-gray background
/// with a touch of pixel noise, min-max normalized to [0, 1].
pub fn blob_scene(seed: u64, w: usize, h: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = vec![0.0f64; w * h];
    for _ in 0..40 {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let sigma = rng.random_range(6.0..w.min(h) as f64 / 4.0);
        let amp = rng.random_range(0.3..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let reach = (3.0 * sigma).ceil() as isize;
        let (icx, icy) = (cx.round() as isize, cy.round() as isize);
        for y in (icy - reach).max(0)..(icy + reach).min(h as isize) {
            for x in (icx - reach).max(0)..(icx + reach).min(w as isize) {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                field[y as usize * w + x as usize] += amp * (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    for v in &mut field {
        *v += rng.random_range(-0.02..0.02);
    }
    let lo = field.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    GrayImage::from_fn(w, h, |x, y| ((field[y * w + x] - lo) / span) as f32)
}
