//! Pseudo-Zernike filter bank: radial polynomials, sampled cos/sin filter
//! pairs, capacity-constrained extremum selection over the scale stack.

use std::path::Path;

use crate::error::{Error, Result};
use crate::filtering::convolve2d;
use crate::img::GrayImage;
use crate::keypoint::{DetectorId, Keypoint, Polarity};
use crate::response::{
    local_extrema, NeighborhoodKind, ResponseMap, SearchPolarity, RESPONSE_INTENSITY_SCALE,
};
use crate::scale::ScaleStack;

/// Exact f64 factorials; 17! is the largest value the radial polynomials
/// need (order 8) and is still exactly representable.
const FACTORIALS: [f64; 18] = {
    let mut t = [1.0f64; 18];
    let mut i = 1;
    while i < 18 {
        t[i] = t[i - 1] * i as f64;
        i += 1;
    }
    t
};

pub const MAX_RADIAL_ORDER: u32 = 8;

/// Pseudo-Zernike radial polynomial R_{n|l|}(r).
pub fn radial_poly(n: u32, l: i32, r: f64) -> Result<f64> {
    let la = l.unsigned_abs();
    if la > n {
        return Err(Error::param(format!("repetition |{l}| exceeds order {n}")));
    }
    if n > MAX_RADIAL_ORDER {
        return Err(Error::param(format!(
            "order {n} above factorial table limit {MAX_RADIAL_ORDER}"
        )));
    }
    let (n, la) = (n as usize, la as usize);
    let mut sum = 0.0f64;
    for s in 0..=(n - la) {
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let num = FACTORIALS[2 * n + 1 - s];
        let den = FACTORIALS[s] * FACTORIALS[n - la - s] * FACTORIALS[n + la + 1 - s];
        sum += sign * num / den * r.powi((n - s) as i32);
    }
    Ok(sum)
}

#[derive(Debug, Clone)]
pub struct ZernikeFilter {
    pub n: u32,
    pub l: i32,
    pub size: usize,
    /// Row-major kernel: zero outside the inscribed disc, zero mean, unit
    /// l2 norm.
    pub kernel: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    pub filters: Vec<ZernikeFilter>,
    pub max_order: u32,
    pub filter_size: usize,
}

/// Samples the real filter pair for every order n = 1..=max_order and
/// repetition l = -n..=n: R_{n|l|}(r) cos(|l| theta) for l >= 0 and
/// R_{n|l|}(r) sin(|l| theta) for l < 0. The radius is normalized so r = 1
/// at the patch edge midpoint; samples outside the unit disc are zero. Each
/// kernel has its disc mean removed and is scaled to unit l2 norm, so flat
/// image regions produce exactly zero response.
pub fn build_filter_bank(max_order: u32, filter_size: usize) -> Result<FilterBank> {
    if !(1..=6).contains(&max_order) {
        return Err(Error::param(format!("max_order {max_order} outside 1..=6")));
    }
    if filter_size < 5 || filter_size.is_multiple_of(2) {
        return Err(Error::param(format!(
            "filter_size {filter_size} must be odd and at least 5"
        )));
    }
    let c = (filter_size - 1) as f64 / 2.0;
    let mut filters = Vec::new();
    for n in 1..=max_order {
        for l in -(n as i32)..=n as i32 {
            let mut kernel = vec![0.0f64; filter_size * filter_size];
            let mut disc = Vec::new();
            for y in 0..filter_size {
                for x in 0..filter_size {
                    let dx = x as f64 - c;
                    let dy = y as f64 - c;
                    let r = (dx * dx + dy * dy).sqrt() / c;
                    if r > 1.0 {
                        continue;
                    }
                    let theta = dy.atan2(dx);
                    let ang = if l >= 0 {
                        (l as f64 * theta).cos()
                    } else {
                        ((-l) as f64 * theta).sin()
                    };
                    let v = radial_poly(n, l, r)? * ang;
                    kernel[y * filter_size + x] = v;
                    disc.push(y * filter_size + x);
                }
            }
            let mean = disc.iter().map(|&i| kernel[i]).sum::<f64>() / disc.len() as f64;
            for &i in &disc {
                kernel[i] -= mean;
            }
            let norm = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut kernel {
                    *v /= norm;
                }
            }
            filters.push(ZernikeFilter {
                n,
                l,
                size: filter_size,
                kernel,
            });
        }
    }
    Ok(FilterBank {
        filters,
        max_order,
        filter_size,
    })
}

/// Per-(filter, polarity, scale) keypoint budgets. Capacity is shared
/// uniformly across filters and across the two polarities; across scales the
/// finest level gets the largest share with a ratio of 2 between consecutive
/// levels, handed out by a floor cascade whose remainder lands on the
/// coarsest scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityTable {
    pub n_z: usize,
    pub n_filters: usize,
    per_scale: Vec<usize>,
}

impl CapacityTable {
    pub fn budget(&self, filter: usize, _polarity: Polarity, scale: usize) -> usize {
        assert!(filter < self.n_filters);
        self.per_scale[scale]
    }

    /// Budget per scale for one (filter, polarity) pair; identical for all
    /// filters and both polarities.
    pub fn per_scale(&self) -> &[usize] {
        &self.per_scale
    }

    pub fn n_scales(&self) -> usize {
        self.per_scale.len()
    }

    pub fn total(&self) -> usize {
        2 * self.n_filters * self.per_scale.iter().sum::<usize>()
    }
}

pub fn allocate_capacity(n_z: usize, n_filters: usize, n_scales: usize) -> CapacityTable {
    assert!(n_z >= 1 && n_filters >= 1 && (1..=32).contains(&n_scales));
    let per_filter = n_z / n_filters;
    let per_polarity = per_filter / 2;

    let mut per_scale = Vec::with_capacity(n_scales);
    let mut remaining = per_polarity as u64;
    for i in 0..n_scales {
        let b = if i + 1 == n_scales {
            remaining
        } else {
            // Weight of scale i relative to all not-yet-allocated scales:
            // 2^(n-1-i) / (2^(n-i) - 1), floored.
            let w = 1u64 << (n_scales - 1 - i);
            let wsum = (1u64 << (n_scales - i)) - 1;
            remaining * w / wsum
        };
        per_scale.push(b as usize);
        remaining -= b;
    }
    CapacityTable {
        n_z,
        n_filters,
        per_scale,
    }
}

/// Convolves every scale level with every filter, finds strict maxima and
/// minima per (filter, level), ranks maxima by descending and minima by
/// ascending response (ties broken by ascending row-major pixel index), and
/// keeps the top entries up to the capacity budget. Coordinates map back to
/// original resolution. The same location may appear under several filters;
/// within one (filter, polarity, level) duplicates cannot occur.
pub fn detect_zernike(
    img: &GrayImage,
    bank: &FilterBank,
    n_z: usize,
    n_scales: usize,
) -> Vec<Keypoint> {
    assert!(n_z >= 1 && n_scales >= 1 && !bank.filters.is_empty());
    let stack = ScaleStack::build(img, n_scales);
    let cap = allocate_capacity(n_z, bank.filters.len(), stack.n_sigma());

    let mut out = Vec::new();
    for (li, level) in stack.levels().iter().enumerate() {
        let budget = cap.per_scale()[li];
        if budget == 0 {
            continue;
        }
        let (w, h) = (level.width(), level.height());
        let sigma = bank.filter_size as f32 / 2.0 * ScaleStack::nominal_factor(li);
        for filt in &bank.filters {
            let vals = convolve2d(
                level.data(),
                w,
                h,
                &filt.kernel,
                filt.size,
                RESPONSE_INTENSITY_SCALE as f64,
            );
            let resp = ResponseMap::new(w, h, vals, li);
            for polarity in [SearchPolarity::Maxima, SearchPolarity::Minima] {
                let mut pts = local_extrema(
                    &resp,
                    NeighborhoodKind::Strict3x3,
                    f32::NEG_INFINITY,
                    polarity,
                );
                pts.sort_by(|a, b| {
                    let va = (a.value, a.y * w + a.x);
                    let vb = (b.value, b.y * w + b.x);
                    match polarity {
                        // Strongest first for maxima, most negative first
                        // for minima; equal responses by pixel index.
                        SearchPolarity::Maxima => vb
                            .0
                            .partial_cmp(&va.0)
                            .unwrap()
                            .then(va.1.cmp(&vb.1)),
                        _ => va.0.partial_cmp(&vb.0).unwrap().then(va.1.cmp(&vb.1)),
                    }
                });
                pts.truncate(budget);
                for e in pts {
                    let (x, y) = stack.to_original(li, e.x as f32, e.y as f32);
                    out.push(Keypoint {
                        x,
                        y,
                        sigma,
                        response: e.value,
                        scale_index: li as u32,
                        detector: DetectorId::Zernike,
                        polarity: e.polarity,
                    });
                }
            }
        }
    }
    out
}

/// Writes each filter kernel as an RMAP raster plus an `index.txt` with one
/// "n l filename" line per filter, for visual inspection.
pub fn export_bank(bank: &FilterBank, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut index = String::new();
    for f in &bank.filters {
        let name = format!("filter_{}_{}.rmap", f.n, f.l);
        let as_f32: Vec<f32> = f.kernel.iter().map(|&v| v as f32).collect();
        crate::io::write_raster(
            &dir.join(&name),
            crate::response::RMAP_MAGIC,
            f.size as u32,
            f.size as u32,
            &as_f32,
        )?;
        index.push_str(&format!("{} {} {}\n", f.n, f.l, name));
    }
    crate::io::write_file(&dir.join("index.txt"), index.as_bytes())
}
