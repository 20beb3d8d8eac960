//! Visual codebook training and VLAD aggregation. All math runs on plain
//! f32 rows with f64 accumulation in a fixed order, so identical inputs and
//! seed reproduce identical bytes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io;

const CODEBOOK_MAGIC: &[u8; 4] = b"CBK1";

/// K-means visual vocabulary. `centroids` is row-major K by dim.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub k: usize,
    pub dim: usize,
    pub seed: u64,
    pub centroids: Vec<f32>,
}

impl Codebook {
    pub fn centroid(&self, k: usize) -> &[f32] {
        &self.centroids[k * self.dim..(k + 1) * self.dim]
    }

    /// Index of the nearest centroid, lowest index on ties.
    pub fn assign(&self, row: &[f32]) -> usize {
        assert_eq!(row.len(), self.dim);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for k in 0..self.k {
            let d = dist2(row, self.centroid(k));
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    /// Sum of squared distances from each row to its nearest centroid.
    pub fn objective(&self, rows: &[Vec<f32>]) -> f64 {
        rows.iter()
            .map(|r| dist2(r, self.centroid(self.assign(r))))
            .sum()
    }
}

fn dist2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Seeded k-means++ initialization followed by Lloyd iterations until the
/// assignment reaches a fixpoint or `max_iters` passes. Clusters that end up
/// empty are re-seeded from the point farthest from its centroid.
pub fn kmeans_train(rows: &[Vec<f32>], k: usize, seed: u64, max_iters: usize) -> Result<Codebook> {
    if k == 0 {
        return Err(Error::param("codebook size must be at least 1"));
    }
    if rows.len() < k {
        return Err(Error::param(format!(
            "k-means needs at least {k} descriptors, got {}",
            rows.len()
        )));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::param("mixed descriptor dimensions in k-means input"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![0.0f32; k * dim];

    // k-means++ seeding: first center uniform, the rest sampled with
    // probability proportional to squared distance from the chosen set.
    let first = rng.random_range(0..rows.len());
    centroids[..dim].copy_from_slice(&rows[first]);
    let mut d2: Vec<f64> = rows.iter().map(|r| dist2(r, &rows[first])).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = rows.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // Every remaining point coincides with a centroid.
            rng.random_range(0..rows.len())
        };
        centroids[c * dim..(c + 1) * dim].copy_from_slice(&rows[pick]);
        for (slot, r) in d2.iter_mut().zip(rows) {
            *slot = slot.min(dist2(r, &rows[pick]));
        }
    }

    let mut book = Codebook {
        k,
        dim,
        seed,
        centroids,
    };
    let mut assign: Vec<usize> = rows.iter().map(|r| book.assign(r)).collect();
    for _ in 0..max_iters {
        // Means in f64, fixed input order.
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (r, &a) in rows.iter().zip(&assign) {
            counts[a] += 1;
            for (s, &v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(r) {
                *s += v as f64;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for i in 0..dim {
                book.centroids[c * dim + i] = (sums[c * dim + i] / counts[c] as f64) as f32;
            }
        }
        // Empty clusters take the farthest point from its current centroid,
        // each empty cluster a different point.
        let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if !empties.is_empty() {
            let mut far: Vec<(usize, f64)> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| (i, dist2(r, book.centroid(assign[i]))))
                .collect();
            far.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            for (c, &(i, _)) in empties.iter().zip(&far) {
                let row = &rows[i];
                book.centroids[c * dim..(c + 1) * dim].copy_from_slice(row);
            }
        }
        let next: Vec<usize> = rows.iter().map(|r| book.assign(r)).collect();
        let done = next == assign && empties.is_empty();
        assign = next;
        if done {
            break;
        }
    }
    Ok(book)
}

/// VLAD image vector: concatenated per-word residual sums, `normalized`
/// records whether l2_normalize has run.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVector {
    pub values: Vec<f32>,
    pub normalized: bool,
}

/// Aggregates descriptors into per-word residuals (d minus its nearest
/// centroid, ties to the lowest index). An empty set encodes to a zero
/// vector.
pub fn vlad_encode(rows: &[Vec<f32>], book: &Codebook) -> ImageVector {
    let mut acc = vec![0.0f64; book.k * book.dim];
    for r in rows {
        assert_eq!(r.len(), book.dim, "descriptor dim mismatch");
        let a = book.assign(r);
        let c = book.centroid(a);
        for ((slot, &v), &cv) in acc[a * book.dim..(a + 1) * book.dim]
            .iter_mut()
            .zip(r.iter())
            .zip(c)
        {
            *slot += v as f64 - cv as f64;
        }
    }
    ImageVector {
        values: acc.iter().map(|&v| v as f32).collect(),
        normalized: false,
    }
}

/// Elementwise signed power: sign(x) |x|^beta.
pub fn power_law(v: &ImageVector, beta: f32) -> Result<ImageVector> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!(
            "power-law exponent must be in (0, 1], got {beta}"
        )));
    }
    let b = beta as f64;
    Ok(ImageVector {
        values: v
            .values
            .iter()
            .map(|&x| ((x as f64).signum() * (x as f64).abs().powf(b)) as f32)
            .collect(),
        normalized: false,
    })
}

/// Scales to unit Euclidean length. The zero vector has no direction; it is
/// passed through, flagged normalized, and logged.
pub fn l2_normalize(v: &ImageVector) -> ImageVector {
    let norm: f64 = v.values.iter().map(|&x| (x as f64) * x as f64).sum::<f64>();
    let norm = norm.sqrt();
    let values = if norm == 0.0 {
        log::warn!("normalizing a zero image vector (image had no usable descriptors)");
        v.values.clone()
    } else {
        v.values.iter().map(|&x| (x as f64 / norm) as f32).collect()
    };
    ImageVector {
        values,
        normalized: true,
    }
}

pub fn write_codebook(path: &Path, book: &Codebook) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + book.centroids.len() * 4);
    buf.extend_from_slice(CODEBOOK_MAGIC);
    io::push_u32(&mut buf, book.k as u32);
    io::push_u32(&mut buf, book.dim as u32);
    io::push_u64(&mut buf, book.seed);
    io::push_f32s(&mut buf, &book.centroids);
    io::write_file(path, &buf)
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    let buf = io::read_file(path)?;
    let mut cur = io::Cursor::new(&buf, path);
    cur.expect_magic(CODEBOOK_MAGIC)?;
    let k = cur.read_u32("codebook size")? as usize;
    let dim = cur.read_u32("dim")? as usize;
    let seed = cur.read_u64("seed")?;
    if k == 0 || dim == 0 || k > 1 << 20 || dim > 1 << 16 {
        return Err(Error::format(path, 4, format!("implausible shape {k}x{dim}")));
    }
    let centroids = cur.read_f32s(k * dim, "centroids")?;
    cur.expect_eof()?;
    Ok(Codebook {
        k,
        dim,
        seed,
        centroids,
    })
}
