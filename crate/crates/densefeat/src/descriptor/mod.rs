//! Patch descriptor pipeline: extraction, up-right SIFT, RootSIFT, PCA
//! rotation, and norm filtering. Descriptors move through a one-way state
//! machine (raw, then rootsift, then pca); each transform checks the state it
//! consumes so stages cannot be skipped or repeated.

pub mod patch;
pub mod pca;
pub mod sift;

use std::path::Path;

use crate::error::{Error, Result};
use crate::io;
use crate::keypoint::Keypoint;

pub use patch::{extract_patch, patch_to_scale, Patch, ScalingRule};
pub use pca::{pca_apply, pca_train, PcaModel};
pub use sift::{sift, DESCRIPTOR_DIM};

/// Squared-norm threshold below which raw descriptors are dropped.
pub const NORM_FILTER_THRESHOLD: f32 = 5000.0;

const DESC_MAGIC: &[u8; 4] = b"DSC1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescState {
    Raw,
    RootSift,
    Pca,
}

/// 128-dimensional patch descriptor plus the keypoint it came from.
#[derive(Debug, Clone)]
pub struct Descriptor {
    pub values: Vec<f32>,
    pub state: DescState,
    pub source: Keypoint,
}

impl Descriptor {
    /// Squared Euclidean norm in f64, the quantity the norm filter thresholds.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|&v| (v as f64) * v as f64).sum()
    }
}

/// L1-normalize then take elementwise square roots. A zero vector stays zero
/// rather than dividing by zero; zero descriptors are normally removed by the
/// norm filter before this stage anyway.
pub fn rootsift(d: Descriptor) -> Result<Descriptor> {
    if d.state != DescState::Raw {
        return Err(Error::param(format!(
            "rootsift expects a raw descriptor, got {:?}",
            d.state
        )));
    }
    let mut values = d.values;
    rootsift_in_place(&mut values);
    Ok(Descriptor {
        values,
        state: DescState::RootSift,
        source: d.source,
    })
}

/// The same transform on a bare row, for callers that carry descriptors as
/// plain matrices (codebook training, file-level CLI steps).
pub fn rootsift_in_place(values: &mut [f32]) {
    let l1: f64 = values.iter().map(|&v| (v as f64).abs()).sum();
    if l1 == 0.0 {
        return;
    }
    for v in values {
        *v = ((*v as f64 / l1).max(0.0).sqrt()) as f32;
    }
}

/// Keeps raw descriptors whose squared norm reaches `t` (inclusive), in their
/// original order.
pub fn l2_filter(descs: Vec<Descriptor>, t: f32) -> Vec<Descriptor> {
    descs
        .into_iter()
        .filter(|d| {
            assert_eq!(d.state, DescState::Raw, "norm filter runs before rootsift");
            d.norm_squared() >= t as f64
        })
        .collect()
}

/// Writes descriptor values: magic, count, dim as u32 little-endian, then
/// row-major f32 values. Keypoints travel in their own text file, same order.
pub fn write_descriptors(path: &Path, descs: &[Descriptor]) -> Result<()> {
    write_rows_with_dim(
        path,
        descs.first().map_or(DESCRIPTOR_DIM, |d| d.values.len()),
        descs.iter().map(|d| d.values.as_slice()),
        descs.len(),
    )
}

/// Same format for bare rows; image vectors are stored this way with a
/// single row.
pub fn write_rows(path: &Path, rows: &[Vec<f32>]) -> Result<()> {
    write_rows_with_dim(
        path,
        rows.first().map_or(DESCRIPTOR_DIM, |r| r.len()),
        rows.iter().map(|r| r.as_slice()),
        rows.len(),
    )
}

fn write_rows_with_dim<'a>(
    path: &Path,
    dim: usize,
    rows: impl Iterator<Item = &'a [f32]>,
    count: usize,
) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + count * dim * 4);
    buf.extend_from_slice(DESC_MAGIC);
    io::push_u32(&mut buf, count as u32);
    io::push_u32(&mut buf, dim as u32);
    for r in rows {
        assert_eq!(r.len(), dim, "mixed descriptor dimensions");
        io::push_f32s(&mut buf, r);
    }
    io::write_file(path, &buf)
}

/// Reads a descriptor file back as (dim, row-major matrix).
pub fn read_descriptors(path: &Path) -> Result<(usize, Vec<Vec<f32>>)> {
    let buf = io::read_file(path)?;
    let mut cur = io::Cursor::new(&buf, path);
    cur.expect_magic(DESC_MAGIC)?;
    let count = cur.read_u32("count")? as usize;
    let dim = cur.read_u32("dim")? as usize;
    if dim == 0 || dim > 1 << 16 {
        return Err(Error::format(path, 8, format!("implausible dim {dim}")));
    }
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        rows.push(cur.read_f32s(dim, "descriptor values")?);
    }
    cur.expect_eof()?;
    Ok((dim, rows))
}
