//! PCA rotation for descriptors: full 128-dimensional rotation (no
//! reduction), trained once on a sample and applied as center, rotate,
//! renormalize.

use nalgebra::{DMatrix, DVector};

use super::{DescState, Descriptor};
use crate::error::{Error, Result};

/// Minimum training sample; below this the covariance is too poorly
/// conditioned to be worth fitting.
pub const MIN_PCA_SAMPLES: usize = 256;

/// Centering mean and orthonormal rotation, eigenvectors in columns ordered
/// by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f32>,
    /// Row-major dim*dim; row r holds component r (an eigenvector).
    pub rotation: Vec<f32>,
    pub dim: usize,
}

/// Fits mean and rotation on a sample of rootsift descriptors. Eigenvectors
/// are sorted by descending eigenvalue and sign-fixed so each one's
/// largest-magnitude entry is positive; zero-variance directions sort last
/// while keeping the basis orthonormal.
pub fn pca_train(sample: &[Descriptor]) -> Result<PcaModel> {
    if sample.len() < MIN_PCA_SAMPLES {
        return Err(Error::param(format!(
            "pca needs at least {MIN_PCA_SAMPLES} descriptors, got {}",
            sample.len()
        )));
    }
    let dim = sample[0].values.len();
    for d in sample {
        if d.state != DescState::RootSift {
            return Err(Error::param(format!(
                "pca trains on rootsift descriptors, got {:?}",
                d.state
            )));
        }
        if d.values.len() != dim {
            return Err(Error::param("mixed descriptor dimensions in pca sample"));
        }
    }

    let n = sample.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for d in sample {
        for (m, &v) in mean.iter_mut().zip(&d.values) {
            *m += v as f64;
        }
    }
    for m in &mut mean {
        *m /= n;
    }

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut centered = vec![0.0f64; dim];
    for d in sample {
        for (c, (&v, &m)) in centered.iter_mut().zip(d.values.iter().zip(&mean)) {
            *c = v as f64 - m;
        }
        for i in 0..dim {
            for j in i..dim {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut rotation = vec![0.0f32; dim * dim];
    for (r, &col) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(col);
        let lead = (0..dim)
            .max_by(|&a, &b| {
                v[a].abs()
                    .partial_cmp(&v[b].abs())
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        let flip = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..dim {
            rotation[r * dim + i] = (v[i] * flip) as f32;
        }
    }

    Ok(PcaModel {
        mean: mean.iter().map(|&m| m as f32).collect(),
        rotation,
        dim,
    })
}

/// Centers, rotates and renormalizes one descriptor. A vector that centers to
/// zero stays zero instead of being blown up by normalization.
pub fn pca_apply(model: &PcaModel, d: &Descriptor) -> Result<Descriptor> {
    if d.state != DescState::RootSift {
        return Err(Error::param(format!(
            "pca applies to rootsift descriptors, got {:?}",
            d.state
        )));
    }
    if d.values.len() != model.dim {
        return Err(Error::param(format!(
            "descriptor dim {} does not match model dim {}",
            d.values.len(),
            model.dim
        )));
    }
    let rotated = rotate_centered(model, &d.values);
    let norm: f64 = rotated.iter().map(|&v| v * v).sum::<f64>().sqrt();
    let values = if norm == 0.0 {
        vec![0.0; model.dim]
    } else {
        rotated.iter().map(|&v| (v / norm) as f32).collect()
    };
    Ok(Descriptor {
        values,
        state: DescState::Pca,
        source: d.source,
    })
}

/// Center and rotate without the final normalization; also used to carry
/// codebook vectors into the rotated space.
pub fn rotate_centered(model: &PcaModel, values: &[f32]) -> Vec<f64> {
    assert_eq!(values.len(), model.dim);
    let centered = DVector::from_iterator(
        model.dim,
        values
            .iter()
            .zip(&model.mean)
            .map(|(&v, &m)| v as f64 - m as f64),
    );
    (0..model.dim)
        .map(|r| {
            let mut acc = 0.0f64;
            for i in 0..model.dim {
                acc += model.rotation[r * model.dim + i] as f64 * centered[i];
            }
            acc
        })
        .collect()
}
