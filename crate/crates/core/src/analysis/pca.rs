use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::Error;

/// Fitted principal component projection.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `m × d`, orthonormal rows ordered by decreasing eigenvalue.
    pub components: Matrix,
    /// All `d` covariance eigenvalues, descending and clamped at 0.
    pub eigenvalues: Vec<f64>,
    pub m: usize,
    /// Fraction of total variance carried by the first `m` components.
    pub cumulative_explained: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Fits PCA on the population covariance of `x` and keeps the smallest
/// number of components whose cumulative explained variance reaches
/// `variance_target`.
pub fn pca_fit(x: &Matrix, variance_target: f64) -> Result<PcaModel> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(invalid!("variance target must be in (0, 1], got {variance_target}"));
    }
    if x.rows() < 2 || x.cols() < 1 {
        return Err(invalid!(
            "PCA needs at least 2 rows and 1 column, got {}x{}",
            x.rows(),
            x.cols()
        ));
    }
    let mean = x.column_means();
    let eig = symmetric_eigen(&x.covariance(&mean))?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();

    let (m, cumulative_explained) = if total <= 0.0 {
        (1, 1.0)
    } else {
        let mut acc = 0.0;
        let mut pick = (eigenvalues.len(), 1.0);
        for (i, v) in eigenvalues.iter().enumerate() {
            acc += v;
            // 1e-12 absorbs rounding when the target is hit exactly
            if acc / total >= variance_target - 1e-12 {
                pick = (i + 1, (acc / total).min(1.0));
                break;
            }
        }
        pick
    };
    let components = eig.vectors.select_rows(&(0..m).collect::<Vec<_>>())?;
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        m,
        cumulative_explained,
    })
}

/// `(x − mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, x: &Matrix) -> Result<Matrix> {
    if x.cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.cols(),
        });
    }
    let mut centered = x.clone();
    for i in 0..centered.rows() {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&model.mean) {
            *v -= m;
        }
    }
    centered.matmul_transposed(&model.components)
}

/// `y · components + mean`; exact inverse of [`pca_transform`] when `m = d`.
pub fn pca_inverse_transform(model: &PcaModel, y: &Matrix) -> Result<Matrix> {
    if y.cols() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.m,
            actual: y.cols(),
        });
    }
    let mut out = y.matmul(&model.components)?;
    for i in 0..out.rows() {
        for (v, m) in out.row_mut(i).iter_mut().zip(&model.mean) {
            *v += m;
        }
    }
    Ok(out)
}
