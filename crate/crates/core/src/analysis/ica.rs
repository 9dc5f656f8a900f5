use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::{rng, Error};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IcaParams {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for IcaParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            seed: 0,
        }
    }
}

/// Fitted FastICA decomposition. Sources are
/// `unmixing · whitening · (x − mean)` for a sample row `x`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IcaModel {
    pub mean: Vec<f64>,
    /// `n_components × d`; whitened training data has identity covariance.
    pub whitening: Matrix,
    /// Orthogonal `n_components × n_components` rotation.
    pub unmixing: Matrix,
    pub n_components: usize,
    pub converged: bool,
    pub iterations_used: usize,
}

impl IcaModel {
    /// `unmixing · whitening`, `n_components × d`.
    pub fn separating_matrix(&self) -> Matrix {
        self.unmixing
            .matmul(&self.whitening)
            .expect("unmixing and whitening dimensions agree")
    }

    fn centered(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.cols(),
            });
        }
        let mut c = x.clone();
        for i in 0..c.rows() {
            c.row_mut(i).iter_mut().zip(&self.mean).for_each(|(v, m)| *v -= m);
        }
        Ok(c)
    }

    /// Whitened rows, `n × n_components`.
    pub fn whiten(&self, x: &Matrix) -> Result<Matrix> {
        self.centered(x)?.matmul_transposed(&self.whitening)
    }

    /// Estimated sources, `n × n_components`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.centered(x)?.matmul_transposed(&self.separating_matrix())
    }
}

/// `W ← (W Wᵀ)^(−1/2) W`.
fn symmetric_decorrelation(w: &Matrix) -> Result<Matrix> {
    let eig = symmetric_eigen(&w.matmul_transposed(w)?)?;
    let n = w.rows();
    let mut inv_sqrt = Matrix::zeros(n, n);
    for (r, &lambda) in eig.values.iter().enumerate() {
        if lambda <= 0.0 {
            return Err(invalid!("ICA rotation became singular"));
        }
        let s = 1.0 / lambda.sqrt();
        let v = eig.vectors.row(r);
        for i in 0..n {
            for j in 0..n {
                inv_sqrt[(i, j)] += s * v[i] * v[j];
            }
        }
    }
    inv_sqrt.matmul(w)
}

/// FastICA with the logcosh contrast (`g = tanh`) and symmetric
/// decorrelation, started from a seeded random orthogonal matrix.
///
/// When `max_iter` runs out the partial result is returned with
/// `converged = false`.
pub fn ica_fit(x: &Matrix, n_components: usize, params: &IcaParams) -> Result<IcaModel> {
    let (n, d) = (x.rows(), x.cols());
    if n_components == 0 || n_components > n.min(d) {
        return Err(invalid!("n_components must be in 1..={}, got {n_components}", n.min(d)));
    }
    if !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(invalid!("ICA needs a positive tolerance and at least one iteration"));
    }

    let mean = x.column_means();
    let eig = symmetric_eigen(&x.covariance(&mean))?;
    let top = eig.values[0].max(0.0);
    let mut whitening = Matrix::zeros(n_components, d);
    for r in 0..n_components {
        let lambda = eig.values[r];
        if !(lambda > 1e-12 * top) {
            return Err(invalid!("data has rank below {n_components}; cannot whiten"));
        }
        let s = 1.0 / lambda.sqrt();
        whitening
            .row_mut(r)
            .iter_mut()
            .zip(eig.vectors.row(r))
            .for_each(|(w, v)| *w = s * v);
    }

    let mut centered = x.clone();
    for i in 0..n {
        centered.row_mut(i).iter_mut().zip(&mean).for_each(|(v, m)| *v -= m);
    }
    let z = centered.matmul_transposed(&whitening)?;

    let mut rng = rng::stream(params.seed, 0);
    let init: Vec<f64> = (0..n_components * n_components)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut w = symmetric_decorrelation(&Matrix::new(n_components, n_components, init)?)?;

    let mut converged = false;
    let mut iterations_used = 0;
    let inv_n = 1.0 / n as f64;
    for _ in 0..params.max_iter {
        iterations_used += 1;
        let mut next = Matrix::zeros(n_components, n_components);
        for c in 0..n_components {
            let wc = w.row(c).to_vec();
            let mut mean_dg = 0.0;
            let row = next.row_mut(c);
            for zs in z.iter_rows() {
                let g = dot(&wc, zs).tanh();
                mean_dg += 1.0 - g * g;
                row.iter_mut().zip(zs).for_each(|(r, &zj)| *r += g * zj);
            }
            mean_dg *= inv_n;
            row.iter_mut()
                .zip(&wc)
                .for_each(|(r, &wj)| *r = *r * inv_n - mean_dg * wj);
        }
        let next = symmetric_decorrelation(&next)?;
        let change = (0..n_components)
            .map(|c| (dot(next.row(c), w.row(c)).abs() - 1.0).abs())
            .fold(0.0f64, f64::max);
        w = next;
        if change < params.tol {
            converged = true;
            break;
        }
    }

    Ok(IcaModel {
        mean,
        whitening,
        unmixing: w,
        n_components,
        converged,
        iterations_used,
    })
}

/// Amari distance of a square matrix from the nearest scaled permutation,
/// normalized to `[0, 1]`:
/// `1/(2n(n−1)) · [Σ_i (Σ_j |p_ij| / max_j |p_ij| − 1) + Σ_j (Σ_i |p_ij| / max_i |p_ij| − 1)]`.
pub fn amari_index(p: &Matrix) -> Result<f64> {
    let n = p.rows();
    if p.cols() != n || n < 2 {
        return Err(invalid!(
            "Amari index needs a square matrix of size >= 2, got {}x{}",
            n,
            p.cols()
        ));
    }
    let abs: Vec<f64> = p.as_slice().iter().map(|v| v.abs()).collect();
    let a = Matrix::new(n, n, abs)?;
    let mut total = 0.0;
    for i in 0..n {
        let row = a.row(i);
        let max = row.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(invalid!("row {i} is all zeros"));
        }
        total += row.iter().sum::<f64>() / max - 1.0;
    }
    for j in 0..n {
        let col = a.column(j);
        let max = col.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(invalid!("column {j} is all zeros"));
        }
        total += col.iter().sum::<f64>() / max - 1.0;
    }
    Ok(total / (2.0 * n as f64 * (n as f64 - 1.0)))
}
