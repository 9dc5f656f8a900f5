use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::Error;

use super::distinct;

/// Mean silhouette coefficient of `y` under `labels`, Euclidean distance.
/// Every class needs at least two rows.
pub fn silhouette<L: Copy + Ord>(y: &Matrix, labels: &[L]) -> Result<f64> {
    if labels.len() != y.rows() {
        return Err(Error::DimensionMismatch {
            expected: y.rows(),
            actual: labels.len(),
        });
    }
    let classes = distinct(labels);
    if classes.len() < 2 {
        return Err(invalid!("silhouette needs at least 2 classes, got {}", classes.len()));
    }
    let idx: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is in its own class list"))
        .collect();
    let mut sizes = vec![0usize; classes.len()];
    idx.iter().for_each(|&c| sizes[c] += 1);
    if let Some(c) = sizes.iter().position(|&s| s < 2) {
        return Err(invalid!("class #{c} has fewer than 2 members"));
    }

    let n = y.rows();
    let mut sums = vec![0.0; classes.len()];
    let mut total = 0.0;
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let yi = y.row(i);
        for j in 0..n {
            if i != j {
                let d2: f64 = yi.iter().zip(y.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                sums[idx[j]] += d2.sqrt();
            }
        }
        let own = idx[i];
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..classes.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        total += if m > 0.0 { (b - a) / m } else { 0.0 };
    }
    Ok(total / n as f64)
}
