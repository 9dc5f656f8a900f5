use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::Error;

use super::distinct;

/// Number of informative frequencies kept by default.
pub const DEFAULT_TOP_K: usize = 64;

const DEGENERATE_WITHIN_VAR: f64 = 1e-18;
const MAX_SCORE: f64 = 1e12;

/// Per-column informativeness and the column ranking.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrequencyScores {
    pub scores: Vec<f64>,
    /// All column indices by descending score, lower index first on ties.
    pub selected: Vec<usize>,
}

/// One-way ANOVA F statistic per column,
/// `F = [SSB/(k−1)] / [SSW/(N−k)]`.
///
/// A column whose within-class variance vanishes scores 1e12 when the class
/// means differ and 0 otherwise.
pub fn score_frequencies<L: Copy + Ord>(x: &Matrix, labels: &[L]) -> Result<FrequencyScores> {
    if labels.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    let classes = distinct(labels);
    let k = classes.len();
    if k < 2 {
        return Err(invalid!("frequency scoring needs at least 2 classes, got {k}"));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is in its own class list"))
        .collect();
    let mut counts = alloc::vec![0usize; k];
    class_of.iter().for_each(|&c| counts[c] += 1);
    if let Some(c) = counts.iter().position(|&n| n < 2) {
        return Err(invalid!("class #{c} has {} rows, at least 2 are required", counts[c]));
    }

    let d = x.cols();
    let n = x.rows() as f64;
    let mut sums = Matrix::zeros(k, d);
    for (r, &c) in x.iter_rows().zip(&class_of) {
        for (s, &v) in sums.row_mut(c).iter_mut().zip(r) {
            *s += v;
        }
    }
    let mut means = sums.clone();
    for (c, &nc) in counts.iter().enumerate() {
        means.row_mut(c).iter_mut().for_each(|m| *m /= nc as f64);
    }
    let grand: Vec<f64> = (0..d).map(|j| (0..k).map(|c| sums[(c, j)]).sum::<f64>() / n).collect();

    let mut ssw = alloc::vec![0.0; d];
    for (r, &c) in x.iter_rows().zip(&class_of) {
        for ((s, &v), &m) in ssw.iter_mut().zip(r).zip(means.row(c)) {
            *s += (v - m) * (v - m);
        }
    }

    let df_between = (k - 1) as f64;
    let df_within = n - k as f64;
    let scores: Vec<f64> = (0..d)
        .map(|j| {
            let ssb: f64 = (0..k)
                .map(|c| counts[c] as f64 * (means[(c, j)] - grand[j]).powi(2))
                .sum();
            let within = ssw[j] / df_within;
            let between = ssb / df_between;
            if within < DEGENERATE_WITHIN_VAR {
                // compare means directly; tiny SSB is rounding noise
                let spread = (0..k)
                    .map(|c| means[(c, j)])
                    .fold(0.0f64, |m, v| m.max((v - means[(0, j)]).abs()));
                if spread > 0.0 {
                    MAX_SCORE
                } else {
                    0.0
                }
            } else {
                (between / within).clamp(0.0, MAX_SCORE)
            }
        })
        .collect();

    let mut selected: Vec<usize> = (0..d).collect();
    selected.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(FrequencyScores { scores, selected })
}

/// The `k` highest-scoring column indices (ties to the lower index).
pub fn select_top_k(fs: &FrequencyScores, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > fs.scores.len() {
        return Err(invalid!("k must be in 1..={}, got {k}", fs.scores.len()));
    }
    Ok(fs.selected[..k].to_vec())
}
