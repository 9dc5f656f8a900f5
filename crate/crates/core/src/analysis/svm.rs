use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::{self, derive_seed};
use crate::Error;

use super::distinct;

/// Training parameters for [`svm_train_cv`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmParams {
    pub folds: usize,
    pub c_grid: Vec<f64>,
    /// Passes over the training data per binary problem.
    pub epochs: usize,
    /// Root seed for fold assignment and per-epoch shuffling.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            folds: 5,
            c_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            epochs: 200,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVM.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmModel<L> {
    pub classes: Vec<L>,
    /// One hyperplane per class, in `classes` order.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub c_selected: f64,
    /// Mean k-fold accuracy (%) at `c_selected`.
    pub validation_accuracy_pct: f64,
}

impl<L: Copy + Ord> SvmModel<L> {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect()
    }

    /// Class with the largest decision value; ties go to the earlier class.
    pub fn predict_row(&self, x: &[f64]) -> L {
        self.classes[argmax(&self.decision_values(x))]
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<L>> {
        if x.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Hinge-loss subgradient descent (Pegasos schedule `η_t = 1/(λt)`,
/// `λ = 1/(C·n)`) for each class against the rest. The bias is learned as the
/// weight of a constant feature. Returns the iterate averaged over the final
/// epoch.
fn train_ovr(x: &Matrix, y: &[usize], n_classes: usize, c: f64, epochs: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x.rows();
    let d = x.cols();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut weights = Vec::with_capacity(n_classes);
    let mut biases = Vec::with_capacity(n_classes);
    let mut order: Vec<usize> = (0..n).collect();

    for class in 0..n_classes {
        let mut rng = rng::stream(seed, class as u64);
        let mut w = vec![0.0; d + 1];
        let mut avg = vec![0.0; d + 1];
        let mut t = 0usize;
        for epoch in 0..epochs {
            order.shuffle(&mut rng);
            let last = epoch + 1 == epochs;
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let xi = x.row(i);
                let yi = if y[i] == class { 1.0 } else { -1.0 };
                let margin = yi * (dot(&w[..d], xi) + w[d]);
                let shrink = 1.0 - 1.0 / t as f64;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (wj, &xj) in w.iter_mut().zip(xi) {
                        *wj += eta * yi * xj;
                    }
                    w[d] += eta * yi;
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|v| *v *= s);
                }
                if last {
                    avg.iter_mut().zip(&w).for_each(|(a, v)| *a += v);
                }
            }
        }
        avg.iter_mut().for_each(|a| *a /= n as f64);
        biases.push(avg[d]);
        avg.truncate(d);
        weights.push(avg);
    }
    (weights, biases)
}

fn accuracy(weights: &[Vec<f64>], biases: &[f64], x: &Matrix, y: &[usize], rows: &[usize]) -> f64 {
    let correct = rows
        .iter()
        .filter(|&&r| {
            let xr = x.row(r);
            let scores: Vec<f64> = weights.iter().zip(biases).map(|(w, b)| dot(w, xr) + b).collect();
            argmax(&scores) == y[r]
        })
        .count();
    correct as f64 / rows.len() as f64
}

/// Trains a one-vs-rest linear SVM, choosing `C` from `params.c_grid` by mean
/// stratified k-fold accuracy (ties to the smaller `C`), then refits on all
/// rows.
pub fn svm_train_cv<L: Copy + Ord>(x: &Matrix, labels: &[L], params: &SvmParams) -> Result<SvmModel<L>> {
    if labels.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    if params.folds < 2 {
        return Err(invalid!(
            "cross-validation needs at least 2 folds, got {}",
            params.folds
        ));
    }
    if params.c_grid.is_empty() || params.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(invalid!("C grid must be non-empty with positive finite values"));
    }
    if params.epochs == 0 {
        return Err(invalid!("epochs must be at least 1"));
    }
    let classes = distinct(labels);
    if classes.len() < 2 {
        return Err(invalid!("SVM training needs at least 2 classes, got {}", classes.len()));
    }
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is in its own class list"))
        .collect();

    let mut fold_of = vec![0usize; y.len()];
    for c in 0..classes.len() {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        if idx.len() < params.folds {
            return Err(invalid!(
                "class #{c} has {} samples, fewer than {} folds",
                idx.len(),
                params.folds
            ));
        }
        idx.shuffle(&mut rng::stream(derive_seed(params.seed, u64::MAX), c as u64));
        for (pos, i) in idx.into_iter().enumerate() {
            fold_of[i] = pos % params.folds;
        }
    }

    let folds: Vec<(Matrix, Vec<usize>, Vec<usize>)> = (0..params.folds)
        .map(|f| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != f).collect();
            let held: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == f).collect();
            let y_train = train.iter().map(|&i| y[i]).collect();
            Ok((x.select_rows(&train)?, y_train, held))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, f64)> = None;
    for &c in &params.c_grid {
        let mean_acc = folds
            .iter()
            .enumerate()
            .map(|(f, (x_train, y_train, held))| {
                let (w, b) = train_ovr(
                    x_train,
                    y_train,
                    classes.len(),
                    c,
                    params.epochs,
                    derive_seed(params.seed, f as u64),
                );
                accuracy(&w, &b, x, &y, held)
            })
            .sum::<f64>()
            / params.folds as f64;
        best = match best {
            Some((bc, ba)) if ba > mean_acc || (ba == mean_acc && bc <= c) => Some((bc, ba)),
            _ => Some((c, mean_acc)),
        };
    }
    let (c_selected, mean_acc) = best.expect("C grid is non-empty");
    let (weights, biases) = train_ovr(
        x,
        &y,
        classes.len(),
        c_selected,
        params.epochs,
        derive_seed(params.seed, params.folds as u64),
    );
    Ok(SvmModel {
        classes,
        weights,
        biases,
        c_selected,
        validation_accuracy_pct: 100.0 * mean_acc,
    })
}
