use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::Error;

use super::svm::SvmModel;

/// Macro-averaged classification metrics, all in percent.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifierReport {
    pub accuracy_pct: f64,
    pub precision_pct: f64,
    pub recall_pct: f64,
    pub specificity_pct: f64,
    pub f1_pct: f64,
    pub validation_accuracy_pct: f64,
    /// `confusion[true][predicted]`, in class order.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Builds the report from true and predicted labels over `classes`.
///
/// Per-class precision with no positive predictions is 0, and so is F1 when
/// precision and recall are both 0.
pub fn report_from_predictions<L: Copy + Ord>(
    classes: &[L],
    truth: &[L],
    predicted: &[L],
    validation_accuracy_pct: f64,
) -> Result<ClassifierReport> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(invalid!("cannot evaluate an empty set"));
    }
    let k = classes.len();
    let index = |l: &L| {
        classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| invalid!("label not among the model classes"))
    };
    let mut confusion = vec![vec![0usize; k]; k];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[index(t)?][index(p)?] += 1;
    }

    let n = truth.len();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let (mut precision, mut recall, mut specificity, mut f1) = (0.0, 0.0, 0.0, 0.0);
    for (c, row) in confusion.iter().enumerate() {
        let tp = row[c];
        let fn_ = row.iter().sum::<usize>() - tp;
        let fp = (0..k).map(|r| confusion[r][c]).sum::<usize>() - tp;
        let tn = n - tp - fn_ - fp;
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        precision += p;
        recall += r;
        specificity += ratio(tn, tn + fp);
        f1 += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let macro_pct = |v: f64| 100.0 * v / k as f64;
    Ok(ClassifierReport {
        accuracy_pct: 100.0 * ratio(correct, n),
        precision_pct: macro_pct(precision),
        recall_pct: macro_pct(recall),
        specificity_pct: macro_pct(specificity),
        f1_pct: macro_pct(f1),
        validation_accuracy_pct,
        confusion,
    })
}

/// Predicts `x` with `model` and scores the predictions against `labels`.
pub fn evaluate<L: Copy + Ord>(model: &SvmModel<L>, x: &Matrix, labels: &[L]) -> Result<ClassifierReport> {
    if labels.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    let predicted = model.predict(x)?;
    report_from_predictions(&model.classes, labels, &predicted, model.validation_accuracy_pct)
}
