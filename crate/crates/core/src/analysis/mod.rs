//! Classification and decomposition pipeline: informative-frequency scoring,
//! PCA, one-vs-rest linear SVM with cross-validated regularization, macro
//! metrics, FastICA, and cluster diagnostics.
//!
//! Routines are generic over the class label type (`L: Copy + Ord`), so they
//! work with [`ProgramId`](crate::ProgramId) as well as plain integers.

mod cluster;
mod ica;
mod metrics;
mod pca;
mod scoring;
mod split;
mod svm;

pub use cluster::silhouette;
pub use ica::{amari_index, ica_fit, IcaModel, IcaParams};
pub use metrics::{evaluate, report_from_predictions, ClassifierReport};
pub use pca::{pca_fit, pca_inverse_transform, pca_transform, PcaModel};
pub use scoring::{score_frequencies, select_top_k, FrequencyScores, DEFAULT_TOP_K};
pub use split::stratified_split;
pub use svm::{svm_train_cv, SvmModel, SvmParams};

use alloc::vec::Vec;

/// Distinct labels in ascending order.
pub(crate) fn distinct<L: Copy + Ord>(labels: &[L]) -> Vec<L> {
    let mut classes = labels.to_vec();
    classes.sort();
    classes.dedup();
    classes
}
