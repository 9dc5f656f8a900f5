use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::rng;

use super::distinct;

/// Stratified train/test split with a seeded per-class shuffle.
///
/// Each class contributes `round(train_fraction · n_class)` rows to the
/// training side (at least one row stays on each side when the class has two
/// or more rows). Both index lists are returned in ascending order.
pub fn stratified_split<L: Copy + Ord>(
    labels: &[L],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid!("train fraction must be in (0, 1), got {train_fraction}"));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, class) in distinct(labels).into_iter().enumerate() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let mut rng = rng::stream(seed, c as u64);
        idx.shuffle(&mut rng);
        let n = idx.len();
        let mut n_train = (train_fraction * n as f64).round() as usize;
        if n >= 2 {
            n_train = n_train.clamp(1, n - 1);
        }
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
