//! Trace-set preprocessing ahead of the analysis stage.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use num_complex::{Complex32, Complex64};

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::physics::ProgramId;
use crate::synth::TraceSet;
use crate::Error;

const STD_FLOOR: f64 = 1e-12;

/// Per-frequency complex mean of the traces labeled `label`.
pub fn class_mean(ts: &TraceSet, label: ProgramId) -> Result<Vec<Complex64>> {
    let mut mean = alloc::vec![Complex64::new(0.0, 0.0); ts.n_points()];
    let mut count = 0usize;
    for (r, _) in ts.labels().iter().enumerate().filter(|(_, &l)| l == label) {
        for (m, z) in mean.iter_mut().zip(ts.row(r)) {
            *m += Complex64::new(z.re as f64, z.im as f64);
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::MissingClass(alloc::format!("{label}")));
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    Ok(mean)
}

/// Subtracts a per-frequency baseline from every trace.
pub fn subtract_baseline(ts: &TraceSet, baseline: &[Complex64]) -> Result<TraceSet> {
    if baseline.len() != ts.n_points() {
        return Err(Error::DimensionMismatch {
            expected: ts.n_points(),
            actual: baseline.len(),
        });
    }
    let samples = ts
        .samples()
        .chunks_exact(ts.n_points())
        .flat_map(|row| {
            row.iter().zip(baseline).map(|(z, b)| {
                let d = Complex64::new(z.re as f64, z.im as f64) - b;
                Complex32::new(d.re as f32, d.im as f32)
            })
        })
        .collect();
    ts.with_samples(samples)
}

/// Removes the mean trace of the reference class (normally the idle program)
/// from every trace.
pub fn remove_baseline(ts: &TraceSet, reference: ProgramId) -> Result<TraceSet> {
    let baseline = class_mean(ts, reference)?;
    subtract_baseline(ts, &baseline)
}

/// Keeps the grid columns with `f_lo ≤ f ≤ f_hi`.
pub fn band_select(ts: &TraceSet, f_lo: f64, f_hi: f64) -> Result<TraceSet> {
    if !(f_lo <= f_hi) {
        return Err(invalid!("band bounds must satisfy f_lo <= f_hi, got [{f_lo}, {f_hi}]"));
    }
    // tolerate rounding in the grid arithmetic
    const SLACK: f64 = 1e-9;
    let step = ts.f_step_hz();
    let lo = ((f_lo - ts.f_start_hz()) / step - SLACK).ceil().max(0.0);
    let hi = ((f_hi - ts.f_start_hz()) / step + SLACK)
        .floor()
        .min(ts.n_points() as f64 - 1.0);
    if hi < lo {
        return Err(invalid!("band [{f_lo}, {f_hi}] selects no grid points"));
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let n = hi - lo + 1;
    let samples = ts
        .samples()
        .chunks_exact(ts.n_points())
        .flat_map(|row| row[lo..=hi].iter().copied())
        .collect();
    ts.with_grid(ts.frequency(lo), n, samples)
}

/// Element-wise magnitude, `n_traces × n_points`.
pub fn to_magnitude(ts: &TraceSet) -> Matrix {
    let data = ts.samples().iter().map(|z| z.norm() as f64).collect();
    Matrix::new(ts.n_traces(), ts.n_points(), data).expect("trace set shape is consistent")
}

/// Per-column standardization parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviations, floored at 1e−12.
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() < 2 {
            return Err(invalid!("standardization needs at least 2 rows, got {}", x.rows()));
        }
        let mean = x.column_means();
        let mut var = alloc::vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for ((v, &xi), &m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (xi - m) * (xi - m);
            }
        }
        let n = x.rows() as f64;
        let std = var.into_iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, &m), &s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix> {
        self.check(z)?;
        let mut out = z.clone();
        for i in 0..out.rows() {
            for ((v, &m), &s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.cols(),
            });
        }
        Ok(())
    }
}

/// Zero-mean, unit-variance columns; constant columns become zeros.
pub fn standardize(x: &Matrix) -> Result<(Matrix, Scaler)> {
    let scaler = Scaler::fit(x)?;
    Ok((scaler.transform(x)?, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::Modality;
    use alloc::vec;

    fn ts_from(rows: &[&[f32]], labels: &[ProgramId], f_start: f64, step: f64) -> TraceSet {
        let n = rows[0].len();
        let samples = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| Complex32::new(v, 0.0)))
            .collect();
        TraceSet::new(
            f_start,
            step,
            n,
            Modality::Backscatter,
            "Cu",
            samples,
            labels.to_vec(),
            1,
        )
        .unwrap()
    }

    use ProgramId::*;

    #[test]
    fn baseline_of_reference_row_is_zero() {
        let ts = ts_from(&[&[1.0, 2.0], &[4.0, 6.0]], &[Prog1, Prog2], 1.0, 1.0);
        let out = remove_baseline(&ts, Prog1).unwrap();
        assert_eq!(out.row(0), &[Complex32::new(0.0, 0.0); 2]);
        assert_eq!(out.row(1), &[Complex32::new(3.0, 0.0), Complex32::new(4.0, 0.0)]);
        assert!(matches!(remove_baseline(&ts, Prog3), Err(Error::MissingClass(_))));
    }

    #[test]
    fn baseline_is_offset_invariant_and_idempotent() {
        let ts = ts_from(
            &[&[1.0, 2.0], &[3.0, 2.0], &[5.0, 9.0]],
            &[Prog1, Prog1, Prog3],
            1.0,
            1.0,
        );
        let shifted = ts_from(
            &[&[8.0, 9.0], &[10.0, 9.0], &[12.0, 16.0]],
            &[Prog1, Prog1, Prog3],
            1.0,
            1.0,
        );
        let a = remove_baseline(&ts, Prog1).unwrap();
        assert_eq!(a, remove_baseline(&shifted, Prog1).unwrap());
        let twice = remove_baseline(&a, Prog1).unwrap();
        assert_eq!(twice, a);
        assert!(class_mean(&twice, Prog1).unwrap().iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn band_select_bounds() {
        let ts = ts_from(&[&[0.0, 1.0, 2.0, 3.0]], &[Prog1], 10.0, 5.0);
        assert_eq!(band_select(&ts, 10.0, 25.0).unwrap(), ts);
        let one = band_select(&ts, 14.0, 16.0).unwrap();
        assert_eq!(one.n_points(), 1);
        assert_eq!(one.f_start_hz(), 15.0);
        assert_eq!(one.row(0), &[Complex32::new(1.0, 0.0)]);
        assert!(band_select(&ts, 11.0, 14.0).is_err());
        assert!(band_select(&ts, 100.0, 200.0).is_err());
    }

    #[test]
    fn band_select_on_default_grid() {
        let n = 4096;
        let samples = vec![Complex32::new(1.0, 0.0); n];
        let ts = TraceSet::new(
            5e9,
            1e9 / n as f64,
            n,
            Modality::Backscatter,
            "",
            samples,
            vec![Prog1],
            0,
        )
        .unwrap();
        let sel = band_select(&ts, 5.25e9, 5.50e9).unwrap();
        assert_eq!(sel.n_points(), 1025);
        assert_eq!(sel.f_start_hz(), 5.25e9);
        let narrow = band_select(&sel, 5.3e9, 5.4e9).unwrap();
        assert_eq!(band_select(&narrow, 5.0e9, 6.0e9).unwrap(), narrow);
    }

    #[test]
    fn magnitude_examples() {
        let samples = vec![Complex32::new(3.0, 4.0), Complex32::new(0.0, 0.0)];
        let ts = TraceSet::new(1.0, 1.0, 2, Modality::Em, "", samples, vec![Prog1], 0).unwrap();
        assert_eq!(to_magnitude(&ts).as_slice(), &[5.0, 0.0]);
    }

    #[test]
    fn standardize_examples() {
        let x = Matrix::from_rows(&[[1.0, 7.0], [3.0, 7.0]]).unwrap();
        let (z, s) = standardize(&x).unwrap();
        assert_eq!(z.column(0), vec![-1.0, 1.0]);
        assert_eq!(z.column(1), vec![0.0, 0.0]);
        assert_eq!(s.std[1], STD_FLOOR);
        let back = s.inverse_transform(&z).unwrap();
        assert_eq!(back, x);
        assert!(standardize(&Matrix::from_rows(&[[1.0]]).unwrap()).is_err());
        assert!(s.transform(&Matrix::zeros(2, 3)).is_err());
    }
}
