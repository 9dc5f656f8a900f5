//! Labeled trace-set synthesis for the passive EM and active backscatter
//! modalities.
//!
//! Every row is generated from its own ChaCha stream keyed by
//! `(seed, row index)`, so rows can be produced in any order on any number of
//! threads with bit-identical results.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::fmt;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use num_complex::{Complex32, Complex64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{invalid, Result};
use crate::physics::{
    probe_voltage_em, randomize_impedance, shield_attenuation, validate_programs, ComplexValue, CurrentSourceSet,
    DeviceImpedanceModel, ProbeModel, ProgramId, ProgramProfile, ShieldProfile,
};
use crate::{rng, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Modality {
    /// Passive near-field EM emission.
    Em,
    /// Active RF backscatter.
    Backscatter,
}

impl Modality {
    pub fn code(self) -> u8 {
        match self {
            Modality::Em => 0,
            Modality::Backscatter => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Modality::Em),
            1 => Ok(Modality::Backscatter),
            other => Err(invalid!("unknown modality code {other}")),
        }
    }

    /// Short name used on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            Modality::Em => "em",
            Modality::Backscatter => "bs",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Em => "EM",
            Modality::Backscatter => "Backscattering",
        })
    }
}

impl core::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(Modality::Em),
            "bs" | "backscatter" | "backscattering" => Ok(Modality::Backscatter),
            other => Err(invalid!("unknown modality '{other}'")),
        }
    }
}

/// Acquisition protocol. Each sweep point of a trace is the mean of `n_avg`
/// acquisitions, each carrying complex white Gaussian noise whose real and
/// imaginary parts have standard deviation `noise_sigma`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AcquisitionConfig {
    pub n_traces_per_class: usize,
    pub n_points: usize,
    pub n_avg: usize,
    /// Backscatter sweep start.
    pub f_start_hz: f64,
    /// Backscatter sweep stop (exclusive).
    pub f_stop_hz: f64,
    /// EM spectrum start.
    pub em_f_start_hz: f64,
    /// EM spectrum stop (exclusive).
    pub em_f_stop_hz: f64,
    pub noise_sigma: f64,
    /// Amplitude of the injected probing tone.
    pub v_in_volts: f64,
    pub seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            n_traces_per_class: 500,
            n_points: 4096,
            n_avg: 100,
            f_start_hz: 5.0e9,
            f_stop_hz: 6.0e9,
            em_f_start_hz: 50.0e6,
            em_f_stop_hz: 4.0e9,
            noise_sigma: 1.0e-5,
            v_in_volts: 1.0,
            seed: 0x5EED,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traces_per_class == 0 || self.n_avg == 0 {
            return Err(invalid!("trace and averaging counts must be at least 1"));
        }
        if self.n_points < 2 {
            return Err(invalid!("a sweep needs at least 2 points, got {}", self.n_points));
        }
        if !(self.f_start_hz > 0.0 && self.f_start_hz < self.f_stop_hz && self.f_stop_hz.is_finite()) {
            return Err(invalid!("backscatter sweep needs 0 < f_start < f_stop"));
        }
        if !(self.em_f_start_hz > 0.0 && self.em_f_start_hz < self.em_f_stop_hz && self.em_f_stop_hz.is_finite()) {
            return Err(invalid!("EM sweep needs 0 < em_f_start < em_f_stop"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid!("noise sigma must be non-negative"));
        }
        if !self.v_in_volts.is_finite() {
            return Err(invalid!("probe amplitude must be finite"));
        }
        Ok(())
    }

    /// `(f_start, f_step)` of the uniform grid for `modality`; the grid is
    /// `f_start + i·f_step` for `i < n_points`, stop excluded.
    pub fn grid(&self, modality: Modality) -> (f64, f64) {
        let (start, stop) = match modality {
            Modality::Em => (self.em_f_start_hz, self.em_f_stop_hz),
            Modality::Backscatter => (self.f_start_hz, self.f_stop_hz),
        };
        (start, (stop - start) / self.n_points as f64)
    }
}

/// Labeled matrix of complex traces over a uniform frequency grid.
///
/// Samples are stored at single precision, the precision of the on-disk
/// container.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    f_start_hz: f64,
    f_step_hz: f64,
    n_points: usize,
    modality: Modality,
    shield_name: String,
    traces: Vec<Complex32>,
    labels: Vec<ProgramId>,
    seed: u64,
}

impl TraceSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        f_start_hz: f64,
        f_step_hz: f64,
        n_points: usize,
        modality: Modality,
        shield_name: impl Into<String>,
        traces: Vec<Complex32>,
        labels: Vec<ProgramId>,
        seed: u64,
    ) -> Result<Self> {
        if n_points == 0 {
            return Err(invalid!("trace set needs at least one point"));
        }
        if !(f_step_hz > 0.0 && f_step_hz.is_finite() && f_start_hz.is_finite()) {
            return Err(invalid!(
                "grid needs finite start and positive step, got step {f_step_hz}"
            ));
        }
        if traces.len() != labels.len() * n_points {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_points,
                actual: traces.len(),
            });
        }
        if let Some(i) = traces.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid!(
                "non-finite sample at row {} column {}",
                i / n_points,
                i % n_points
            ));
        }
        Ok(Self {
            f_start_hz,
            f_step_hz,
            n_points,
            modality,
            shield_name: shield_name.into(),
            traces,
            labels,
            seed,
        })
    }

    pub fn f_start_hz(&self) -> f64 {
        self.f_start_hz
    }

    pub fn f_step_hz(&self) -> f64 {
        self.f_step_hz
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_traces(&self) -> usize {
        self.labels.len()
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn shield_name(&self) -> &str {
        &self.shield_name
    }

    pub fn labels(&self) -> &[ProgramId] {
        &self.labels
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row-major samples, `n_traces × n_points`.
    pub fn samples(&self) -> &[Complex32] {
        &self.traces
    }

    pub fn row(&self, i: usize) -> &[Complex32] {
        &self.traces[i * self.n_points..(i + 1) * self.n_points]
    }

    pub fn frequency(&self, j: usize) -> f64 {
        self.f_start_hz + j as f64 * self.f_step_hz
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.frequency(j)).collect()
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, traces: Vec<Complex32>) -> Result<Self> {
        Self::new(
            self.f_start_hz,
            self.f_step_hz,
            self.n_points,
            self.modality,
            self.shield_name.clone(),
            traces,
            self.labels.clone(),
            self.seed,
        )
    }

    /// Same grid, new samples and labels.
    pub(crate) fn with_grid(&self, f_start_hz: f64, n_points: usize, traces: Vec<Complex32>) -> Result<Self> {
        Self::new(
            f_start_hz,
            self.f_step_hz,
            n_points,
            self.modality,
            self.shield_name.clone(),
            traces,
            self.labels.clone(),
            self.seed,
        )
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut traces = Vec::with_capacity(rows.len() * self.n_points);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.n_traces() {
                return Err(invalid!("row {r} out of range for {} traces", self.n_traces()));
            }
            traces.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Self::new(
            self.f_start_hz,
            self.f_step_hz,
            self.n_points,
            self.modality,
            self.shield_name.clone(),
            traces,
            labels,
            self.seed,
        )
    }
}

/// Element-wise mean of equally long acquisitions.
pub fn average_acquisitions<R: AsRef<[ComplexValue]>>(acquisitions: &[R]) -> Result<Vec<ComplexValue>> {
    let first = acquisitions
        .first()
        .ok_or_else(|| invalid!("no acquisitions to average"))?
        .as_ref();
    let mut acc = vec![Complex64::new(0.0, 0.0); first.len()];
    for a in acquisitions {
        let a = a.as_ref();
        if a.len() != acc.len() {
            return Err(Error::DimensionMismatch {
                expected: acc.len(),
                actual: a.len(),
            });
        }
        for (s, v) in acc.iter_mut().zip(a) {
            *s += v;
        }
    }
    let n = acquisitions.len() as f64;
    acc.iter_mut().for_each(|s| *s /= n);
    Ok(acc)
}

/// Row-addressable generator behind [`synth_trace_set`].
///
/// Rows are grouped by program in the order given: rows
/// `k·n_traces_per_class .. (k+1)·n_traces_per_class` belong to `programs[k]`.
#[derive(Debug, Clone)]
pub struct TraceSynthesizer {
    cfg: AcquisitionConfig,
    modality: Modality,
    shield_name: String,
    device: DeviceImpedanceModel,
    programs: Vec<ProgramProfile>,
    f_start: f64,
    f_step: f64,
    attenuation: Vec<f64>,
    /// EM phasors per program (EM responses carry no per-trace randomness
    /// besides acquisition noise).
    em_clean: Vec<Vec<Complex64>>,
    countermeasure_strength: f64,
}

impl TraceSynthesizer {
    pub fn new(
        cfg: &AcquisitionConfig,
        modality: Modality,
        shield: &ShieldProfile,
        device: &DeviceImpedanceModel,
        sources: &CurrentSourceSet,
        probe: &ProbeModel,
        programs: &[ProgramProfile],
    ) -> Result<Self> {
        cfg.validate()?;
        shield.validate()?;
        device.validate()?;
        probe.validate()?;
        sources.validate(probe)?;
        validate_programs(programs)?;

        let (f_start, f_step) = cfg.grid(modality);
        let freqs: Vec<f64> = (0..cfg.n_points).map(|i| f_start + i as f64 * f_step).collect();
        let attenuation = freqs
            .iter()
            .map(|&f| shield_attenuation(shield, f))
            .collect::<Result<Vec<_>>>()?;
        let em_clean = match modality {
            Modality::Em => {
                let snapped = sources.snapped_to_grid(f_start, f_step, cfg.n_points);
                programs
                    .iter()
                    .map(|p| {
                        freqs
                            .iter()
                            .map(|&f| probe_voltage_em(&snapped, probe, shield, p, f))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Modality::Backscatter => Vec::new(),
        };
        Ok(Self {
            cfg: cfg.clone(),
            modality,
            shield_name: shield.name.clone(),
            device: device.clone(),
            programs: programs.to_vec(),
            f_start,
            f_step,
            attenuation,
            em_clean,
            countermeasure_strength: 0.0,
        })
    }

    /// Applies [`randomize_impedance`] to every backscatter trace with a fresh
    /// uniform draw. Strength 0 leaves the output bit-identical.
    pub fn with_countermeasure(mut self, strength: f64) -> Result<Self> {
        randomize_impedance(&self.device, strength, 0.0)?;
        self.countermeasure_strength = strength;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.programs.len() * self.cfg.n_traces_per_class
    }

    pub fn n_points(&self) -> usize {
        self.cfg.n_points
    }

    pub fn label(&self, row: usize) -> ProgramId {
        self.programs[row / self.cfg.n_traces_per_class].id
    }

    /// Fills `out` (length `n_points`) with trace `row`.
    pub fn row_into(&self, row: usize, out: &mut [Complex32]) -> Result<()> {
        if row >= self.n_rows() {
            return Err(invalid!("row {row} out of range for {} rows", self.n_rows()));
        }
        if out.len() != self.cfg.n_points {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.n_points,
                actual: out.len(),
            });
        }
        let program_idx = row / self.cfg.n_traces_per_class;
        let program = &self.programs[program_idx];
        let mut rng = rng::stream(self.cfg.seed, row as u64);
        // Both per-trace draws are taken unconditionally so the noise stream
        // does not depend on the modality or countermeasure setting.
        let jitter: f64 = StandardNormal.sample(&mut rng);
        let cm_draw: f64 = Uniform::new_inclusive(-1.0, 1.0)
            .map_err(|e| invalid!("{e}"))?
            .sample(&mut rng);
        // The mean of n_avg i.i.d. N(0, σ²) draws is exactly N(0, σ²/n_avg).
        let noise_std = self.cfg.noise_sigma / (self.cfg.n_avg as f64).sqrt();
        let v_in = Complex64::new(self.cfg.v_in_volts, 0.0);
        let device = randomize_impedance(&self.device, self.countermeasure_strength, cm_draw)?;

        for (i, o) in out.iter_mut().enumerate() {
            let clean = match self.modality {
                Modality::Backscatter => {
                    let f = self.f_start + i as f64 * self.f_step;
                    device.backscatter(self.attenuation[i], program.activity_at(i), f, v_in, jitter)?
                }
                Modality::Em => self.em_clean[program_idx][i],
            };
            let n_re: f64 = rng.sample(StandardNormal);
            let n_im: f64 = rng.sample(StandardNormal);
            let v = clean + Complex64::new(n_re, n_im) * noise_std;
            *o = Complex32::new(v.re as f32, v.im as f32);
        }
        Ok(())
    }

    pub fn row(&self, row: usize) -> Result<Vec<Complex32>> {
        let mut out = vec![Complex32::new(0.0, 0.0); self.cfg.n_points];
        self.row_into(row, &mut out)?;
        Ok(out)
    }

    /// Wraps `n_rows × n_points` samples produced by [`Self::row_into`].
    pub fn assemble(&self, samples: Vec<Complex32>) -> Result<TraceSet> {
        let labels = (0..self.n_rows()).map(|r| self.label(r)).collect();
        TraceSet::new(
            self.f_start,
            self.f_step,
            self.cfg.n_points,
            self.modality,
            self.shield_name.clone(),
            samples,
            labels,
            self.cfg.seed,
        )
    }

    /// Sequential generation of the whole set.
    pub fn generate(&self) -> Result<TraceSet> {
        let n = self.cfg.n_points;
        let mut samples = vec![Complex32::new(0.0, 0.0); self.n_rows() * n];
        for (r, chunk) in samples.chunks_exact_mut(n).enumerate() {
            self.row_into(r, chunk)?;
        }
        self.assemble(samples)
    }
}

/// Synthesizes `n_traces_per_class` traces for each program.
pub fn synth_trace_set(
    cfg: &AcquisitionConfig,
    modality: Modality,
    shield: &ShieldProfile,
    device: &DeviceImpedanceModel,
    sources: &CurrentSourceSet,
    probe: &ProbeModel,
    programs: &[ProgramProfile],
) -> Result<TraceSet> {
    TraceSynthesizer::new(cfg, modality, shield, device, sources, probe, programs)?.generate()
}
