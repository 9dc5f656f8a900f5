//! Physical models: reflection at the probe/device interface, state-dependent
//! device impedance, shield attenuation, near-field probe voltage from current
//! sources, and the impedance-randomization countermeasure.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{domain, invalid, Result};

/// Complex impedance (Ω), reflection coefficient, or phasor voltage (V).
pub type ComplexValue = Complex64;

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 4.0e-7 * PI;

const DEGENERATE_SUM_OHM: f64 = 1e-12;
const PASSIVITY_SLACK: f64 = 1e-9;

fn ensure_finite(z: ComplexValue, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(domain!("{what} is not finite: {z}"))
    }
}

fn ensure_positive_frequency(f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(domain!("frequency must be positive and finite, got {f}"))
    }
}

/// Γ = (Z_dut − Z_p) / (Z_dut + Z_p).
pub fn reflection_coefficient(z_dut: ComplexValue, z_probe: ComplexValue) -> Result<ComplexValue> {
    ensure_finite(z_dut, "device impedance")?;
    ensure_finite(z_probe, "probe impedance")?;
    let sum = z_dut + z_probe;
    if sum.norm() < DEGENERATE_SUM_OHM {
        return Err(domain!("degenerate impedance sum {sum}"));
    }
    let gamma = (z_dut - z_probe) / sum;
    ensure_finite(gamma, "reflection coefficient")?;
    Ok(gamma)
}

/// Power leakage model `L ≈ |Γ|²` for a passive reflection coefficient.
pub fn leakage_model(gamma: ComplexValue) -> Result<f64> {
    ensure_finite(gamma, "reflection coefficient")?;
    let mag = gamma.norm();
    if mag > 1.0 + PASSIVITY_SLACK {
        return Err(domain!("|Γ| = {mag} exceeds 1, input is not passive"));
    }
    Ok(gamma.norm_sqr().min(1.0))
}

/// Frequency-dependent shielding effectiveness with a protection band.
///
/// Inside `[band_lo_hz, band_hi_hz]` the shield attenuates `se_in_band_db`.
/// Above the band the attenuation falls linearly in log-frequency at
/// `rolloff_db_per_decade` until it reaches the floor `se_high_cap_db`;
/// below the band it falls at the same rate down to 0 dB.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShieldProfile {
    pub name: String,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub se_in_band_db: f64,
    pub se_high_cap_db: f64,
    pub rolloff_db_per_decade: f64,
}

impl ShieldProfile {
    pub const DEFAULT_BAND_LO_HZ: f64 = 10.0e6;
    pub const DEFAULT_BAND_HI_HZ: f64 = 3.0e9;
    pub const DEFAULT_SE_IN_BAND_DB: f64 = 60.0;
    /// Steep enough that every default cap is reached by 3.5 GHz.
    pub const DEFAULT_ROLLOFF_DB_PER_DECADE: f64 = 600.0;

    pub fn new(
        name: impl Into<String>,
        band_lo_hz: f64,
        band_hi_hz: f64,
        se_in_band_db: f64,
        se_high_cap_db: f64,
        rolloff_db_per_decade: f64,
    ) -> Result<Self> {
        let shield = Self {
            name: name.into(),
            band_lo_hz,
            band_hi_hz,
            se_in_band_db,
            se_high_cap_db,
            rolloff_db_per_decade,
        };
        shield.validate()?;
        Ok(shield)
    }

    /// Default band and roll-off with the given above-band cap.
    pub fn with_cap(name: impl Into<String>, se_high_cap_db: f64) -> Self {
        Self {
            name: name.into(),
            band_lo_hz: Self::DEFAULT_BAND_LO_HZ,
            band_hi_hz: Self::DEFAULT_BAND_HI_HZ,
            se_in_band_db: Self::DEFAULT_SE_IN_BAND_DB,
            se_high_cap_db,
            rolloff_db_per_decade: Self::DEFAULT_ROLLOFF_DB_PER_DECADE,
        }
    }

    /// Copper shield, SE above 3 GHz capped at 33 dB.
    pub fn copper() -> Self {
        Self::with_cap("Copper", 33.0)
    }

    /// Al-CoTaZr shield, SE above 3 GHz capped at 24 dB.
    pub fn al_cotazr() -> Self {
        Self::with_cap("Al-CoTaZr", 24.0)
    }

    /// Cu-CoNiFe shield, SE above 3 GHz capped at 20 dB.
    pub fn cu_conife() -> Self {
        Self::with_cap("Cu-CoNiFe", 20.0)
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::copper(), Self::al_cotazr(), Self::cu_conife()]
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.band_lo_hz,
            self.band_hi_hz,
            self.se_in_band_db,
            self.se_high_cap_db,
            self.rolloff_db_per_decade,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid!("shield '{}' has non-finite parameters", self.name));
        }
        if !(self.band_lo_hz > 0.0 && self.band_lo_hz < self.band_hi_hz) {
            return Err(invalid!(
                "shield '{}' band must satisfy 0 < lo < hi, got [{}, {}]",
                self.name,
                self.band_lo_hz,
                self.band_hi_hz
            ));
        }
        if self.se_in_band_db < 0.0 || self.se_high_cap_db < 0.0 || self.rolloff_db_per_decade < 0.0 {
            return Err(invalid!("shield '{}' has a negative SE or roll-off", self.name));
        }
        if self.se_high_cap_db > self.se_in_band_db {
            return Err(invalid!(
                "shield '{}' cap {} dB exceeds in-band SE {} dB",
                self.name,
                self.se_high_cap_db,
                self.se_in_band_db
            ));
        }
        Ok(())
    }

    /// Shielding effectiveness in dB at `f`.
    pub fn se_db(&self, f: f64) -> Result<f64> {
        ensure_positive_frequency(f)?;
        let se = if f > self.band_hi_hz {
            let raw = self.se_in_band_db - self.rolloff_db_per_decade * (f / self.band_hi_hz).log10();
            raw.clamp(self.se_high_cap_db, self.se_in_band_db)
        } else if f < self.band_lo_hz {
            let raw = self.se_in_band_db - self.rolloff_db_per_decade * (self.band_lo_hz / f).log10();
            raw.clamp(0.0, self.se_in_band_db)
        } else {
            self.se_in_band_db
        };
        Ok(se)
    }
}

/// Field amplitude factor `10^(−SE(f)/20)`, in `(0, 1]`.
pub fn shield_attenuation(shield: &ShieldProfile, f: f64) -> Result<f64> {
    Ok(db_to_amplitude(shield.se_db(f)?))
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10.0.powf(-db / 20.0)
}

/// One of the three workload states of the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProgramId {
    /// Idle processor.
    Prog1,
    /// Periodic LED toggle.
    Prog2,
    /// Exponentiation and multiplication loop.
    Prog3,
}

impl ProgramId {
    pub const ALL: [ProgramId; 3] = [ProgramId::Prog1, ProgramId::Prog2, ProgramId::Prog3];

    /// Zero-based position, for per-state tables.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Wire code (1, 2, 3).
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(ProgramId::Prog1),
            2 => Some(ProgramId::Prog2),
            3 => Some(ProgramId::Prog3),
            _ => None,
        }
    }
}

impl fmt::Display for ProgramId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prog{}", self.code())
    }
}

/// Workload state and its switching activity `a(θ) ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProgramProfile {
    pub id: ProgramId,
    pub activity_level: f64,
    /// When set, activity alternates every this many sweep points between
    /// `activity_level` (even blocks) and half of it (odd blocks).
    pub modulation_period_points: Option<u32>,
}

impl ProgramProfile {
    pub fn new(id: ProgramId, activity_level: f64, modulation_period_points: Option<u32>) -> Result<Self> {
        if !(0.0..=1.0).contains(&activity_level) {
            return Err(invalid!("activity level must be in [0, 1], got {activity_level}"));
        }
        if modulation_period_points == Some(0) {
            return Err(invalid!("modulation period must be positive"));
        }
        Ok(Self {
            id,
            activity_level,
            modulation_period_points,
        })
    }

    pub fn defaults() -> Vec<Self> {
        vec![
            Self {
                id: ProgramId::Prog1,
                activity_level: 0.1,
                modulation_period_points: None,
            },
            Self {
                id: ProgramId::Prog2,
                activity_level: 0.5,
                modulation_period_points: Some(64),
            },
            Self {
                id: ProgramId::Prog3,
                activity_level: 0.9,
                modulation_period_points: None,
            },
        ]
    }

    /// Effective activity at sweep point `point`.
    pub fn activity_at(&self, point: usize) -> f64 {
        match self.modulation_period_points {
            Some(period) if (point / period as usize) % 2 == 1 => 0.5 * self.activity_level,
            _ => self.activity_level,
        }
    }
}

/// Checks a program list: non-empty, unique ids, activity levels in range and
/// strictly increasing in id order.
pub fn validate_programs(programs: &[ProgramProfile]) -> Result<()> {
    if programs.is_empty() {
        return Err(invalid!("at least one program profile is required"));
    }
    let mut sorted: Vec<&ProgramProfile> = programs.iter().collect();
    sorted.sort_by_key(|p| p.id);
    for p in &sorted {
        ProgramProfile::new(p.id, p.activity_level, p.modulation_period_points)?;
    }
    for w in sorted.windows(2) {
        if w[0].id == w[1].id {
            return Err(invalid!("duplicate program {}", w[0].id));
        }
        if w[0].activity_level >= w[1].activity_level {
            return Err(invalid!(
                "activity must increase with program id: {} ({}) >= {} ({})",
                w[0].id,
                w[0].activity_level,
                w[1].id,
                w[1].activity_level
            ));
        }
    }
    Ok(())
}

/// Series-RLC device impedance with an activity-dependent resistance shift.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DeviceImpedanceModel {
    pub z_probe_ohm: ComplexValue,
    pub r0_ohm: f64,
    pub l_henry: f64,
    pub c_farad: f64,
    pub delta_r_ohm: f64,
    pub jitter_sigma_ohm: f64,
    /// State-independent reflection off the shield surface.
    pub shield_static_reflection: ComplexValue,
}

impl Default for DeviceImpedanceModel {
    fn default() -> Self {
        Self {
            z_probe_ohm: Complex64::new(50.0, 0.0),
            r0_ohm: 45.0,
            l_henry: 3.0e-9,
            c_farad: 0.3e-12,
            delta_r_ohm: 10.0,
            jitter_sigma_ohm: 0.25,
            shield_static_reflection: Complex64::new(0.05, 0.02),
        }
    }
}

impl DeviceImpedanceModel {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.z_probe_ohm, "probe impedance")?;
        ensure_finite(self.shield_static_reflection, "static reflection")?;
        if !(self.r0_ohm > 0.0 && self.l_henry > 0.0 && self.c_farad > 0.0) {
            return Err(invalid!("r0, L and C must be positive"));
        }
        if !(self.delta_r_ohm >= 0.0 && self.jitter_sigma_ohm >= 0.0) {
            return Err(invalid!("delta_r and jitter sigma must be non-negative"));
        }
        if self.shield_static_reflection.norm() > 1.0 {
            return Err(invalid!("static shield reflection must have magnitude <= 1"));
        }
        Ok(())
    }

    /// Series-RLC resonance `1 / (2π√(LC))`.
    pub fn resonance_hz(&self) -> f64 {
        1.0 / (2.0 * PI * (self.l_henry * self.c_farad).sqrt())
    }

    /// Impedance at an explicit activity level.
    pub fn impedance(&self, activity: f64, f: f64, jitter_draw: f64) -> Result<ComplexValue> {
        ensure_positive_frequency(f)?;
        let omega = 2.0 * PI * f;
        let r = self.r0_ohm + activity * self.delta_r_ohm + jitter_draw * self.jitter_sigma_ohm;
        let x = omega * self.l_henry - 1.0 / (omega * self.c_farad);
        Ok(Complex64::new(r, x))
    }

    /// Backscattered phasor at an explicit activity level.
    pub fn backscatter(
        &self,
        attenuation: f64,
        activity: f64,
        f: f64,
        v_in: ComplexValue,
        jitter_draw: f64,
    ) -> Result<ComplexValue> {
        let gamma = reflection_coefficient(self.impedance(activity, f, jitter_draw)?, self.z_probe_ohm)?;
        Ok((self.shield_static_reflection + attenuation * attenuation * gamma) * v_in)
    }
}

/// `Z_dut(θ, f)` for a program at its nominal activity level.
pub fn device_impedance(
    model: &DeviceImpedanceModel,
    program: &ProgramProfile,
    f: f64,
    jitter_draw: f64,
) -> Result<ComplexValue> {
    model.impedance(program.activity_level, f, jitter_draw)
}

/// Reflected phasor seen through the shield:
/// `V_r = [Γ_static + A(f)²·Γ(f, θ)]·V_in`. The injected and reflected waves
/// each cross the shield once, hence the squared amplitude factor.
pub fn backscatter_response(
    model: &DeviceImpedanceModel,
    shield: &ShieldProfile,
    program: &ProgramProfile,
    f: f64,
    v_in: ComplexValue,
    jitter_draw: f64,
) -> Result<ComplexValue> {
    let a = shield_attenuation(shield, f)?;
    model.backscatter(a, program.activity_level, f, v_in, jitter_draw)
}

/// Point current source on the die.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CurrentSource {
    /// Position in meters.
    pub position: [f64; 3],
    /// Current amplitude (A) per program, indexed by [`ProgramId::index`].
    pub amplitude_per_state: [f64; 3],
    pub harmonic_freqs_hz: Vec<f64>,
}

impl CurrentSource {
    pub fn amplitude(&self, program: ProgramId) -> f64 {
        self.amplitude_per_state[program.index()]
    }

    /// Whether this source emits at `f` (relative tolerance 1e−9).
    pub fn emits_at(&self, f: f64) -> bool {
        self.harmonic_freqs_hz
            .iter()
            .any(|&h| (h - f).abs() <= 1e-9 * f.abs().max(h.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurrentSourceSet {
    pub sources: Vec<CurrentSource>,
}

impl Default for CurrentSourceSet {
    /// Core logic with clock harmonics at 100/200/400 MHz that scale with
    /// activity, an I/O driver at 150/300 MHz switched mainly by the LED
    /// program, and a clock-tree path leaking above the shield band at
    /// 3.5 and 3.8 GHz.
    fn default() -> Self {
        Self {
            sources: vec![
                CurrentSource {
                    position: [2.0e-3, 0.0, 0.0],
                    amplitude_per_state: [1.0e-7, 1.5e-7, 2.0e-7],
                    harmonic_freqs_hz: vec![100.0e6, 200.0e6, 400.0e6],
                },
                CurrentSource {
                    position: [-2.0e-3, 0.0, 0.0],
                    amplitude_per_state: [1.0e-7, 2.0e-7, 1.0e-7],
                    harmonic_freqs_hz: vec![150.0e6, 300.0e6],
                },
                CurrentSource {
                    position: [0.0, 2.0e-3, 0.0],
                    amplitude_per_state: [1.2e-10, 1.8e-10, 2.4e-10],
                    harmonic_freqs_hz: vec![3.5e9, 3.8e9],
                },
            ],
        }
    }
}

impl CurrentSourceSet {
    pub fn validate(&self, probe: &ProbeModel) -> Result<()> {
        for (k, s) in self.sources.iter().enumerate() {
            if s.amplitude_per_state.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
                return Err(invalid!("source {k} has a negative or non-finite amplitude"));
            }
            if s.harmonic_freqs_hz.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
                return Err(invalid!("source {k} has a non-positive harmonic"));
            }
            if distance(s.position, probe.position) == 0.0 {
                return Err(invalid!("source {k} coincides with the probe"));
            }
        }
        Ok(())
    }

    /// Copy with every harmonic moved to the nearest point of the grid
    /// `f_start + i·f_step`, `i < n_points`. Harmonics more than half a step
    /// outside the grid are dropped.
    pub fn snapped_to_grid(&self, f_start: f64, f_step: f64, n_points: usize) -> Self {
        let sources = self
            .sources
            .iter()
            .map(|s| {
                let mut harmonic_freqs_hz: Vec<f64> = s
                    .harmonic_freqs_hz
                    .iter()
                    .filter_map(|&h| {
                        let idx = ((h - f_start) / f_step).round();
                        (idx >= 0.0 && idx < n_points as f64).then_some(f_start + idx * f_step)
                    })
                    .collect();
                harmonic_freqs_hz.dedup();
                CurrentSource {
                    harmonic_freqs_hz,
                    ..s.clone()
                }
            })
            .collect();
        Self { sources }
    }
}

/// Magnetic loop probe.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ProbeModel {
    pub position: [f64; 3],
    pub loop_area_m2: f64,
    /// Alignment of the loop normal with the field, in `[0, 1]`.
    pub orientation_gain: f64,
    pub permeability: f64,
}

impl Default for ProbeModel {
    fn default() -> Self {
        Self {
            position: [0.0, 0.0, 5.0e-3],
            loop_area_m2: 2.0e-5,
            orientation_gain: 0.8,
            permeability: MU_0,
        }
    }
}

impl ProbeModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.loop_area_m2 > 0.0 && self.permeability > 0.0) {
            return Err(invalid!("probe loop area and permeability must be positive"));
        }
        if !(0.0..=1.0).contains(&self.orientation_gain) {
            return Err(invalid!("probe orientation gain must be in [0, 1]"));
        }
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("probe position must be finite"));
        }
        Ok(())
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Induced probe phasor from the sources emitting at `f`:
/// `V = j·2πf·μ·S·g·Σ I_k/(4π d_k³)·A(f)`. Frequencies not in any source's
/// harmonic set yield zero.
pub fn probe_voltage_em(
    sources: &CurrentSourceSet,
    probe: &ProbeModel,
    shield: &ShieldProfile,
    program: &ProgramProfile,
    f: f64,
) -> Result<ComplexValue> {
    let a = shield_attenuation(shield, f)?;
    let mut field = 0.0;
    for s in sources.sources.iter().filter(|s| s.emits_at(f)) {
        let d = distance(s.position, probe.position);
        if d == 0.0 {
            return Err(domain!("probe coincides with a current source"));
        }
        field += s.amplitude(program.id) / (4.0 * PI * d * d * d);
    }
    let gain = 2.0 * PI * f * probe.permeability * probe.loop_area_m2 * probe.orientation_gain;
    Ok(Complex64::new(0.0, gain * field * a))
}

/// Countermeasure: perturbs the baseline resistance to
/// `r0·(1 + strength·Δr/r0·draw) = r0 + strength·Δr·draw`, `draw ∈ [−1, 1]`.
pub fn randomize_impedance(model: &DeviceImpedanceModel, strength: f64, draw: f64) -> Result<DeviceImpedanceModel> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(domain!("countermeasure strength must be in [0, 1], got {strength}"));
    }
    if !(-1.0..=1.0).contains(&draw) {
        return Err(domain!("countermeasure draw must be in [-1, 1], got {draw}"));
    }
    if strength == 0.0 {
        return Ok(model.clone());
    }
    let r0_ohm = model.r0_ohm * (1.0 + strength * model.delta_r_ohm / model.r0_ohm * draw);
    if r0_ohm <= 0.0 {
        return Err(domain!("randomized resistance {r0_ohm} is not positive"));
    }
    Ok(DeviceImpedanceModel {
        r0_ohm,
        ..model.clone()
    })
}
