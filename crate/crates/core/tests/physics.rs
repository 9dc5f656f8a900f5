use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scatterleak_core::physics::{
    backscatter_response, device_impedance, leakage_model, probe_voltage_em, randomize_impedance,
    reflection_coefficient, shield_attenuation, CurrentSource, CurrentSourceSet, DeviceImpedanceModel, ProbeModel,
    ProgramProfile, ShieldProfile,
};
use scatterleak_core::ProgramId;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn passive() -> impl Strategy<Value = Complex64> {
    (0.0..1e4f64, -1e4..1e4f64).prop_map(|(r, x)| c(r, x))
}

fn source(position: [f64; 3], amps: [f64; 3], f: f64) -> CurrentSource {
    CurrentSource {
        position,
        amplitude_per_state: amps,
        harmonic_freqs_hz: vec![f],
    }
}

fn prog(id: ProgramId) -> ProgramProfile {
    ProgramProfile::defaults().into_iter().find(|p| p.id == id).unwrap()
}

fn unshielded() -> ShieldProfile {
    ShieldProfile::new("open", 1e6, 1e10, 0.0, 0.0, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn passive_loads_never_amplify(z in passive(), r in 1e-3..1e4f64) {
        let g = reflection_coefficient(z, c(r, 0.0)).unwrap();
        prop_assert!(g.norm() <= 1.0 + 1e-12, "|Γ| = {}", g.norm());
    }
}

#[test]
fn reactive_reference_can_exceed_unity() {
    // the bound needs a real reference: Re(Z·conj(Zp)) < 0 here
    let g = reflection_coefficient(c(0.0, 6000.0), c(0.0, -1500.0)).unwrap();
    assert!((g.norm() - 5.0 / 3.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn matched_load_is_reflectionless(z in passive()) {
        prop_assume!(z.norm() > 1e-6);
        prop_assert_eq!(reflection_coefficient(z, z).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn leakage_ignores_phase(mag in 0.0..=1.0f64, phi in -10.0..10.0f64, psi in -10.0..10.0f64) {
        let a = leakage_model(Complex64::from_polar(mag, phi)).unwrap();
        let b = leakage_model(Complex64::from_polar(mag, psi)).unwrap();
        prop_assert!((a - b).abs() <= 1e-15);
        prop_assert!((a - mag * mag).abs() <= 1e-15);
    }

    #[test]
    fn em_superposition(
        a1 in prop::array::uniform3(0.0..1e-3f64),
        a2 in prop::array::uniform3(0.0..1e-3f64),
        p1 in prop::array::uniform3(-1e-2..1e-2f64),
        p2 in prop::array::uniform3(-1e-2..1e-2f64),
    ) {
        let probe = ProbeModel { position: [0.0, 0.0, 0.05], ..ProbeModel::default() };
        let shield = ShieldProfile::copper();
        let f = 3.7e9;
        let v = |set: Vec<CurrentSource>, id| {
            probe_voltage_em(&CurrentSourceSet { sources: set }, &probe, &shield, &prog(id), f).unwrap()
        };
        for id in ProgramId::ALL {
            let both = v(vec![source(p1, a1, f), source(p2, a2, f)], id);
            let sum = v(vec![source(p1, a1, f)], id) + v(vec![source(p2, a2, f)], id);
            let scale = both.norm().max(f64::MIN_POSITIVE);
            prop_assert!((both - sum).norm() / scale < 1e-12);
        }
    }

    #[test]
    fn inverse_cube_distance(d in 1e-3..1.0f64, k in 1.1..10.0f64) {
        let shield = unshielded();
        let set = CurrentSourceSet { sources: vec![source([0.0; 3], [1e-3, 2e-3, 3e-3], 1e8)] };
        let at = |z: f64| {
            let probe = ProbeModel { position: [0.0, 0.0, z], ..ProbeModel::default() };
            probe_voltage_em(&set, &probe, &shield, &prog(ProgramId::Prog3), 1e8).unwrap()
        };
        let ratio = at(k * d).norm() / at(d).norm();
        prop_assert!((ratio * k.powi(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weaker_cap_leaks_more(hi in 0.0..60.0f64, lo_frac in 0.0..1.0f64, f in 3.0e9..2.0e10f64) {
        let lo = hi * lo_frac;
        let strong = ShieldProfile::with_cap("strong", hi);
        let weak = ShieldProfile::with_cap("weak", lo);
        prop_assert!(shield_attenuation(&weak, f).unwrap() >= shield_attenuation(&strong, f).unwrap());
    }

    #[test]
    fn se_never_rises_above_the_band(cap in 0.0..60.0f64, f1 in 3.0e9..1e11f64, step in 1.0..10.0f64) {
        let s = ShieldProfile::new("s", 1e7, 3e9, 60.0, cap, 30.0).unwrap();
        let (a, b) = (s.se_db(f1).unwrap(), s.se_db(f1 * step).unwrap());
        prop_assert!(b <= a + 1e-12);
        prop_assert!(b >= cap - 1e-12 && a <= 60.0 + 1e-12);
    }
}

#[test]
fn attenuation_examples() {
    let flat = |db| ShieldProfile::new("flat", 1e6, 1e10, db, db, 0.0).unwrap();
    assert_eq!(shield_attenuation(&flat(20.0), 1e9).unwrap(), 0.1);
    assert!((shield_attenuation(&flat(60.0), 1e9).unwrap() - 1e-3).abs() < 1e-18);
    let copper = ShieldProfile::new("Copper", 1e7, 3e9, 60.0, 33.0, 30.0).unwrap();
    assert!((copper.se_db(3e10).unwrap() - 33.0).abs() < 1e-12);
    assert!((shield_attenuation(&copper, 3e10).unwrap() - 0.022387211385683).abs() < 1e-12);
    assert_eq!(copper.se_db(1e9).unwrap(), 60.0);
}

#[test]
fn impedance_examples() {
    let m = DeviceImpedanceModel {
        jitter_sigma_ohm: 0.0,
        ..DeviceImpedanceModel::default()
    };
    let idle = ProgramProfile::new(ProgramId::Prog1, 0.0, None).unwrap();
    let z = device_impedance(&m, &idle, m.resonance_hz(), 0.0).unwrap();
    assert!((z.re - m.r0_ohm).abs() < 1e-12 && z.im.abs() < 1e-9);

    let half = ProgramProfile::new(ProgramId::Prog2, 0.5, None).unwrap();
    assert!((device_impedance(&m, &half, 1e9, 3.0).unwrap().re - (m.r0_ohm + 5.0)).abs() < 1e-12);

    let w = 2.0 * std::f64::consts::PI * 2.4e9;
    let x = w * m.l_henry - 1.0 / (w * m.c_farad);
    assert!((device_impedance(&m, &idle, 2.4e9, 0.0).unwrap().im - x).abs() < 1e-9);
    assert!(device_impedance(&m, &idle, 0.0, 0.0).is_err());
}

#[test]
fn backscatter_examples() {
    let half = ProgramProfile::new(ProgramId::Prog2, 0.5, None).unwrap();
    // Z = 150 Ω against 50 Ω reflects 0.5; 100 + 0.5·100 = 150 with no reactance at resonance
    let m = DeviceImpedanceModel {
        z_probe_ohm: c(50.0, 0.0),
        r0_ohm: 100.0,
        delta_r_ohm: 100.0,
        jitter_sigma_ohm: 0.0,
        shield_static_reflection: c(0.0, 0.0),
        ..DeviceImpedanceModel::default()
    };
    let f0 = m.resonance_hz();
    let open = ShieldProfile::new("open", 1e6, 1e11, 0.0, 0.0, 0.0).unwrap();
    let v = backscatter_response(&m, &open, &half, f0, c(1.0, 0.0), 0.0).unwrap();
    assert!((v - c(0.5, 0.0)).norm() < 1e-9);

    let sixty = ShieldProfile::new("sixty", 1e6, 1e11, 60.0, 60.0, 0.0).unwrap();
    let v = backscatter_response(&m, &sixty, &half, f0, c(1.0, 0.0), 0.0).unwrap();
    assert!((v.norm() - 0.5e-6).abs() < 1e-15);

    let matched = DeviceImpedanceModel {
        r0_ohm: 50.0,
        delta_r_ohm: 0.0,
        ..m
    };
    let v = backscatter_response(&matched, &open, &half, f0, c(3.0, -2.0), 0.0).unwrap();
    assert!(v.norm() < 1e-9);
}

#[test]
fn leakage_examples() {
    assert_eq!(leakage_model(c(0.0, 0.0)).unwrap(), 0.0);
    assert_eq!(leakage_model(c(1.0, 0.0)).unwrap(), 1.0);
    assert!((leakage_model(c(0.6, 0.4)).unwrap() - 0.52).abs() < 1e-15);
    assert!(leakage_model(c(1.1, 0.0)).is_err());
}

#[test]
fn zero_current_induces_nothing() {
    let set = CurrentSourceSet {
        sources: vec![source([0.0; 3], [0.0; 3], 1e8)],
    };
    let v = probe_voltage_em(
        &set,
        &ProbeModel::default(),
        &ShieldProfile::copper(),
        &prog(ProgramId::Prog3),
        1e8,
    )
    .unwrap();
    assert_eq!(v, c(0.0, 0.0));
}

#[test]
fn randomization_examples() {
    let m = DeviceImpedanceModel {
        r0_ohm: 50.0,
        delta_r_ohm: 10.0,
        ..DeviceImpedanceModel::default()
    };
    assert_eq!(randomize_impedance(&m, 0.0, 0.7).unwrap(), m);
    assert!((randomize_impedance(&m, 1.0, 1.0).unwrap().r0_ohm - 60.0).abs() < 1e-12);
    assert!(randomize_impedance(&m, 1.5, 0.0).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let mean = (0..n)
        .map(|_| {
            randomize_impedance(&m, 1.0, rng.random_range(-1.0..=1.0))
                .unwrap()
                .r0_ohm
        })
        .sum::<f64>()
        / n as f64;
    assert!((mean - 50.0).abs() < 0.5, "mean r0 {mean}");
}
