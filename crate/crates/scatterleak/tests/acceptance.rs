//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use scatterleak::config::ExperimentConfig;
use scatterleak::harness::{countermeasure_sweep, reproduce_classification_table, synthesize, with_workers};
use scatterleak::report::{emit_report, ReportFormat};
use scatterleak::traceio;
use scatterleak_core::analysis::{
    amari_index, evaluate, ica_fit, pca_fit, report_from_predictions, stratified_split, svm_train_cv, IcaParams,
    SvmParams,
};
use scatterleak_core::physics::{
    probe_voltage_em, reflection_coefficient, shield_attenuation, CurrentSource, CurrentSourceSet, ProbeModel,
    ProgramProfile, ShieldProfile,
};
use scatterleak_core::synth::{AcquisitionConfig, TraceSynthesizer};
use scatterleak_core::{Matrix, Modality};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn physics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let z = Complex64::new(rng.random_range(0.0..1e4), rng.random_range(-1e4..1e4));
        let zp = Complex64::new(rng.random_range(1e-3..1e4), 0.0);
        worst = worst.max(reflection_coefficient(z, zp).unwrap().norm());
    }
    let mut matched = true;
    for _ in 0..1000 {
        let z = Complex64::new(rng.random_range(1e-3..1e4), rng.random_range(-1e4..1e4));
        matched &= reflection_coefficient(z, z).unwrap() == Complex64::new(0.0, 0.0);
    }

    let probe = ProbeModel::default();
    let shield = ShieldProfile::copper();
    let prog = ProgramProfile::defaults()[2].clone();
    let src = |pos: [f64; 3], amp: f64| CurrentSource {
        position: pos,
        amplitude_per_state: [amp; 3],
        harmonic_freqs_hz: vec![3.6e9],
    };
    let v = |sources: Vec<CurrentSource>, p: &ProbeModel| {
        probe_voltage_em(&CurrentSourceSet { sources }, p, &shield, &prog, 3.6e9).unwrap()
    };
    let mut superposition = 0.0f64;
    let mut cube = 0.0f64;
    for _ in 0..1000 {
        let p1 = [rng.random_range(-3e-3..3e-3), rng.random_range(-3e-3..3e-3), 0.0];
        let p2 = [rng.random_range(-3e-3..3e-3), rng.random_range(-3e-3..3e-3), 0.0];
        let (a1, a2) = (rng.random_range(0.0..1e-3), rng.random_range(0.0..1e-3));
        let both = v(vec![src(p1, a1), src(p2, a2)], &probe);
        let sum = v(vec![src(p1, a1)], &probe) + v(vec![src(p2, a2)], &probe);
        superposition = superposition.max((both - sum).norm() / both.norm());

        let d = rng.random_range(1e-3..0.1);
        let near = ProbeModel {
            position: [0.0, 0.0, d],
            ..ProbeModel::default()
        };
        let far = ProbeModel {
            position: [0.0, 0.0, 2.0 * d],
            ..ProbeModel::default()
        };
        let ratio = v(vec![src([0.0; 3], a1 + 1e-6)], &far).norm() / v(vec![src([0.0; 3], a1 + 1e-6)], &near).norm();
        cube = cube.max((ratio * 8.0 - 1.0).abs());
    }
    let t = start.elapsed();
    outcome(
        worst <= 1.0 + 1e-12 && matched && superposition < 1e-12 && cube <= 1e-12 && t < Duration::from_secs(1),
        format!(
            "max|Γ|={worst:.15} (real reference), Γ(Z,Z)=0: {matched}, superposition rel err {superposition:.1e}, \
             inverse-cube err {cube:.1e}, {}",
            secs(t)
        ),
    )
}

fn decibels() -> Outcome {
    let flat = ShieldProfile::new("flat", 1e6, 1e10, 20.0, 20.0, 0.0).unwrap();
    let exact = shield_attenuation(&flat, 1e9).unwrap() == 0.1;
    let expected = [0.02239, 0.06310, 0.1000];
    let got: Vec<f64> = ShieldProfile::defaults()
        .iter()
        .map(|s| shield_attenuation(s, 5.5e9).unwrap())
        .collect();
    let within = got.iter().zip(expected).all(|(g, e)| (g - e).abs() <= 1e-4);
    outcome(
        exact && within,
        format!("SE 20 dB -> 0.1 exact: {exact}; caps 33/24/20 dB at 5.5 GHz -> {got:.5?} (tol 1e-4)"),
    )
}

fn averaging() -> Outcome {
    let sigma = 1.0e-3;
    let cfg = AcquisitionConfig {
        n_traces_per_class: 1000,
        n_points: 8,
        n_avg: 100,
        noise_sigma: sigma,
        ..AcquisitionConfig::default()
    };
    let defaults = ExperimentConfig::default();
    let ts = TraceSynthesizer::new(
        &cfg,
        Modality::Em,
        &defaults.shields[0],
        &defaults.device,
        &defaults.sources,
        &defaults.probe,
        &defaults.programs,
    )
    .unwrap()
    .generate()
    .unwrap();
    let target = sigma / 10.0;
    let mut worst = 0.0f64;
    for j in 0..cfg.n_points {
        let re: Vec<f64> = (0..1000).map(|r| ts.row(r)[j].re as f64).collect();
        let m = re.iter().sum::<f64>() / 1000.0;
        let s = (re.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 999.0).sqrt();
        worst = worst.max((s / target - 1.0).abs());
    }
    outcome(
        worst < 0.15,
        format!("n_avg=100, 1000 trials x 8 points: worst |std/(σ/10) - 1| = {worst:.4} (tol 0.15)"),
    )
}

fn analysis_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut notes = Vec::new();

    let scales = [5.0, 1.0, 3.0, 0.5, 2.0, 0.1];
    let data: Vec<f64> = (0..400 * 6)
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scales[i % 6]
        })
        .collect();
    let x = Matrix::new(400, 6, data).unwrap();
    let pca = pca_fit(&x, 1.0).unwrap();
    let gram = pca.components.matmul_transposed(&pca.components).unwrap();
    let ortho = (0..gram.rows())
        .flat_map(|i| (0..gram.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (gram.row(i)[j] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let cov = x.covariance(&x.column_means());
    let trace: f64 = (0..6).map(|j| cov.row(j)[j]).sum();
    let var_err = (pca.eigenvalues.iter().sum::<f64>() - trace).abs() / trace;
    let diag = Matrix::from_rows(&[[3.0, 1.0], [3.0, -1.0], [-3.0, 1.0], [-3.0, -1.0]]).unwrap();
    let m_diag = pca_fit(&diag, 0.95).unwrap().m;
    let pca_ok = ortho <= 1e-9 && var_err <= 1e-9 && m_diag == 2;
    notes.push(format!(
        "PCA ortho {ortho:.1e}, variance {var_err:.1e}, diag(9,1) m={m_diag}"
    ));

    let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 10.0]];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..100 {
            let (dx, dy): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            rows.push([c[0] + dx, c[1] + dy]);
            labels.push(k);
        }
    }
    let blobs = Matrix::from_rows(&rows).unwrap();
    let (train, test) = stratified_split(&labels, 0.7, 0).unwrap();
    let pick = |idx: &[usize]| -> Vec<usize> { idx.iter().map(|&i| labels[i]).collect() };
    let svm = svm_train_cv(
        &blobs.select_rows(&train).unwrap(),
        &pick(&train),
        &SvmParams::default(),
    )
    .unwrap();
    let svm_acc = evaluate(&svm, &blobs.select_rows(&test).unwrap(), &pick(&test))
        .unwrap()
        .accuracy_pct;
    let svm_ok = svm.validation_accuracy_pct == 100.0 && svm_acc == 100.0;
    notes.push(format!("SVM cv {:.2}% test {svm_acc:.2}%", svm.validation_accuracy_pct));

    let r = report_from_predictions(&[0, 1, 2], &[0, 0, 1, 1, 2, 2], &[0, 1, 1, 1, 2, 2], 0.0).unwrap();
    let got = [r.accuracy_pct, r.precision_pct, r.specificity_pct, r.f1_pct];
    let confusion_ok = got
        .iter()
        .zip([83.33, 88.89, 91.67, 82.22])
        .all(|(g, e)| (g - e).abs() < 0.005);
    notes.push(format!("confusion example {got:.2?}"));

    let s: Vec<[f64; 3]> = (0..4096)
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    let a = Matrix::from_rows(&[[1.0, 0.5, 0.2], [0.3, 1.0, 0.7], [0.6, 0.1, 1.0]]).unwrap();
    let mixed = Matrix::from_rows(&s).unwrap().matmul_transposed(&a).unwrap();
    let ica = ica_fit(&mixed, 3, &IcaParams::default()).unwrap();
    let amari = amari_index(&ica.separating_matrix().matmul(&a).unwrap()).unwrap();
    notes.push(format!("Amari {amari:.4}"));

    let t = start.elapsed();
    notes.push(secs(t));
    outcome(
        pca_ok && svm_ok && confusion_ok && amari < 0.05 && t < Duration::from_secs(30),
        notes.join(", "),
    )
}

fn render(cfg: &ExperimentConfig, workers: usize) -> (Vec<u8>, Vec<u8>) {
    with_workers(workers, || {
        let table = reproduce_classification_table(cfg).unwrap();
        let mut md = Vec::new();
        emit_report(&table, ReportFormat::Markdown, &mut md).unwrap();
        let mut sbtr = Vec::new();
        let ts = synthesize(cfg, 0, Modality::Backscatter, 0.0, None).unwrap();
        traceio::write_trace_set(&ts, &mut sbtr).unwrap();
        (md, sbtr)
    })
    .unwrap()
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "physics properties", physics()),
        (2, "dB correctness", decibels()),
        (3, "averaging statistics", averaging()),
        (4, "analysis oracles", analysis_oracles()),
    ];

    let cfg = ExperimentConfig::default();
    let start = Instant::now();
    let table = reproduce_classification_table(&cfg).unwrap();
    let elapsed = start.elapsed();
    let mut md = Vec::new();
    emit_report(&table, ReportFormat::Markdown, &mut md).unwrap();
    print!("{}", String::from_utf8_lossy(&md));

    let em: Vec<f64> = cfg
        .shields
        .iter()
        .map(|s| table.row(&s.name, Modality::Em).unwrap().report.accuracy_pct)
        .collect();
    let bs: Vec<f64> = cfg
        .shields
        .iter()
        .map(|s| table.row(&s.name, Modality::Backscatter).unwrap().report.accuracy_pct)
        .collect();
    let bs_ok = bs.iter().all(|&a| a >= 95.0);
    let em_ok = em.iter().all(|&a| (40.0..=85.0).contains(&a));
    let gap_ok = em.iter().zip(&bs).all(|(e, b)| b - e >= 15.0);
    let caps_falling = cfg
        .shields
        .windows(2)
        .all(|w| w[0].se_high_cap_db > w[1].se_high_cap_db);
    let trend_ok = caps_falling && em.windows(2).all(|w| w[0] <= w[1]);
    results.push((
        5,
        "comparison table structure",
        outcome(
            bs_ok && em_ok && gap_ok && trend_ok && elapsed < Duration::from_secs(300),
            format!(
                "EM {em:.2?} in [40,85]: {em_ok}; backscatter {bs:.2?} >= 95: {bs_ok}; gap >= 15: {gap_ok}; \
                 EM non-decreasing 33->24->20 dB: {trend_ok}; {}",
                secs(elapsed)
            ),
        ),
    ));

    let sil: Vec<(f64, f64)> = cfg
        .shields
        .iter()
        .map(|s| {
            (
                table.row(&s.name, Modality::Em).unwrap().silhouette,
                table.row(&s.name, Modality::Backscatter).unwrap().silhouette,
            )
        })
        .collect();
    results.push((
        6,
        "separability",
        outcome(
            sil.iter().all(|(e, b)| b > e),
            format!("silhouette (EM, backscatter) per shield {sil:.3?}"),
        ),
    ));

    let sweep = countermeasure_sweep(&cfg, 0, &[0.0, 1.0]).unwrap();
    let (a0, a1) = (sweep[0].report.accuracy_pct, sweep[1].report.accuracy_pct);
    let same_as_table = sweep[0].report == table.row(&cfg.shields[0].name, Modality::Backscatter).unwrap().report;
    results.push((
        7,
        "countermeasure",
        outcome(
            a1 < a0 && same_as_table,
            format!(
                "{}: strength 0 -> {a0:.2}%, strength 1 -> {a1:.2}%",
                cfg.shields[0].name
            ),
        ),
    ));

    let (md1, sbtr1) = render(&cfg, 1);
    let (md4, sbtr4) = render(&cfg, 4);
    let identical = md1 == md4 && sbtr1 == sbtr4 && md1 == md;
    let decoded = traceio::decode_trace_set(&sbtr1).unwrap();
    let mut rewritten = Vec::new();
    traceio::write_trace_set(&decoded, &mut rewritten).unwrap();
    let round_trip = rewritten == sbtr1 && decoded == synthesize(&cfg, 0, Modality::Backscatter, 0.0, None).unwrap();
    let truncated = (1..=16).all(|k| traceio::decode_trace_set(&sbtr1[..sbtr1.len() - k]).is_err())
        && traceio::decode_trace_set(&sbtr1[..20]).is_err();
    results.push((
        8,
        "determinism & format",
        outcome(
            identical && round_trip && truncated,
            format!(
                "1 vs 4 workers byte-identical: {identical}; SBTR round-trip: {round_trip}; \
                 truncation rejected: {truncated}"
            ),
        ),
    ));

    let mut all = true;
    for (n, name, o) in &results {
        all &= o.pass;
        println!(
            "{} criterion {n} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
