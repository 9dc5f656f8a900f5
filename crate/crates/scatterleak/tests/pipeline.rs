use std::path::Path;

use num_complex::Complex32;

use scatterleak::config::ExperimentConfig;
use scatterleak::harness::{
    countermeasure_sweep, fit_pipeline, reproduce_classification_table, run_pipeline, synthesize, with_workers,
    PipelineSeeds,
};
use scatterleak::report::{emit_report, ReportFormat};
use scatterleak::traceio;
use scatterleak_core::analysis::stratified_split;
use scatterleak_core::Modality;

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.acquisition.n_traces_per_class = 40;
    cfg.acquisition.n_points = 512;
    cfg.analysis.epochs = 50;
    cfg
}

#[test]
fn shipped_config_is_the_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    assert_eq!(ExperimentConfig::load(&path).unwrap(), ExperimentConfig::default());
}

#[test]
fn fitting_never_reads_test_rows() {
    let cfg = small();
    for modality in [Modality::Em, Modality::Backscatter] {
        let ts = synthesize(&cfg, 1, modality, 0.0, None).unwrap();
        let seeds = PipelineSeeds::derive(cfg.analysis.seed, 1, modality);
        let (train, test) = stratified_split(ts.labels(), cfg.analysis.split_train_fraction, seeds.split).unwrap();
        let clean = fit_pipeline(&ts, &train, &cfg.analysis, seeds.svm).unwrap();

        let n = ts.n_points();
        let mut samples = ts.samples().to_vec();
        for &r in &test {
            for (j, z) in samples[r * n..(r + 1) * n].iter_mut().enumerate() {
                *z = Complex32::new(1e3 * (j as f32 + 1.0), -5e2 * r as f32);
            }
        }
        let corrupted = ts.with_samples(samples).unwrap();
        assert_ne!(corrupted, ts);
        let refit = fit_pipeline(&corrupted, &train, &cfg.analysis, seeds.svm).unwrap();
        assert_eq!(clean, refit, "{modality}");
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = small();
    let render = |workers| {
        with_workers(workers, || {
            let table = reproduce_classification_table(&cfg).unwrap();
            let mut md = Vec::new();
            emit_report(&table, ReportFormat::Markdown, &mut md).unwrap();
            let mut csv = Vec::new();
            emit_report(&table, ReportFormat::Csv, &mut csv).unwrap();
            let ts = synthesize(&cfg, 2, Modality::Backscatter, 0.0, None).unwrap();
            let mut sbtr = Vec::new();
            traceio::write_trace_set(&ts, &mut sbtr).unwrap();
            (md, csv, sbtr)
        })
        .unwrap()
    };
    assert_eq!(render(1), render(4));
}

#[test]
fn table_shape_and_order() {
    let cfg = small();
    let table = reproduce_classification_table(&cfg).unwrap();
    let got: Vec<(&str, Modality)> = table.rows.iter().map(|r| (r.shield.as_str(), r.modality)).collect();
    assert_eq!(
        got,
        [
            ("Copper", Modality::Em),
            ("Copper", Modality::Backscatter),
            ("Al-CoTaZr", Modality::Em),
            ("Al-CoTaZr", Modality::Backscatter),
            ("Cu-CoNiFe", Modality::Em),
            ("Cu-CoNiFe", Modality::Backscatter),
        ]
    );
    let mut md = Vec::new();
    emit_report(&table, ReportFormat::Markdown, &mut md).unwrap();
    assert_eq!(String::from_utf8(md).unwrap().lines().count(), 8);
}

#[test]
fn zero_strength_sweep_reproduces_the_table_row() {
    let cfg = small();
    let table = reproduce_classification_table(&cfg).unwrap();
    let sweep = countermeasure_sweep(&cfg, 0, &[0.0]).unwrap();
    assert_eq!(sweep.len(), 1);
    assert_eq!(
        sweep[0].report,
        table.row("Copper", Modality::Backscatter).unwrap().report
    );
    let again = countermeasure_sweep(&cfg, 0, &[0.0]).unwrap();
    assert_eq!(sweep, again);
}

#[test]
fn sweep_rejects_bad_strengths() {
    let cfg = small();
    for s in [&[0.5, 1.0][..], &[0.0, 0.5, 0.5], &[0.0, 1.5], &[]] {
        assert!(countermeasure_sweep(&cfg, 0, s).is_err(), "{s:?}");
    }
    assert!(countermeasure_sweep(&cfg, 9, &[0.0]).is_err());
}

#[test]
fn pipeline_errors_name_their_stage() {
    let mut cfg = small();
    cfg.acquisition.n_traces_per_class = 1;
    let ts = synthesize(&cfg, 0, Modality::Em, 0.0, None).unwrap();
    let err = run_pipeline(&ts, &cfg.analysis, PipelineSeeds::derive(1, 0, Modality::Em)).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().starts_with("Copper/EM: frequency scoring: "), "{err}");
}
