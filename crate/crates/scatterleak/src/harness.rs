//! End-to-end experiment: synthesis, preprocessing, feature extraction,
//! classification and the countermeasure sweep.

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;

use scatterleak_core::analysis::{
    evaluate, ica_fit, pca_fit, pca_transform, score_frequencies, select_top_k, silhouette, stratified_split,
    svm_train_cv, ClassifierReport, IcaModel, IcaParams, PcaModel, SvmModel,
};
use scatterleak_core::dsp::{
    band_select, class_mean, remove_baseline, standardize, subtract_baseline, to_magnitude, Scaler,
};
use scatterleak_core::synth::TraceSynthesizer;
use scatterleak_core::{derive_seed, Matrix, Modality, ProgramId, TraceSet};

use crate::config::{AnalysisConfig, ExperimentConfig};
use crate::error::{Error, Result, StageExt};

/// Table order of the two channels within a shield.
pub const MODALITIES: [Modality; 2] = [Modality::Em, Modality::Backscatter];

/// Class whose mean trace is removed from EM spectra.
pub const BASELINE_PROGRAM: ProgramId = ProgramId::Prog1;

/// Seeds for one (shield, modality) pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineSeeds {
    pub synth: u64,
    pub split: u64,
    pub svm: u64,
}

impl PipelineSeeds {
    pub fn derive(root: u64, shield_index: usize, modality: Modality) -> Self {
        let base = derive_seed(derive_seed(root, shield_index as u64), modality.code() as u64);
        Self {
            synth: derive_seed(base, 0),
            split: derive_seed(base, 1),
            svm: derive_seed(base, 2),
        }
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (0 picks the rayon
/// default). Results never depend on the worker count.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Synthesizes the trace set for one shield and modality, rows in parallel.
/// `seed` defaults to the value the table pipeline uses.
pub fn synthesize(
    cfg: &ExperimentConfig,
    shield_index: usize,
    modality: Modality,
    countermeasure_strength: f64,
    seed: Option<u64>,
) -> Result<TraceSet> {
    let shield = cfg
        .shields
        .get(shield_index)
        .ok_or_else(|| Error::Config(format!("no shield at index {shield_index}")))?;
    let stage = || format!("{}/{}: synthesis", shield.name, modality);
    let mut acquisition = cfg.acquisition.clone();
    acquisition.seed = seed.unwrap_or(PipelineSeeds::derive(cfg.analysis.seed, shield_index, modality).synth);
    let synth = TraceSynthesizer::new(
        &acquisition,
        modality,
        shield,
        &cfg.device,
        &cfg.sources,
        &cfg.probe,
        &cfg.programs,
    )
    .and_then(|s| s.with_countermeasure(countermeasure_strength))
    .stage(stage)?;
    let n = synth.n_points();
    let mut samples = vec![Complex32::new(0.0, 0.0); synth.n_rows() * n];
    samples
        .par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(r, row)| synth.row_into(r, row))
        .stage(stage)?;
    synth.assemble(samples).stage(stage)
}

/// Preprocessing, feature and classifier state fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub modality: Modality,
    /// EM only: per-frequency mean of the baseline class.
    pub baseline: Option<Vec<Complex64>>,
    /// Backscatter only: retained band.
    pub band_hz: Option<(f64, f64)>,
    pub scaler: Scaler,
    /// Retained columns of the preprocessed grid, best first.
    pub selected: Vec<usize>,
    pub selected_hz: Vec<f64>,
    pub pca: PcaModel,
    pub svm: SvmModel<ProgramId>,
}

impl FittedPipeline {
    fn preprocess(&self, ts: &TraceSet) -> scatterleak_core::Result<TraceSet> {
        match (&self.baseline, self.band_hz) {
            (Some(b), _) => subtract_baseline(ts, b),
            (None, Some((lo, hi))) => band_select(ts, lo, hi),
            (None, None) => Ok(ts.clone()),
        }
    }

    /// PCA scores of every row of `ts`.
    pub fn features(&self, ts: &TraceSet) -> Result<Matrix> {
        let x = to_magnitude(&self.preprocess(ts).stage(|| "preprocess".into())?);
        let z = self.scaler.transform(&x).stage(|| "standardize".into())?;
        let z = z.select_columns(&self.selected).stage(|| "feature selection".into())?;
        pca_transform(&self.pca, &z).stage(|| "pca".into())
    }
}

/// Fits every stage on rows `train` of `ts`; no other row is read.
pub fn fit_pipeline(
    ts: &TraceSet,
    train: &[usize],
    analysis: &AnalysisConfig,
    svm_seed: u64,
) -> Result<FittedPipeline> {
    let tag = format!("{}/{}", ts.shield_name(), ts.modality());
    let stage = |s: &str| {
        let msg = format!("{tag}: {s}");
        move || msg
    };
    let train_ts = ts.select_rows(train).stage(stage("split"))?;
    let labels = train_ts.labels().to_vec();

    let (baseline, band_hz, pre) = match ts.modality() {
        Modality::Em => {
            let b = class_mean(&train_ts, BASELINE_PROGRAM).stage(stage("baseline"))?;
            let pre = subtract_baseline(&train_ts, &b).stage(stage("baseline"))?;
            (Some(b), None, pre)
        }
        Modality::Backscatter => {
            let band = (analysis.bs_band_lo_hz, analysis.bs_band_hi_hz);
            let pre = band_select(&train_ts, band.0, band.1).stage(stage("band selection"))?;
            (None, Some(band), pre)
        }
    };

    let x = to_magnitude(&pre);
    let scaler = Scaler::fit(&x).stage(stage("standardize"))?;
    let z = scaler.transform(&x).stage(stage("standardize"))?;
    let scores = score_frequencies(&z, &labels).stage(stage("frequency scoring"))?;
    let selected = select_top_k(&scores, analysis.top_k.min(z.cols())).stage(stage("frequency scoring"))?;
    let selected_hz = selected.iter().map(|&j| pre.frequency(j)).collect();
    let z = z.select_columns(&selected).stage(stage("frequency scoring"))?;
    let pca = pca_fit(&z, analysis.variance_target).stage(stage("pca"))?;
    let y = pca_transform(&pca, &z).stage(stage("pca"))?;
    let svm = svm_train_cv(&y, &labels, &analysis.svm_params(svm_seed)).stage(stage("svm"))?;

    Ok(FittedPipeline {
        modality: ts.modality(),
        baseline,
        band_hz,
        scaler,
        selected,
        selected_hz,
        pca,
        svm,
    })
}

/// Result of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub report: ClassifierReport,
    /// Mean silhouette of all rows in the first two PCA dimensions.
    pub silhouette: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub fitted: FittedPipeline,
}

/// Split, fit on the training share, evaluate on the rest.
pub fn run_pipeline(ts: &TraceSet, analysis: &AnalysisConfig, seeds: PipelineSeeds) -> Result<PipelineOutcome> {
    let (train, test) =
        stratified_split(ts.labels(), analysis.split_train_fraction, seeds.split).stage(|| "split".into())?;
    let fitted = fit_pipeline(ts, &train, analysis, seeds.svm)?;
    let y = fitted.features(ts)?;
    let test_y = y.select_rows(&test).stage(|| "evaluate".into())?;
    let test_labels: Vec<ProgramId> = test.iter().map(|&i| ts.labels()[i]).collect();
    let report = evaluate(&fitted.svm, &test_y, &test_labels).stage(|| "evaluate".into())?;
    let dims: Vec<usize> = (0..fitted.pca.m.min(2)).collect();
    let silhouette = silhouette(&y.select_columns(&dims).stage(|| "silhouette".into())?, ts.labels())
        .stage(|| "silhouette".into())?;
    Ok(PipelineOutcome {
        report,
        silhouette,
        n_train: train.len(),
        n_test: test.len(),
        fitted,
    })
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub shield: String,
    pub se_cap_db: f64,
    pub modality: Modality,
    pub report: ClassifierReport,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<TableRow>,
}

impl ComparisonTable {
    pub fn row(&self, shield: &str, modality: Modality) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.shield == shield && r.modality == modality)
    }
}

/// Runs every shield × modality pipeline (concurrently on the current rayon
/// pool). Rows follow config shield order, EM before backscatter.
pub fn reproduce_classification_table(cfg: &ExperimentConfig) -> Result<ComparisonTable> {
    cfg.validate()?;
    let jobs: Vec<(usize, Modality)> = (0..cfg.shields.len())
        .flat_map(|s| MODALITIES.map(|m| (s, m)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, m)| {
            let ts = synthesize(cfg, s, m, 0.0, None)?;
            let out = run_pipeline(&ts, &cfg.analysis, PipelineSeeds::derive(cfg.analysis.seed, s, m))?;
            Ok(TableRow {
                shield: cfg.shields[s].name.clone(),
                se_cap_db: cfg.shields[s].se_high_cap_db,
                modality: m,
                report: out.report,
                silhouette: out.silhouette,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonTable { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub strength: f64,
    pub report: ClassifierReport,
}

/// Backscatter pipeline for shield `shield_index` at each countermeasure
/// strength. Strength 0 reproduces that shield's backscatter table row.
pub fn countermeasure_sweep(cfg: &ExperimentConfig, shield_index: usize, strengths: &[f64]) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if shield_index >= cfg.shields.len() {
        return Err(Error::Config(format!("no shield at index {shield_index}")));
    }
    if strengths.first() != Some(&0.0) {
        return Err(Error::Config("strengths must start at 0".into()));
    }
    if strengths.windows(2).any(|w| !(w[0] < w[1])) || strengths.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::Config(
            "strengths must be strictly ascending within [0, 1]".into(),
        ));
    }
    let seeds = PipelineSeeds::derive(cfg.analysis.seed, shield_index, Modality::Backscatter);
    strengths
        .par_iter()
        .map(|&strength| {
            let ts = synthesize(cfg, shield_index, Modality::Backscatter, strength, None)?;
            let out = run_pipeline(&ts, &cfg.analysis, seeds)?;
            Ok(SweepPoint {
                strength,
                report: out.report,
            })
        })
        .collect()
}

/// Magnitude matrix of a whole trace set: EM spectra lose the baseline-class
/// mean first, backscatter sweeps are taken as recorded.
pub fn exploratory_magnitudes(ts: &TraceSet) -> Result<Matrix> {
    match ts.modality() {
        Modality::Em => Ok(to_magnitude(
            &remove_baseline(ts, BASELINE_PROGRAM).stage(|| "baseline".into())?,
        )),
        Modality::Backscatter => Ok(to_magnitude(ts)),
    }
}

/// FastICA over the `top_k` most informative standardized magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct IcaOutcome {
    pub model: IcaModel,
    /// Per-trace component scores, `n_traces × n_components`.
    pub sources: Matrix,
    pub selected_hz: Vec<f64>,
}

pub fn ica_decomposition(ts: &TraceSet, n_components: usize, top_k: usize, seed: u64) -> Result<IcaOutcome> {
    let x = exploratory_magnitudes(ts)?;
    let (z, _) = standardize(&x).stage(|| "standardize".into())?;
    let scores = score_frequencies(&z, ts.labels()).stage(|| "frequency scoring".into())?;
    let selected = select_top_k(&scores, top_k.min(z.cols())).stage(|| "frequency scoring".into())?;
    let z = z.select_columns(&selected).stage(|| "frequency scoring".into())?;
    let params = IcaParams {
        seed,
        ..IcaParams::default()
    };
    let model = ica_fit(&z, n_components, &params).stage(|| "ica".into())?;
    let sources = model.transform(&z).stage(|| "ica".into())?;
    Ok(IcaOutcome {
        model,
        sources,
        selected_hz: selected.iter().map(|&j| ts.frequency(j)).collect(),
    })
}
