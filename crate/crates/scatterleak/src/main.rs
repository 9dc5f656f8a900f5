use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use scatterleak::config::ExperimentConfig;
use scatterleak::harness::{self, PipelineSeeds};
use scatterleak::report::{self, ReportFormat};
use scatterleak::{traceio, Error, Result};
use scatterleak_core::analysis::{score_frequencies, select_top_k, ClassifierReport};
use scatterleak_core::Modality;

/// Simulate and classify EM and RF-backscatter side channels of shielded devices.
#[derive(Debug, Parser)]
#[command(name = "scatterleak", version)]
struct Cli {
    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize one labelled trace set.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        shield: String,
        #[arg(long, value_parser = parse_modality)]
        modality: Modality,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed derived from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rank frequencies by F-score and write the best K.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        top_k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the split / fit / evaluate pipeline on a trace file.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        split: f64,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        report: PathBuf,
        /// Analysis settings and root seed; defaults apply without it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Root seed for the split and classifier.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Independent component analysis of the informative magnitudes.
    Ica {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        components: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        top_k: usize,
        /// Also write the separating matrix (components × whitened inputs).
        #[arg(long)]
        unmixing_out: Option<PathBuf>,
    },
    /// Build the shield × modality comparison table.
    Reproduce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
        format: ReportFormat,
    },
    /// Backscatter accuracy against impedance-randomization strength.
    Countermeasure {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        strengths: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the first configured shield.
        #[arg(long)]
        shield: Option<String>,
    },
}

fn parse_modality(s: &str) -> std::result::Result<Modality, String> {
    s.parse().map_err(|e: scatterleak_core::Error| e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

#[derive(Serialize)]
struct TrainReport<'a> {
    shield: &'a str,
    modality: &'a str,
    n_train: usize,
    n_test: usize,
    selected_hz: &'a [f64],
    pca_components: usize,
    c_selected: f64,
    metrics: &'a ClassifierReport,
    silhouette: f64,
}

fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    match cli.command {
        Command::Synth {
            config,
            shield,
            modality,
            out,
            seed,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let idx = cfg.shield_index(&shield)?;
            let ts = harness::with_workers(workers, || harness::synthesize(&cfg, idx, modality, 0.0, seed))??;
            traceio::save(&ts, &out)?;
        }
        Command::Features { input, top_k, out } => {
            let ts = traceio::load(&input)?;
            let x = harness::exploratory_magnitudes(&ts)?;
            let scores = score_frequencies(&x, ts.labels())?;
            let best = select_top_k(&scores, top_k)?;
            let mut w = csv::Writer::from_writer(create(&out)?);
            w.write_record(["rank", "index", "frequency_hz", "f_score"])?;
            for (rank, &j) in best.iter().enumerate() {
                w.write_record([
                    (rank + 1).to_string(),
                    j.to_string(),
                    ts.frequency(j).to_string(),
                    scores.scores[j].to_string(),
                ])?;
            }
            let w = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            finish(w, &out)?;
        }
        Command::Train {
            input,
            split,
            folds,
            report,
            config,
            top_k,
            seed,
        } => {
            let ts = traceio::load(&input)?;
            let cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            let mut analysis = cfg.analysis.clone();
            analysis.split_train_fraction = split;
            analysis.folds = folds;
            if let Some(k) = top_k {
                analysis.top_k = k;
            }
            let root = seed.unwrap_or(analysis.seed);
            analysis.validate()?;
            let seeds = match cfg.shield_index(ts.shield_name()) {
                Ok(idx) => PipelineSeeds::derive(root, idx, ts.modality()),
                Err(_) => PipelineSeeds::derive(root ^ ts.seed(), 0, ts.modality()),
            };
            let outcome = harness::with_workers(workers, || harness::run_pipeline(&ts, &analysis, seeds))??;
            let doc = TrainReport {
                shield: ts.shield_name(),
                modality: ts.modality().short_name(),
                n_train: outcome.n_train,
                n_test: outcome.n_test,
                selected_hz: &outcome.fitted.selected_hz,
                pca_components: outcome.fitted.pca.m,
                c_selected: outcome.fitted.svm.c_selected,
                metrics: &outcome.report,
                silhouette: outcome.silhouette,
            };
            let mut w = create(&report)?;
            serde_json::to_writer_pretty(&mut w, &doc)
                .map_err(|e| Error::Format(format!("cannot encode report: {e}")))?;
            writeln!(w).map_err(|source| Error::File {
                path: report.clone(),
                source,
            })?;
            finish(w, &report)?;
        }
        Command::Ica {
            input,
            components,
            out,
            seed,
            top_k,
            unmixing_out,
        } => {
            let ts = traceio::load(&input)?;
            let ica = harness::ica_decomposition(&ts, components, top_k, seed)?;
            if !ica.model.converged {
                eprintln!(
                    "warning: ICA stopped after {} iterations without converging",
                    ica.model.iterations_used
                );
            }
            let mut w = csv::Writer::from_writer(create(&out)?);
            let mut header = vec!["label".to_owned()];
            header.extend((1..=components).map(|i| format!("ic{i}")));
            w.write_record(&header)?;
            for r in 0..ts.n_traces() {
                let mut rec = vec![ts.labels()[r].to_string()];
                rec.extend(ica.sources.row(r).iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            let w = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            finish(w, &out)?;
            if let Some(path) = unmixing_out {
                let m = ica.model.separating_matrix();
                let mut w = csv::Writer::from_writer(create(&path)?);
                let mut header = vec!["component".to_owned()];
                header.extend(ica.selected_hz.iter().map(f64::to_string));
                w.write_record(&header)?;
                for i in 0..m.rows() {
                    let mut rec = vec![format!("ic{}", i + 1)];
                    rec.extend(m.row(i).iter().map(f64::to_string));
                    w.write_record(&rec)?;
                }
                let w = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
                finish(w, &path)?;
            }
        }
        Command::Reproduce { config, out, format } => {
            let cfg = ExperimentConfig::load(&config)?;
            let table = harness::with_workers(workers, || harness::reproduce_classification_table(&cfg))??;
            let mut w = create(&out)?;
            report::emit_report(&table, format, &mut w)?;
            finish(w, &out)?;
            for row in &table.rows {
                eprintln!("{} / {}: silhouette {:.4}", row.shield, row.modality, row.silhouette);
            }
        }
        Command::Countermeasure {
            config,
            strengths,
            out,
            shield,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let idx = match &shield {
                Some(name) => cfg.shield_index(name)?,
                None => 0,
            };
            let sweep = harness::with_workers(workers, || harness::countermeasure_sweep(&cfg, idx, &strengths))??;
            let mut w = create(&out)?;
            report::emit_sweep_csv(&cfg.shields[idx].name, &sweep, &mut w)?;
            finish(w, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
