//! Comparison-table and sweep rendering.

use std::io::{Read, Write};

use scatterleak_core::analysis::ClassifierReport;

use crate::error::{Error, Result};
use crate::harness::{ComparisonTable, SweepPoint};

pub const COLUMNS: [&str; 9] = [
    "Shield",
    "SE cap (dB)",
    "Leakage Type",
    "Validation Accuracy (%)",
    "Accuracy (%)",
    "Precision (%)",
    "Recall (%)",
    "Specificity (%)",
    "F1 (%)",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

/// Rounds the shortest decimal form of `v` to two places, ties away from
/// zero, so `99.555` renders as `99.56`.
pub fn format_pct(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let text = v.abs().to_string();
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: Vec<u8> = frac
        .bytes()
        .map(|b| b - b'0')
        .chain(std::iter::repeat(0))
        .take(3)
        .collect();
    let mut hundredths: u128 = int.parse::<u128>().expect("integer part is decimal") * 100
        + u128::from(digits[0]) * 10
        + u128::from(digits[1]);
    if digits[2] >= 5 {
        hundredths += 1;
    }
    let sign = if v < 0.0 && hundredths > 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
}

fn metric_values(r: &ClassifierReport) -> [f64; 6] {
    [
        r.validation_accuracy_pct,
        r.accuracy_pct,
        r.precision_pct,
        r.recall_pct,
        r.specificity_pct,
        r.f1_pct,
    ]
}

struct Counter<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Write for Counter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Writes `table` and returns the byte count. Markdown rounds percentages to
/// two decimals; CSV keeps full precision.
pub fn emit_report<W: Write>(table: &ComparisonTable, format: ReportFormat, destination: W) -> Result<u64> {
    if table.rows.is_empty() {
        return Err(Error::Format("cannot emit an empty table".into()));
    }
    let mut out = Counter {
        inner: destination,
        written: 0,
    };
    match format {
        ReportFormat::Markdown => {
            let mut text = format!("| {} |\n|{}\n", COLUMNS.join(" | "), ["---|"; 9].concat());
            for row in &table.rows {
                let metrics: Vec<String> = metric_values(&row.report).into_iter().map(format_pct).collect();
                text += &format!(
                    "| {} | {} | {} | {} |\n",
                    row.shield,
                    row.se_cap_db,
                    row.modality,
                    metrics.join(" | ")
                );
            }
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|source| Error::Io {
                    offset: out.written,
                    source,
                })?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(COLUMNS)?;
            for row in &table.rows {
                let mut record = vec![row.shield.clone(), row.se_cap_db.to_string(), row.modality.to_string()];
                record.extend(metric_values(&row.report).iter().map(f64::to_string));
                w.write_record(&record)?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
    }
    Ok(out.written)
}

/// One parsed CSV report line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub shield: String,
    pub se_cap_db: f64,
    pub leakage_type: String,
    /// Validation accuracy, accuracy, precision, recall, specificity, F1.
    pub metrics: [f64; 6],
}

/// Reads a table written by [`emit_report`] in CSV form.
pub fn read_report_csv<R: Read>(source: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(source);
    if rdr.headers()?.iter().ne(COLUMNS) {
        return Err(Error::Format("unexpected report header".into()));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
    };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let mut metrics = [0.0; 6];
            for (m, field) in metrics.iter_mut().zip(rec.iter().skip(3)) {
                *m = num(field)?;
            }
            Ok(CsvRow {
                shield: rec[0].to_owned(),
                se_cap_db: num(&rec[1])?,
                leakage_type: rec[2].to_owned(),
                metrics,
            })
        })
        .collect()
}

/// `strength,<metric columns>` per sweep point, full precision.
pub fn emit_sweep_csv<W: Write>(shield: &str, sweep: &[SweepPoint], destination: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(destination);
    let mut header = vec!["Shield", "Strength"];
    header.extend(&COLUMNS[3..]);
    w.write_record(&header)?;
    for p in sweep {
        let mut record = vec![shield.to_owned(), p.strength.to_string()];
        record.extend(metric_values(&p.report).iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
