//! `SBTR` v1 trace container and CSV export.
//!
//! Layout, all little-endian:
//!
//! | field      | type                      |
//! |------------|---------------------------|
//! | magic      | `b"SBTR"`                 |
//! | version    | u16 (= 1)                 |
//! | modality   | u8 (0 EM, 1 backscatter)  |
//! | name_len   | u16                       |
//! | shield     | `name_len` bytes of UTF-8 |
//! | n_traces   | u32                       |
//! | n_points   | u32                       |
//! | f_start_hz | f64                       |
//! | f_step_hz  | f64                       |
//! | seed       | u64                       |
//! | labels     | `n_traces` × u8 program code |
//! | samples    | `n_traces·n_points` × (f32 re, f32 im), row-major |

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex32;
use scatterleak_core::{Modality, ProgramId, TraceSet};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SBTR";
pub const VERSION: u16 = 1;
/// Header bytes excluding the shield name.
pub const FIXED_HEADER_LEN: u64 = 4 + 2 + 1 + 2 + 4 + 4 + 8 + 8 + 8;

pub fn header_len(name_len: usize) -> u64 {
    FIXED_HEADER_LEN + name_len as u64
}

/// Exact file size implied by a header.
pub fn file_len(name_len: usize, n_traces: u64, n_points: u64) -> u64 {
    header_len(name_len) + n_traces + 8 * n_traces * n_points
}

struct Counting<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

impl<W: Write> Counting<W> {
    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.write_all(bytes).map_err(|source| Error::Io {
            offset: self.written,
            source,
        })
    }
}

/// Writes `ts` and returns the number of bytes written.
pub fn write_trace_set<W: Write>(ts: &TraceSet, sink: W) -> Result<u64> {
    let name = ts.shield_name().as_bytes();
    let name_len = u16::try_from(name.len())
        .map_err(|_| Error::Format(format!("shield name is {} bytes, limit is {}", name.len(), u16::MAX)))?;
    let n_traces = u32::try_from(ts.n_traces())
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Format(format!("trace count {} outside 1..=u32::MAX", ts.n_traces())))?;
    let n_points = u32::try_from(ts.n_points())
        .map_err(|_| Error::Format(format!("point count {} exceeds u32::MAX", ts.n_points())))?;

    let mut out = Counting {
        inner: sink,
        written: 0,
    };
    let mut header = Vec::with_capacity(header_len(name.len()) as usize);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.push(ts.modality().code());
    header.extend_from_slice(&name_len.to_le_bytes());
    header.extend_from_slice(name);
    header.extend_from_slice(&n_traces.to_le_bytes());
    header.extend_from_slice(&n_points.to_le_bytes());
    header.extend_from_slice(&ts.f_start_hz().to_le_bytes());
    header.extend_from_slice(&ts.f_step_hz().to_le_bytes());
    header.extend_from_slice(&ts.seed().to_le_bytes());
    out.put(&header)?;

    let labels: Vec<u8> = ts.labels().iter().map(|l| l.code()).collect();
    out.put(&labels)?;

    let mut buf = Vec::with_capacity(8 * ts.n_points());
    for r in 0..ts.n_traces() {
        buf.clear();
        for z in ts.row(r) {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        out.put(&buf)?;
    }
    out.flush().map_err(|source| Error::Io {
        offset: out.written,
        source,
    })?;
    Ok(out.written)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or(Error::Corruption {
            expected: end as u64,
            actual: self.bytes.len() as u64,
        })?;
        self.pos = end;
        Ok(slice.try_into().expect("slice has length N"))
    }

    fn take_slice(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self.bytes.get(self.pos..end).ok_or(Error::Corruption {
            expected: end as u64,
            actual: self.bytes.len() as u64,
        })?;
        self.pos = end;
        Ok(slice)
    }
}

/// Parses a complete `SBTR` image.
pub fn decode_trace_set(bytes: &[u8]) -> Result<TraceSet> {
    if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
        return Err(Error::Format("missing SBTR magic".into()));
    }
    let mut cur = Cursor { bytes, pos: 4 };
    let version = u16::from_le_bytes(cur.take()?);
    if version != VERSION {
        return Err(Error::Version(version));
    }
    let [modality] = cur.take::<1>()?;
    let modality = Modality::from_code(modality).map_err(|e| Error::Format(e.to_string()))?;
    let name_len = u16::from_le_bytes(cur.take()?) as usize;
    let name = std::str::from_utf8(cur.take_slice(name_len)?)
        .map_err(|e| Error::Format(format!("shield name is not UTF-8: {e}")))?
        .to_owned();
    let n_traces = u32::from_le_bytes(cur.take()?) as usize;
    let n_points = u32::from_le_bytes(cur.take()?) as usize;
    let f_start = f64::from_le_bytes(cur.take()?);
    let f_step = f64::from_le_bytes(cur.take()?);
    let seed = u64::from_le_bytes(cur.take()?);
    if n_traces == 0 || n_points == 0 {
        return Err(Error::Format(format!("empty trace set ({n_traces} x {n_points})")));
    }

    let expected = file_len(name_len, n_traces as u64, n_points as u64);
    if bytes.len() as u64 != expected {
        return Err(Error::Corruption {
            expected,
            actual: bytes.len() as u64,
        });
    }

    let labels = cur
        .take_slice(n_traces)?
        .iter()
        .enumerate()
        .map(|(i, &c)| ProgramId::from_code(c).ok_or_else(|| Error::Format(format!("trace {i} has invalid label {c}"))))
        .collect::<Result<Vec<_>>>()?;
    let samples = cur
        .take_slice(8 * n_traces * n_points)?
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes(c[..4].try_into().expect("4 bytes")),
                f32::from_le_bytes(c[4..].try_into().expect("4 bytes")),
            )
        })
        .collect();
    TraceSet::new(f_start, f_step, n_points, modality, name, samples, labels, seed)
        .map_err(|e| Error::Format(e.to_string()))
}

/// Reads a trace set from `source`, consuming it to the end.
pub fn read_trace_set<R: Read>(mut source: R) -> Result<TraceSet> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(|source| Error::Io {
        offset: bytes.len() as u64,
        source,
    })?;
    decode_trace_set(&bytes)
}

pub fn save(ts: &TraceSet, path: &Path) -> Result<u64> {
    let file = File::create(path).map_err(Error::file(path))?;
    write_trace_set(ts, BufWriter::new(file))
}

pub fn load(path: &Path) -> Result<TraceSet> {
    let file = File::open(path).map_err(Error::file(path))?;
    read_trace_set(BufReader::new(file))
}

/// `|z|` rounded once to single precision.
pub fn magnitude_f32(z: Complex32) -> f32 {
    (z.re as f64).hypot(z.im as f64) as f32
}

/// Writes `label,f0,f1,…` followed by one row of magnitudes per trace and
/// returns the number of data rows. Numbers use the shortest decimal form
/// that parses back to the same value.
pub fn export_csv<W: Write>(ts: &TraceSet, destination: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(destination);
    let mut record = Vec::with_capacity(ts.n_points() + 1);
    record.push("label".to_owned());
    record.extend(ts.frequencies().iter().map(|f| f.to_string()));
    w.write_record(&record)?;
    for r in 0..ts.n_traces() {
        record.clear();
        record.push(ts.labels()[r].to_string());
        record.extend(ts.row(r).iter().map(|&z| magnitude_f32(z).to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(ts.n_traces())
}
