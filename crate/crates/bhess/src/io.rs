//! On-disk formats: field blobs, trace CSVs and the key=value manifest.
//!
//! Trace CSVs carry the columns `iter,f,grad_norm,alpha,beta,restart,seconds`.
//! Reals are written with 17 significant digits so that a re-read recovers
//! the same doubles; absent values are empty fields. Lines starting with `#`
//! are comments.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use bhess_core::solvers::{IterRecord, IterateTrace};
use bhess_core::Field;

use crate::error::{BenchError, Result};

pub const TRACE_COLUMNS: [&str; 7] = ["iter", "f", "grad_norm", "alpha", "beta", "restart", "seconds"];

/// One CSV line. For per-run traces `restart` is 0 or 1; for median traces
/// it counts the realizations that restarted at that iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub restart: usize,
    pub seconds: Option<f64>,
}

impl TraceRow {
    pub fn from_record(r: &IterRecord, with_seconds: bool) -> Self {
        Self {
            iter: r.iter,
            f: r.f,
            grad_norm: r.grad_norm,
            alpha: r.alpha,
            beta: r.beta,
            restart: usize::from(r.restart),
            seconds: with_seconds.then_some(r.seconds),
        }
    }

    pub fn to_record(&self) -> IterRecord {
        IterRecord {
            iter: self.iter,
            f: self.f,
            grad_norm: self.grad_norm,
            alpha: self.alpha,
            beta: self.beta,
            restart: self.restart > 0,
            seconds: self.seconds.unwrap_or(0.0),
        }
    }
}

pub fn trace_rows(trace: &IterateTrace, with_seconds: bool) -> Vec<TraceRow> {
    trace.records.iter().map(|r| TraceRow::from_record(r, with_seconds)).collect()
}

pub fn rows_to_trace(rows: &[TraceRow]) -> IterateTrace {
    IterateTrace {
        records: rows.iter().map(TraceRow::to_record).collect(),
    }
}

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(mut out: W, rows: &[TraceRow], comments: &[String]) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}").map_err(|e| BenchError::io("<csv>", e))?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            fmt_real(r.f),
            fmt_real(r.grad_norm),
            fmt_opt(r.alpha),
            fmt_opt(r.beta),
            r.restart.to_string(),
            fmt_opt(r.seconds),
        ])?;
    }
    w.flush().map_err(|e| BenchError::io("<csv>", e))?;
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, column: &str) -> Result<T> {
    field.parse().map_err(|_| BenchError::Format {
        what: "trace CSV",
        detail: format!("bad {column} value {field:?}"),
    })
}

fn parse_opt(field: &str, column: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse(field, column).map(Some)
    }
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_COLUMNS {
        return Err(BenchError::Format {
            what: "trace CSV",
            detail: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(TraceRow {
            iter: parse(&rec[0], "iter")?,
            f: parse(&rec[1], "f")?,
            grad_norm: parse(&rec[2], "grad_norm")?,
            alpha: parse_opt(&rec[3], "alpha")?,
            beta: parse_opt(&rec[4], "beta")?,
            restart: parse(&rec[5], "restart")?,
            seconds: parse_opt(&rec[6], "seconds")?,
        });
    }
    Ok(rows)
}

pub fn save_trace_csv(path: &Path, rows: &[TraceRow], comments: &[String]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_trace_csv(std::io::BufWriter::new(file), rows, comments)
}

pub fn load_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let file = fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_trace_csv(std::io::BufReader::new(file))
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    fs::write(path, field.to_le_bytes()).map_err(|e| BenchError::io(path, e))
}

pub fn read_field(path: &Path) -> Result<Field> {
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    Ok(Field::from_le_bytes(&bytes)?)
}

/// Writes `key=value` lines in the given order.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in entries {
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(BenchError::Format {
                what: "manifest",
                detail: format!("entry {k:?} cannot be written as key=value"),
            });
        }
        text.push_str(&format!("{k}={v}\n"));
    }
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_owned(), v.to_owned()))
                .ok_or_else(|| BenchError::Format {
                    what: "manifest",
                    detail: format!("line without '=': {l:?}"),
                })
        })
        .collect()
}
