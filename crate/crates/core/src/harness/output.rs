//! CSV log and summary files, plus readers for both.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::run::{CbfKind, LogRecord, LogSink, RunSummary};
use crate::barrier::Cbf;
use crate::error::{Error, Result};

const FIXED_COLUMNS: [&str; 31] = [
    "t", "px", "py", "pz", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "wx", "wy", "wz", "vx", "vy",
    "vz", "ud1", "ud2", "ud3", "ud4", "ud5", "ud6", "u1", "u2", "u3", "u4", "u5", "u6",
];

/// Column names for a barrier list: fixed state and input columns, three
/// per barrier, then total energy `E`.
pub fn csv_header(cbfs: &[Cbf<f64>]) -> Vec<String> {
    let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for c in cbfs {
        let l = c.label();
        match CbfKind::of(c) {
            CbfKind::EnergyAugmented => cols.extend([format!("h_{l}"), format!("H_{l}"), format!("act_{l}")]),
            CbfKind::Directional => cols.extend([format!("Edir_{l}"), format!("Hdir_{l}"), format!("act_{l}")]),
        }
    }
    cols.push("E".to_string());
    cols
}

/// One CSV line (without newline), floats in shortest round-trip form.
pub fn csv_row(r: &LogRecord) -> String {
    let mut s = String::with_capacity(512);
    let mut put = |x: f64| {
        if !s.is_empty() {
            s.push(',');
        }
        let _ = write!(s, "{x}");
    };
    put(r.t);
    r.position.iter().for_each(|&x| put(x));
    for i in 0..3 {
        for j in 0..3 {
            put(r.rotation[(i, j)]);
        }
    }
    r.omega.iter().for_each(|&x| put(x));
    r.velocity.iter().for_each(|&x| put(x));
    r.u_des.iter().for_each(|&x| put(x));
    r.u_star.iter().for_each(|&x| put(x));
    for c in &r.cbfs {
        put(match c.kind {
            CbfKind::EnergyAugmented => c.h.unwrap_or(f64::NAN),
            CbfKind::Directional => c.e_dir.unwrap_or(f64::NAN),
        });
        put(c.big_h);
        put(if c.active { 1.0 } else { 0.0 });
    }
    put(r.energy);
    s
}

/// Streams records to a CSV writer.
pub struct CsvSink<W: Write> {
    out: W,
    path: String,
}

impl CsvSink<BufWriter<File>> {
    pub fn create(path: &Path, cbfs: &[Cbf<f64>]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Self::new(BufWriter::new(file), &path.display().to_string(), cbfs)
    }
}

impl<W: Write> CsvSink<W> {
    /// Writes the header immediately; `name` is used in error messages.
    pub fn new(mut out: W, name: &str, cbfs: &[Cbf<f64>]) -> Result<Self> {
        writeln!(out, "{}", csv_header(cbfs).join(",")).map_err(|e| Error::io(Path::new(name), e))?;
        Ok(Self {
            out,
            path: name.to_string(),
        })
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io(Path::new(&self.path), e))?;
        Ok(self.out)
    }
}

impl<W: Write> LogSink for CsvSink<W> {
    fn record(&mut self, record: &LogRecord) -> Result<()> {
        writeln!(self.out, "{}", csv_row(record)).map_err(|e| Error::io(Path::new(&self.path), e))
    }
}

/// Writes a complete log.
pub fn write_csv(path: &Path, cbfs: &[Cbf<f64>], records: &[LogRecord]) -> Result<()> {
    let mut sink = CsvSink::create(path, cbfs)?;
    for r in records {
        sink.record(r)?;
    }
    sink.finish().map(|_| ())
}

/// Summary as `key = value` lines in a fixed order.
pub fn summary_text(s: &RunSummary) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("digest", s.digest.clone());
    kv("steps", s.steps.to_string());
    kv("stopped_at", s.stopped_at.map_or("none".to_string(), |t| format!("{t}")));
    for (l, v) in &s.min_h {
        kv(&format!("min_h_{l}"), format!("{v}"));
    }
    for (l, v) in &s.min_big_h {
        kv(&format!("min_H_{l}"), format!("{v}"));
    }
    kv("max_Edir", format!("{}", s.max_edir));
    kv("max_correction", format!("{}", s.max_correction));
    kv("rms_pos_err", format!("{}", s.rms_pos_err));
    kv("infeasible_steps", s.infeasible_steps.to_string());
    kv("substeps", s.substeps.to_string());
    kv("wall_ms", format!("{:.3}", s.wall_ms));
    out
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    std::fs::write(path, summary_text(summary)).map_err(|e| Error::io(path, e))
}

/// Parses summary text into ordered key/value pairs.
pub fn parse_summary(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_once(" = ")
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Config {
                    line: i + 1,
                    key: l.to_string(),
                    reason: "expected `key = value`".into(),
                })
        })
        .collect()
}

pub fn read_summary(path: &Path) -> Result<Vec<(String, String)>> {
    parse_summary(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// A parsed log: header and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |line: usize, reason: String| Error::Config {
        line,
        key: path.display().to_string(),
        reason,
    };
    let header: Vec<String> = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?.split(',').map(str::to_string).collect(),
        None => return Err(bad(1, "empty file".into())),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row: Vec<f64> = line
            .split(',')
            .map(|x| x.parse::<f64>().map_err(|_| bad(i + 2, format!("`{x}` is not a number"))))
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            return Err(bad(i + 2, format!("expected {} fields, got {}", header.len(), row.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}
