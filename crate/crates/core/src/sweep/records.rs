//! `records.csv`: one row per grid point, floats with 17 significant digits and a
//! per-row digest so torn or edited rows are detected.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::mpsc::Receiver;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::hex;
use crate::classical::Phase;
use crate::error::{Error, Result};
use crate::io::fmt_f64;

pub const RECORD_COLUMNS: [&str; 16] = [
    "i_eta",
    "i_g",
    "g_tilde",
    "eta",
    "status",
    "sz_bar",
    "x_bar",
    "label",
    "confidence",
    "lambda",
    "svn_bar",
    "svn_fluct",
    "gamma",
    "sz_bar_quantum",
    "reason",
    "digest",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Done,
    Failed,
    Excluded,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Done => "done",
            Status::Failed => "failed",
            Status::Excluded => "excluded",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "done" => Some(Status::Done),
            "failed" => Some(Status::Failed),
            "excluded" => Some(Status::Excluded),
            _ => None,
        }
    }
}

/// Task-specific results; fields a task does not produce stay empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub sz_bar: Option<f64>,
    pub x_bar: Option<f64>,
    pub label: Option<Phase>,
    pub confidence: Option<f64>,
    pub lambda: Option<f64>,
    pub svn_bar: Option<f64>,
    /// (ΔS_vN)²/S̄_vN
    pub svn_fluct: Option<f64>,
    pub gamma: Option<f64>,
    /// Windowed ⟨S_z⟩/(N/2).
    pub sz_bar_quantum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub i_g: usize,
    pub i_eta: usize,
    pub g_tilde: f64,
    pub eta: f64,
    pub status: Status,
    pub payload: Payload,
    pub reason: Option<String>,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_opt(s: &str) -> Option<Option<f64>> {
    if s.is_empty() {
        Some(None)
    } else {
        s.parse().ok().map(Some)
    }
}

impl PointRecord {
    fn fields(&self) -> Vec<String> {
        let p = &self.payload;
        vec![
            self.i_eta.to_string(),
            self.i_g.to_string(),
            fmt_f64(self.g_tilde),
            fmt_f64(self.eta),
            self.status.as_str().into(),
            opt(p.sz_bar),
            opt(p.x_bar),
            match p.label {
                Some(Phase::Trapped) => "trapped".into(),
                Some(Phase::Untrapped) => "untrapped".into(),
                None => String::new(),
            },
            opt(p.confidence),
            opt(p.lambda),
            opt(p.svn_bar),
            opt(p.svn_fluct),
            opt(p.gamma),
            opt(p.sz_bar_quantum),
            self.reason.clone().unwrap_or_default(),
        ]
    }

    fn row(&self) -> Vec<String> {
        let mut f = self.fields();
        f.push(digest(&f));
        f
    }

    fn parse(rec: &csv::StringRecord) -> Option<PointRecord> {
        if rec.len() != RECORD_COLUMNS.len() {
            return None;
        }
        let fields: Vec<String> = rec.iter().take(RECORD_COLUMNS.len() - 1).map(String::from).collect();
        if digest(&fields) != rec[RECORD_COLUMNS.len() - 1] {
            return None;
        }
        let label = match &rec[7] {
            "" => None,
            "trapped" => Some(Phase::Trapped),
            "untrapped" => Some(Phase::Untrapped),
            _ => return None,
        };
        Some(PointRecord {
            i_eta: rec[0].parse().ok()?,
            i_g: rec[1].parse().ok()?,
            g_tilde: rec[2].parse().ok()?,
            eta: rec[3].parse().ok()?,
            status: Status::parse(&rec[4])?,
            payload: Payload {
                sz_bar: parse_opt(&rec[5])?,
                x_bar: parse_opt(&rec[6])?,
                label,
                confidence: parse_opt(&rec[8])?,
                lambda: parse_opt(&rec[9])?,
                svn_bar: parse_opt(&rec[10])?,
                svn_fluct: parse_opt(&rec[11])?,
                gamma: parse_opt(&rec[12])?,
                sz_bar_quantum: parse_opt(&rec[13])?,
            },
            reason: (!rec[14].is_empty()).then(|| rec[14].to_string()),
        })
    }
}

fn digest(fields: &[String]) -> String {
    let mut h = Sha256::new();
    for f in fields {
        h.update(f.as_bytes());
        h.update([0x1f]);
    }
    hex(&h.finalize()[..8])
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Atomically replace `path` with a header and `records`.
pub(crate) fn write_all(path: &Path, records: &[PointRecord]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp).map_err(|e| csv_error(&tmp, e))?;
        w.write_record(RECORD_COLUMNS).map_err(|e| csv_error(&tmp, e))?;
        for r in records {
            w.write_record(r.row()).map_err(|e| csv_error(&tmp, e))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Append records as they arrive, flushing after each one.
pub(crate) fn append_stream(path: &Path, rx: Receiver<PointRecord>) -> Result<()> {
    let mut file = OpenOptions::new()
        .read(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    // A torn last line from an interrupted run must not swallow the next row.
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if len > 0 {
        let mut last = [0u8; 1];
        file.seek(SeekFrom::Start(len - 1)).map_err(|e| Error::io(path, e))?;
        file.read_exact(&mut last).map_err(|e| Error::io(path, e))?;
        if last[0] != b'\n' {
            file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    for rec in rx {
        w.write_record(rec.row()).map_err(|e| csv_error(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub struct ReadOutcome {
    pub valid: Vec<PointRecord>,
    /// 1-based line numbers of rows that failed to parse or verify.
    pub corrupt_lines: Vec<u64>,
}

pub fn read_records(path: &Path) -> Result<ReadOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(file);
    let mut valid = Vec::new();
    let mut corrupt_lines = Vec::new();
    let mut rec = csv::StringRecord::new();
    loop {
        match r.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => match PointRecord::parse(&rec) {
                Some(p) => valid.push(p),
                None => corrupt_lines.push(rec.position().map_or(0, |p| p.line())),
            },
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(csv_error(path, e));
                }
                corrupt_lines.push(line);
            }
        }
    }
    if !corrupt_lines.is_empty() {
        log::warn!("{}: {} corrupt rows will be recomputed", path.display(), corrupt_lines.len());
    }
    Ok(ReadOutcome { valid, corrupt_lines })
}
