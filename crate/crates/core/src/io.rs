//! CSV and JSON exports. Floats carry 17 significant digits.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::classical::{classical_energy, Trajectory};
use crate::error::{Error, Result};
use crate::potential::PotentialCurve;
use crate::quantum::QuantumTrajectory;

/// 17 significant digits: round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

pub const TRAJECTORY_COLUMNS: [&str; 7] = ["t", "sx", "sy", "sz", "re_beta", "im_beta", "energy"];
pub const QUANTUM_COLUMNS: [&str; 9] =
    ["t", "sz", "sz_var", "x", "nbar", "energy", "parity", "svn", "n_max"];
pub const POTENTIAL_COLUMNS: [&str; 2] = ["xi", "V"];

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let rows = traj.times.iter().zip(&traj.states).map(|(&t, s)| {
        vec![
            f(t),
            f(s.s[0]),
            f(s.s[1]),
            f(s.s[2]),
            f(s.beta.re),
            f(s.beta.im),
            f(classical_energy(s, &traj.couplings)),
        ]
    });
    write_rows(path, &TRAJECTORY_COLUMNS, rows)
}

pub fn write_quantum_csv(path: &Path, traj: &QuantumTrajectory) -> Result<()> {
    let rows = traj
        .times
        .iter()
        .zip(&traj.records)
        .zip(&traj.n_max_history)
        .map(|((&t, r), &n_max)| {
            vec![
                f(t),
                f(r.sz),
                f(r.sz_var()),
                f(r.x),
                f(r.nbar),
                f(r.energy),
                f(r.parity),
                f(r.svn),
                n_max.to_string(),
            ]
        });
    write_rows(path, &QUANTUM_COLUMNS, rows)
}

pub fn write_potential_csv(path: &Path, curve: &PotentialCurve) -> Result<()> {
    let rows = curve
        .coordinate_grid
        .iter()
        .zip(&curve.values)
        .map(|(&x, &v)| vec![f(x), f(v)]);
    write_rows(path, &POTENTIAL_COLUMNS, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Read two numeric columns from a CSV file with a header row.
pub fn read_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let index = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{}: no column {name:?} (have {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let (ix, iy) = (index(x)?, index(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let parse = |i: usize| {
            rec.get(i).and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "{}: non-numeric value on data row {}",
                    path.display(),
                    line + 1
                ))
            })
        };
        xs.push(parse(ix)?);
        ys.push(parse(iy)?);
    }
    Ok((xs, ys))
}
