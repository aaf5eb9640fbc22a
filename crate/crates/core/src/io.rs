//! CSV formats: per-step snapshots, energy traces and sweep tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::EnergyReport;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, GridFunction};

pub const SNAPSHOT_HEADER: [&str; 2] = ["x", "u"];
pub const ENERGY_HEADER: [&str; 4] = ["n", "t", "kind", "value"];
pub const SWEEP_HEADER: [&str; 10] = [
    "scheme", "mode", "beta", "eps", "h", "tau", "t_final", "error", "order", "status",
];

/// `{run_id}_step{n}.csv` inside `dir`.
pub fn snapshot_path(dir: &Path, run_id: &str, n: usize) -> PathBuf {
    dir.join(format!("{run_id}_step{n}.csv"))
}

pub fn write_snapshot(path: &Path, g: &Grid1D, u: &GridFunction) -> Result<()> {
    g.check(u)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SNAPSHOT_HEADER)?;
    for (j, v) in u.as_slice().iter().enumerate() {
        w.write_record([g.node(j).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot back as `(nodes, values)`.
pub fn read_snapshot(path: &Path) -> Result<(Vec<f64>, GridFunction)> {
    let mut r = csv::Reader::from_path(path)?;
    expect_header(r.headers()?, &SNAPSHOT_HEADER, path)?;
    let (mut xs, mut us) = (Vec::new(), Vec::new());
    for rec in r.deserialize() {
        let (x, u): (f64, f64) = rec?;
        xs.push(x);
        us.push(u);
    }
    Ok((xs, GridFunction::new(us)?))
}

fn expect_header(found: &csv::StringRecord, expected: &[&str], path: &Path) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::config(format!(
            "{}: expected header '{}', found '{}'",
            path.display(),
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

/// Streaming writer for energy traces.
pub struct EnergyWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl EnergyWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        EnergyWriter::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> EnergyWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(ENERGY_HEADER)?;
        Ok(EnergyWriter { inner })
    }

    pub fn write(&mut self, r: &EnergyReport) -> Result<()> {
        self.inner.write_record([
            r.n.to_string(),
            r.t.to_string(),
            r.kind.name().to_string(),
            r.value.to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_energy_trace(path: &Path) -> Result<Vec<EnergyReport>> {
    let mut r = csv::Reader::from_path(path)?;
    expect_header(r.headers()?, &ENERGY_HEADER, path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let parse = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| Error::config(format!("{}: bad number '{}': {e}", path.display(), field(i))))
        };
        out.push(EnergyReport {
            n: field(0)
                .parse()
                .map_err(|e| Error::config(format!("{}: bad step '{}': {e}", path.display(), field(0))))?,
            t: parse(1)?,
            kind: field(2).parse()?,
            value: parse(3)?,
        });
    }
    Ok(out)
}

/// One row of a sweep table as stored on disk. Missing values are empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: String,
    pub mode: String,
    pub beta: f64,
    pub eps: f64,
    pub h: f64,
    pub tau: f64,
    pub t_final: f64,
    pub error: Option<f64>,
    pub order: Option<f64>,
    pub status: String,
}

pub fn write_sweep_rows<W: Write>(sink: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.mode.clone(),
            r.beta.to_string(),
            r.eps.to_string(),
            r.h.to_string(),
            r.tau.to_string(),
            r.t_final.to_string(),
            opt(r.error),
            opt(r.order),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    expect_header(r.headers()?, &SWEEP_HEADER, path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}
