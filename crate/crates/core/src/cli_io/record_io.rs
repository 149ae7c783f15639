//! CSV serialization of simulation records.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit for bit. Rows end in `\n`; column order is fixed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{AtomicState, FieldPair, SimParams};
use crate::propagate::{GridSlice, Provenance, SimulationRecord, SnapshotSink};
use crate::scenarios::PulseSpec;

pub const BOUNDARY_CSV: &str = "boundary.csv";
pub const EXIT_CSV: &str = "exit.csv";
pub const SNAPSHOTS_CSV: &str = "snapshots.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const CONFIG_ECHO: &str = "config_echo.ini";
pub const PROVENANCE_JSON: &str = "provenance.json";
/// Present only when the run stopped early; holds the error message.
pub const ABORTED_MARKER: &str = "ABORTED";

pub const SERIES_HEADER: &str = "tau,omega_p_re,omega_p_im,omega_c_re,omega_c_im";
pub const SNAPSHOT_HEADER: &str = "tau,xi,omega_p_re,omega_p_im,omega_c_re,omega_c_im,\
rho_aa,rho_bb,rho_cc,rho_ab_re,rho_ab_im,rho_cb_re,rho_cb_im,rho_ca_re,rho_ca_im";

/// Lossless float text.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io("creating output file", path, e))
}

pub(crate) fn write_all(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io("writing output file", path, e))
}

fn write_series(path: &Path, taus: &[f64], series: &[FieldPair]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io("writing series", path, e);
    writeln!(w, "{SERIES_HEADER}").map_err(io)?;
    for (t, f) in taus.iter().zip(series) {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(*t),
            fmt(f.omega_p.re),
            fmt(f.omega_p.im),
            fmt(f.omega_c.re),
            fmt(f.omega_c.im)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes `boundary.csv` and `exit.csv`.
pub fn write_series_files(record: &SimulationRecord, dir: &Path) -> Result<()> {
    write_series(&dir.join(BOUNDARY_CSV), &record.taus, &record.boundary_series)?;
    write_series(&dir.join(EXIT_CSV), &record.taus, &record.exit_series)
}

/// Streams snapshots into `snapshots.csv` while a run is in progress.
pub struct SnapshotWriter {
    out: BufWriter<File>,
    path: PathBuf,
    xi_stride: usize,
    error: Option<std::io::Error>,
}

impl SnapshotWriter {
    pub fn create(path: &Path, xi_stride: usize) -> Result<Self> {
        let mut out = create(path)?;
        writeln!(out, "{SNAPSHOT_HEADER}").map_err(|e| Error::io("writing snapshots", path, e))?;
        Ok(SnapshotWriter {
            out,
            path: path.to_path_buf(),
            xi_stride: xi_stride.max(1),
            error: None,
        })
    }

    fn write_slice(&mut self, s: &GridSlice) -> std::io::Result<()> {
        let n = s.xi.len();
        for j in (0..n).step_by(self.xi_stride).chain((n > 0 && (n - 1) % self.xi_stride != 0).then_some(n - 1)) {
            let (f, a) = (&s.fields[j], &s.atoms[j]);
            writeln!(
                self.out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt(s.tau),
                fmt(s.xi[j]),
                fmt(f.omega_p.re),
                fmt(f.omega_p.im),
                fmt(f.omega_c.re),
                fmt(f.omega_c.im),
                fmt(a.rho_aa),
                fmt(a.rho_bb),
                fmt(a.rho_cc),
                fmt(a.rho_ab.re),
                fmt(a.rho_ab.im),
                fmt(a.rho_cb.re),
                fmt(a.rho_cb.im),
                fmt(a.rho_ca.re),
                fmt(a.rho_ca.im),
            )?;
        }
        Ok(())
    }

    /// Flushes and reports the first write error, if any.
    pub fn finish(mut self) -> Result<()> {
        let r = match self.error.take() {
            Some(e) => Err(e),
            None => self.out.flush(),
        };
        r.map_err(|e| Error::io("writing snapshots", &self.path, e))
    }
}

impl SnapshotSink for SnapshotWriter {
    fn snapshot(&mut self, slice: &GridSlice) {
        if self.error.is_none() {
            if let Err(e) = self.write_slice(slice) {
                self.error = Some(e);
            }
        }
    }
}

fn read_rows(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io("opening record file", path, e))?;
    let name = path.display().to_string();
    let bad = |line: u64, column: usize, message: String| Error::Parse {
        path: name.clone(),
        line: line as usize,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file));
    let found = reader
        .headers()
        .map_err(|e| bad(1, 1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(bad(1, 1, format!("expected header `{header}`")));
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            bad(line, 1, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(width);
        let mut column = 1;
        for cell in record.iter() {
            let x = cell
                .parse::<f64>()
                .map_err(|_| bad(line, column, format!("not a number: `{cell}`")))?;
            row.push(x);
            column += cell.len() + 1;
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<FieldPair>)> {
    let rows = read_rows(path, SERIES_HEADER)?;
    Ok(rows
        .iter()
        .map(|r| {
            (
                r[0],
                FieldPair::new(Complex64::new(r[1], r[2]), Complex64::new(r[3], r[4])),
            )
        })
        .unzip())
}

fn read_snapshots(path: &Path) -> Result<Vec<GridSlice>> {
    let rows = read_rows(path, SNAPSHOT_HEADER)?;
    let mut out: Vec<GridSlice> = Vec::new();
    for r in rows {
        if out.last().map_or(true, |s| s.tau != r[0]) {
            out.push(GridSlice {
                tau: r[0],
                xi: Vec::new(),
                atoms: Vec::new(),
                fields: Vec::new(),
            });
        }
        let s = out.last_mut().expect("slice pushed above");
        s.xi.push(r[1]);
        s.fields
            .push(FieldPair::new(Complex64::new(r[2], r[3]), Complex64::new(r[4], r[5])));
        s.atoms.push(AtomicState {
            rho_aa: r[6],
            rho_bb: r[7],
            rho_cc: r[8],
            rho_ab: Complex64::new(r[9], r[10]),
            rho_cb: Complex64::new(r[11], r[12]),
            rho_ca: Complex64::new(r[13], r[14]),
        });
    }
    Ok(out)
}

/// Rebuilds a record from the CSV files in `dir`; parameters and the pulse
/// program are supplied by the caller (normally from the config echo).
pub fn read_record(dir: &Path, params: SimParams, spec: PulseSpec) -> Result<SimulationRecord> {
    let (taus, boundary_series) = read_series(&dir.join(BOUNDARY_CSV))?;
    let (exit_taus, exit_series) = read_series(&dir.join(EXIT_CSV))?;
    if exit_taus != taus {
        return Err(Error::diagnostic("boundary.csv and exit.csv sample different times"));
    }
    let snapshots_path = dir.join(SNAPSHOTS_CSV);
    let snapshots = if snapshots_path.exists() {
        read_snapshots(&snapshots_path)?
    } else {
        Vec::new()
    };
    Ok(SimulationRecord {
        provenance: Provenance::for_run(&params, &spec),
        params,
        spec,
        taus,
        boundary_series,
        exit_series,
        snapshots,
        aborted: dir.join(ABORTED_MARKER).exists(),
    })
}
