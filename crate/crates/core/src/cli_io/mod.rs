//! Configuration files, run and sweep orchestration, and the on-disk record
//! format.
//!
//! A run directory holds `boundary.csv`, `exit.csv`, `snapshots.csv`,
//! `metrics.json`, `config_echo.ini` (the input bytes) and
//! `provenance.json`; an `ABORTED` file marks partial output.

mod config;
mod figures;
mod record_io;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    load_config, scheme_name, write_config, DecayChoice, EnvelopeChoice, GridOverrides, OutputOptions,
    PhysicalOverrides, PulseOverrides, ResolvedRun, RunConfig, SweepAxes,
};
pub use figures::{emit_figure_data, emit_figure_data_at, FIGURE_IDS, PROBE_FRACTION, PROFILE_TIMES};
pub use record_io::{
    fmt, read_record, write_series_files, SnapshotWriter, ABORTED_MARKER, BOUNDARY_CSV, CONFIG_ECHO, EXIT_CSV,
    METRICS_JSON, PROVENANCE_JSON, SERIES_HEADER, SNAPSHOTS_CSV, SNAPSHOT_HEADER,
};

use crate::diagnostics::{analyze_retrieval, group_delay_check, GroupDelay, RegimeKind, RetrievalReport};
use crate::error::{Error, Result};
use crate::propagate::{integrate_with, IntegrateOptions, SimulationRecord};
use crate::soliton::{analyze_soliton, is_equal_coupling, SolitonReport};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "LAMBDA_EIT_THREADS";

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "point,alpha_ratio,omega_r0,status,regime,peak_ratio,energy_ratio,\
time_reversal_score,phase_conjugation_score,front_arrival";

/// Sizes the global rayon pool from `LAMBDA_EIT_THREADS`, if set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Error::Validation(vec![crate::error::Violation::new(
            THREADS_ENV,
            format!("expects a positive integer, got `{v}`"),
        )])
    })?;
    // a second initialization keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conservation {
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub snapshots_checked: usize,
}

/// Flat copy of the headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub regime: Option<RegimeKind>,
    pub peak_ratio: Option<f64>,
    pub energy_ratio: Option<f64>,
    pub time_reversal_score: Option<f64>,
    pub phase_conjugation_score: Option<f64>,
    pub front_arrival: Option<f64>,
    pub soliton_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub name: String,
    pub aborted: bool,
    pub summary: Summary,
    pub conservation: Conservation,
    pub retrieval: RetrievalReport,
    pub group_delay: Option<GroupDelay>,
    pub soliton: Option<SolitonReport>,
    pub notes: Vec<String>,
}

pub fn conservation(record: &SimulationRecord) -> Conservation {
    let mut c = Conservation {
        max_trace_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        snapshots_checked: record.snapshots.len(),
    };
    for s in &record.snapshots {
        for a in &s.atoms {
            c.max_trace_error = c.max_trace_error.max((a.trace() - 1.0).abs());
            c.min_eigenvalue = c.min_eigenvalue.min(a.min_eigenvalue());
        }
    }
    c
}

/// All diagnostics of a record. Checks that do not apply are recorded in
/// `notes`.
pub fn compute_metrics(record: &SimulationRecord, name: &str) -> Metrics {
    let mut notes = Vec::new();
    let retrieval = analyze_retrieval(record);
    // the delay check needs the writing beam on for the whole run
    let group_delay = if record.spec.t_off >= record.params.t_end() {
        match group_delay_check(record) {
            Ok(g) => Some(g),
            Err(e) => {
                notes.push(format!("group_delay: {e}"));
                None
            }
        }
    } else {
        None
    };
    let soliton = if is_equal_coupling(&record.params) && !record.snapshots.is_empty() {
        match analyze_soliton(record) {
            Ok(s) => Some(s),
            Err(e) => {
                notes.push(format!("soliton: {e}"));
                None
            }
        }
    } else {
        None
    };
    let summary = Summary {
        regime: retrieval.regime.map(|r| r.kind),
        peak_ratio: retrieval.amplification.map(|a| a.peak_ratio),
        energy_ratio: retrieval.amplification.map(|a| a.energy_ratio),
        time_reversal_score: retrieval.time_reversal_score,
        phase_conjugation_score: retrieval.phase_conjugation_score,
        front_arrival: retrieval.front_arrival,
        soliton_speed: soliton.as_ref().map(|s| s.speed.v),
    };
    Metrics {
        name: name.to_string(),
        aborted: record.aborted,
        summary,
        conservation: conservation(record),
        retrieval,
        group_delay,
        soliton,
        notes,
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("metrics serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ProvenanceFile<'a> {
    code_version: &'a str,
    config_hash: &'a str,
    preset: &'a str,
    scheme: &'a str,
    n_xi: usize,
    n_tau: usize,
    d_tau: f64,
    cell_length: f64,
    snapshot_stride: usize,
    threads: usize,
    wall_time_s: f64,
}

/// Runs one configuration and writes its artifacts into `out`.
///
/// `echo` is copied verbatim to `config_echo.ini`. On a numerical
/// instability the partial record is still written, `ABORTED` is created
/// and the error is returned.
pub fn execute(config: &RunConfig, echo: &str, out: &Path) -> Result<Metrics> {
    let resolved = config.resolve()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io("creating output directory", out, e))?;
    record_io::write_all(&out.join(CONFIG_ECHO), echo)?;
    let stale = out.join(ABORTED_MARKER);
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| Error::io("removing stale marker", &stale, e))?;
    }

    let started = Instant::now();
    let mut writer = SnapshotWriter::create(&out.join(SNAPSHOTS_CSV), config.output.xi_stride.unwrap_or(1))?;
    let options = IntegrateOptions {
        scheme: resolved.scheme,
        keep_snapshots: true,
    };
    let outcome = integrate_with(&resolved.spec, &resolved.params, options, &mut writer);
    writer.finish()?;
    let wall = started.elapsed().as_secs_f64();

    let (record, failure) = match outcome {
        Ok(r) => (r, None),
        Err(Error::Instability {
            xi,
            tau,
            reason,
            partial,
        }) => {
            let r = partial.map(|b| *b);
            let e = Error::Instability {
                xi,
                tau,
                reason,
                partial: None,
            };
            record_io::write_all(&stale, &format!("{e}\n"))?;
            match r {
                Some(r) => (r, Some(e)),
                None => return Err(e),
            }
        }
        Err(e) => return Err(e),
    };

    write_series_files(&record, out)?;
    let provenance = ProvenanceFile {
        code_version: &record.provenance.code_version,
        config_hash: &record.provenance.config_hash,
        preset: &resolved.name,
        scheme: scheme_name(resolved.scheme),
        n_xi: resolved.params.n_xi,
        n_tau: resolved.params.n_tau,
        d_tau: resolved.params.d_tau,
        cell_length: resolved.params.cell_length,
        snapshot_stride: resolved.params.snapshot_stride,
        threads: rayon::current_num_threads(),
        wall_time_s: wall,
    };
    record_io::write_all(&out.join(PROVENANCE_JSON), &to_json(&provenance))?;
    let metrics = compute_metrics(&record, &resolved.name);
    record_io::write_all(&out.join(METRICS_JSON), &to_json(&metrics))?;
    for id in &config.output.figures {
        emit_figure_data(&record, id, out)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(metrics),
    }
}

/// Output directory: the explicit argument, else `[output] dir`.
fn output_dir(config: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    out.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .ok_or_else(|| {
            Error::Validation(vec![crate::error::Violation::new(
                "output.dir",
                "no output directory given",
            )])
        })
}

/// `run --config PATH [--out DIR]`.
pub fn run(config_path: &Path, out: Option<&Path>) -> Result<Metrics> {
    let echo = std::fs::read_to_string(config_path).map_err(|e| Error::io("reading configuration", config_path, e))?;
    let config = RunConfig::parse(&echo, &config_path.display().to_string())?;
    execute(&config, &echo, &output_dir(&config, out)?)
}

/// Result of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub index: usize,
    pub alpha_ratio: Option<f64>,
    pub omega_r0: Option<f64>,
    pub dir: PathBuf,
    /// `ok`, or the error message.
    pub status: std::result::Result<Summary, String>,
    pub exit_code: i32,
}

pub fn point_dir_name(index: usize) -> String {
    format!("point_{index:03}")
}

fn run_point(index: usize, config: &RunConfig, out: &Path) -> PointOutcome {
    let final_dir = out.join(point_dir_name(index));
    let staging = out.join(format!(".{}.partial", point_dir_name(index)));
    let result = (|| -> Result<Metrics> {
        if staging.exists() {
            std::fs::remove_dir_all(&staging).map_err(|e| Error::io("clearing staging directory", &staging, e))?;
        }
        let metrics = execute(config, &config.to_text(), &staging);
        if final_dir.exists() {
            std::fs::remove_dir_all(&final_dir).map_err(|e| Error::io("replacing point directory", &final_dir, e))?;
        }
        if staging.exists() {
            std::fs::rename(&staging, &final_dir).map_err(|e| Error::io("publishing point directory", &final_dir, e))?;
        }
        metrics
    })();
    let (status, exit_code) = match result {
        Ok(m) => (Ok(m.summary), 0),
        Err(e) => (Err(e.to_string()), e.exit_code()),
    };
    PointOutcome {
        index,
        alpha_ratio: config.physical.alpha_ratio,
        omega_r0: config.pulse.omega_r0,
        dir: final_dir,
        status,
        exit_code,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn summary_row(p: &PointOutcome) -> String {
    let status = match &p.status {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("\"error: {}\"", e.replace('"', "'")),
    };
    let s = p.status.as_ref().ok();
    let regime = s.and_then(|s| s.regime).map(|r| format!("{r:?}")).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        p.index,
        opt(p.alpha_ratio),
        opt(p.omega_r0),
        status,
        regime,
        opt(s.and_then(|s| s.peak_ratio)),
        opt(s.and_then(|s| s.energy_ratio)),
        opt(s.and_then(|s| s.time_reversal_score)),
        opt(s.and_then(|s| s.phase_conjugation_score)),
        opt(s.and_then(|s| s.front_arrival)),
    )
}

/// Runs every sweep point (in parallel) into `out/point_NNN` and writes
/// `summary.csv`. Failed points are reported in the summary; the sweep
/// itself only fails on configuration or summary I/O errors.
pub fn execute_sweep(config: &RunConfig, out: &Path) -> Result<Vec<PointOutcome>> {
    if config.sweep.is_empty() {
        return Err(Error::Validation(vec![crate::error::Violation::new(
            "sweep",
            "no sweep axis given",
        )]));
    }
    let points = config.sweep_points();
    for p in &points {
        p.resolve()?;
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io("creating output directory", out, e))?;
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_point(i, p, out))
        .collect();
    let mut text = format!("{SUMMARY_HEADER}\n");
    for o in &outcomes {
        text.push_str(&summary_row(o));
        text.push('\n');
    }
    record_io::write_all(&out.join(SUMMARY_CSV), &text)?;
    Ok(outcomes)
}

/// `sweep --config PATH [--out DIR]`.
pub fn sweep(config_path: &Path, out: Option<&Path>) -> Result<Vec<PointOutcome>> {
    let config = load_config(config_path)?;
    execute_sweep(&config, &output_dir(&config, out)?)
}

/// `diagnose --record DIR`: reloads a run directory and recomputes its
/// metrics.
pub fn diagnose(dir: &Path) -> Result<Metrics> {
    let echo_path = dir.join(CONFIG_ECHO);
    let config = load_config(&echo_path)?;
    let resolved = config.resolve()?;
    let record = read_record(dir, resolved.params, resolved.spec)?;
    Ok(compute_metrics(&record, &resolved.name))
}

/// Serialized metrics as written to `metrics.json`.
pub fn metrics_json(metrics: &Metrics) -> String {
    to_json(metrics)
}
