//! CSV tables shaped like the published figures.
//!
//! Each file starts with a `#` line giving the unit of every column,
//! followed by the header row. Amplitudes are moduli in units of `γ`,
//! phases are in radians (wrapped to `(−π, π]`), times in `γ⁻¹` and
//! positions in `c/γ`.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::diagnostics::front_arrival;
use crate::error::{Error, Result, Violation};
use crate::propagate::{GridSlice, SimulationRecord};

use super::record_io::{create, fmt};

pub const FIGURE_IDS: [&str; 7] = ["fig2", "fig3", "fig6", "fig7", "fig8", "fig9", "fig10"];

/// Times of the three traveling-profile panels.
pub const PROFILE_TIMES: [f64; 3] = [477.6, 489.0, 501.6];
/// Position of the coherence probe as a fraction of the cell.
pub const PROBE_FRACTION: f64 = 0.6;

struct Table<'a> {
    units: &'a [(&'a str, &'a str)],
    rows: Vec<Vec<f64>>,
}

fn write_table(path: &Path, t: &Table) -> Result<()> {
    let io = |e| Error::io("writing figure data", path, e);
    let mut w = create(path)?;
    let units: Vec<String> = t.units.iter().map(|(c, u)| format!("{c} [{u}]")).collect();
    writeln!(w, "# {}", units.join(", ")).map_err(io)?;
    let names: Vec<&str> = t.units.iter().map(|(c, _)| *c).collect();
    writeln!(w, "{}", names.join(",")).map_err(io)?;
    for r in &t.rows {
        let cells: Vec<String> = r.iter().map(|x| fmt(*x)).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn snapshot_at(record: &SimulationRecord, tau: f64) -> Result<&GridSlice> {
    let tolerance = 0.5 * record.params.snapshot_stride as f64 * record.params.d_tau + 1e-9;
    record
        .snapshot_near(tau)
        .filter(|s| (s.tau - tau).abs() <= tolerance)
        .ok_or_else(|| Error::diagnostic(format!("no snapshot within {tolerance:.3} of tau = {tau}")))
}

/// Amplitude and phase of the entrance probe and the exit control channel.
fn comparison(record: &SimulationRecord) -> [Table<'static>; 2] {
    let pairs = record.taus.iter().zip(record.boundary_series.iter().zip(&record.exit_series));
    [
        Table {
            units: &[("tau", "1/gamma"), ("amp_in", "gamma"), ("amp_out", "gamma")],
            rows: pairs
                .clone()
                .map(|(t, (b, e))| vec![*t, b.omega_p.norm(), e.omega_c.norm()])
                .collect(),
        },
        Table {
            units: &[("tau", "1/gamma"), ("phase_in", "rad"), ("phase_out", "rad")],
            rows: pairs.map(|(t, (b, e))| vec![*t, b.omega_p.arg(), e.omega_c.arg()]).collect(),
        },
    ]
}

/// Snapshot time used for the population panel: halfway between the
/// retrieval switch-on and the front reaching the exit.
fn population_time(record: &SimulationRecord) -> f64 {
    let t_on = record.spec.t_on;
    let end = front_arrival(record).unwrap_or_else(|| record.params.t_end());
    0.5 * (t_on + end)
}

/// Writes the tables for `figure_id` into `dir` with the default panel times.
pub fn emit_figure_data(record: &SimulationRecord, figure_id: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    emit_figure_data_at(record, figure_id, dir, None)
}

/// As [`emit_figure_data`]; `times` replaces the snapshot times of the
/// spatial panels (three for `fig10`, one for `fig6`).
pub fn emit_figure_data_at(
    record: &SimulationRecord,
    figure_id: &str,
    dir: &Path,
    times: Option<&[f64]>,
) -> Result<Vec<PathBuf>> {
    let mut tables: Vec<(String, Table)> = Vec::new();
    match figure_id {
        "fig2" => tables.push((
            "fig2_boundary.csv".into(),
            Table {
                units: &[("tau", "1/gamma"), ("amp_p", "gamma"), ("amp_c", "gamma")],
                rows: record
                    .taus
                    .iter()
                    .zip(&record.boundary_series)
                    .map(|(t, f)| vec![*t, f.omega_p.norm(), f.omega_c.norm()])
                    .collect(),
            },
        )),
        "fig3" | "fig7" | "fig8" | "fig9" => {
            let [amp, phase] = comparison(record);
            tables.push((format!("{figure_id}_amplitude.csv"), amp));
            tables.push((format!("{figure_id}_phase.csv"), phase));
        }
        "fig6" => {
            let tau = times.and_then(|t| t.first().copied()).unwrap_or_else(|| population_time(record));
            let s = snapshot_at(record, tau)?;
            tables.push((
                "fig6_populations.csv".into(),
                Table {
                    units: &[("xi", "c/gamma"), ("rho_cc", "1"), ("rho_aa", "1")],
                    rows: s.xi.iter().zip(&s.atoms).map(|(x, a)| vec![*x, a.rho_cc, a.rho_aa]).collect(),
                },
            ));
            let first = record
                .snapshots
                .first()
                .ok_or_else(|| Error::diagnostic("record holds no snapshots"))?;
            let j = ((first.xi.len() - 1) as f64 * PROBE_FRACTION).round() as usize;
            tables.push((
                "fig6_coherence.csv".into(),
                Table {
                    units: &[("tau", "1/gamma"), ("amp_rho_cb", "1")],
                    rows: record
                        .snapshots
                        .iter()
                        .map(|s| vec![s.tau, s.atoms[j].rho_cb.norm()])
                        .collect(),
                },
            ));
        }
        "fig10" => {
            let times = times.unwrap_or(&PROFILE_TIMES);
            for (k, tau) in times.iter().enumerate() {
                let s = snapshot_at(record, *tau)?;
                let panel = (b'a' + k as u8) as char;
                tables.push((
                    format!("fig10_{panel}.csv"),
                    Table {
                        units: &[
                            ("xi", "c/gamma"),
                            ("amp_p", "gamma"),
                            ("amp_c", "gamma"),
                            ("amp_rho_cb_x5", "1"),
                        ],
                        rows: s
                            .xi
                            .iter()
                            .zip(s.fields.iter().zip(&s.atoms))
                            .map(|(x, (f, a))| vec![*x, f.omega_p.norm(), f.omega_c.norm(), 5.0 * a.rho_cb.norm()])
                            .collect(),
                    },
                ));
            }
        }
        other => {
            return Err(Error::Validation(vec![Violation::new(
                "figure_id",
                format!("unknown figure `{other}`; expected one of {}", FIGURE_IDS.join(", ")),
            )]))
        }
    }
    let mut written = Vec::new();
    for (name, table) in &tables {
        let path = dir.join(name);
        write_table(&path, table)?;
        written.push(path);
    }
    Ok(written)
}
