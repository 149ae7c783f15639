//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! ```text
//! [physical]
//! preset = fig3_desk
//! alpha_ratio = 1.0
//!
//! [sweep]
//! alpha_ratio = 0.97, 1.00, 1.03
//! ```
//!
//! Every key is optional when a preset is named. Without a preset the medium
//! and pulse program must be given inline. Unknown sections and keys are
//! errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result, Violation};
use crate::model::{nondimensionalize, DecayModel, GridSpec, PhysicalConfig, SimParams};
use crate::propagate::{stability_limits, Scheme};
use crate::scenarios::{preset, Envelope, PhaseMode, PulseSpec};

/// Snapshot spacing used when neither the preset nor the file fixes one.
const DEFAULT_SNAPSHOT_INTERVAL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayChoice {
    CouplingScaled,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeChoice {
    DefaultDouble,
    Gaussian,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhysicalOverrides {
    pub gamma_abs: Option<f64>,
    pub cell_length_m: Option<f64>,
    pub alpha_over_c_p: Option<f64>,
    pub alpha_over_c_c: Option<f64>,
    /// `α_c/α_p`; rescales `α_c` after all other medium keys.
    pub alpha_ratio: Option<f64>,
    pub decay: Option<DecayChoice>,
    pub gamma_b: Option<f64>,
    pub gamma_c: Option<f64>,
    pub gamma_ab: Option<f64>,
    pub gamma_ca: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseOverrides {
    pub omega_p0: Option<f64>,
    pub omega_c0: Option<f64>,
    pub omega_r0: Option<f64>,
    pub t_off: Option<f64>,
    pub t_on: Option<f64>,
    pub t_switch: Option<f64>,
    pub signal_phase: Option<f64>,
    pub envelope: Option<EnvelopeChoice>,
    pub envelope_center: Option<f64>,
    pub envelope_width: Option<f64>,
    pub phase_mode: Option<PhaseMode>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridOverrides {
    pub n_xi: Option<usize>,
    pub d_tau: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    pub alpha_ratio: Vec<f64>,
    pub omega_r0: Vec<f64>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.alpha_ratio.is_empty() && self.omega_r0.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    /// Steps between stored snapshots.
    pub snapshot_stride: Option<usize>,
    /// Keep every n-th cell in `snapshots.csv`.
    pub xi_stride: Option<usize>,
    /// Figure analogs written next to the run outputs.
    pub figures: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub physical: PhysicalOverrides,
    pub pulse: PulseOverrides,
    pub grid: GridOverrides,
    pub sweep: SweepAxes,
    pub output: OutputOptions,
}

/// A configuration turned into solver inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub name: String,
    pub physical: PhysicalConfig,
    pub spec: PulseSpec,
    pub params: SimParams,
    pub scheme: Scheme,
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

type Table = BTreeMap<(String, String), Entry>;

const SECTIONS: [(&str, &[&str]); 5] = [
    (
        "physical",
        &[
            "preset",
            "gamma_abs",
            "cell_length_m",
            "alpha_over_c_p",
            "alpha_over_c_c",
            "alpha_ratio",
            "decay",
            "gamma_b",
            "gamma_c",
            "gamma_ab",
            "gamma_ca",
        ],
    ),
    (
        "pulse",
        &[
            "omega_p0",
            "omega_c0",
            "omega_r0",
            "t_off",
            "t_on",
            "t_switch",
            "signal_phase",
            "envelope",
            "envelope_center",
            "envelope_width",
            "phase_mode",
        ],
    ),
    ("grid", &["n_xi", "d_tau", "t_end", "scheme"]),
    ("sweep", &["alpha_ratio", "omega_r0"]),
    ("output", &["dir", "snapshot_stride", "xi_stride", "figures"]),
];

fn parse_error(path: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str, path: &str) -> Result<Table> {
    let mut table = Table::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let indent = raw.len() - raw.trim_start().len();
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') || body.starts_with(';') {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_error(path, line, indent + body.len(), "expected `]`"))?
                .trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(parse_error(path, line, indent + 2, format!("unknown section `{name}`")));
            }
            section = Some(name.to_string());
            continue;
        }
        let eq = body
            .find('=')
            .ok_or_else(|| parse_error(path, line, indent + 1, "expected `key = value`"))?;
        let key = body[..eq].trim();
        let sec = section
            .as_deref()
            .ok_or_else(|| parse_error(path, line, indent + 1, format!("key `{key}` outside any section")))?;
        let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !keys.contains(&key) {
            return Err(parse_error(path, line, indent + 1, format!("unknown key `{key}` in [{sec}]")));
        }
        let after = &body[eq + 1..];
        let value = after.trim();
        let column = indent + eq + 2 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(parse_error(path, line, column, format!("missing value for `{key}`")));
        }
        let k = (sec.to_string(), key.to_string());
        if table.contains_key(&k) {
            return Err(parse_error(path, line, indent + 1, format!("duplicate key `{key}` in [{sec}]")));
        }
        table.insert(
            k,
            Entry {
                value: value.to_string(),
                line,
                column,
            },
        );
    }
    Ok(table)
}

struct Reader<'a> {
    table: &'a Table,
    path: &'a str,
}

impl Reader<'_> {
    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.table.get(&(sec.to_string(), key.to_string()))
    }

    fn value<T>(&self, sec: &str, key: &str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<Option<T>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => parse(&e.value)
                .map(Some)
                .ok_or_else(|| parse_error(self.path, e.line, e.column, format!("`{key}` expects {what}"))),
        }
    }

    fn float(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        self.value(sec, key, |s| s.parse::<f64>().ok().filter(|x| x.is_finite()), "a finite number")
    }

    fn count(&self, sec: &str, key: &str) -> Result<Option<usize>> {
        self.value(sec, key, |s| s.parse::<usize>().ok(), "a non-negative integer")
    }

    fn floats(&self, sec: &str, key: &str) -> Result<Vec<f64>> {
        let parse = |s: &str| {
            s.split(',')
                .map(|x| x.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<_>>>()
        };
        Ok(self.value(sec, key, parse, "a comma-separated list of numbers")?.unwrap_or_default())
    }

    fn text(&self, sec: &str, key: &str) -> Option<String> {
        self.get(sec, key).map(|e| e.value.clone())
    }
}

fn decay_name(d: DecayChoice) -> &'static str {
    match d {
        DecayChoice::CouplingScaled => "coupling_scaled",
        DecayChoice::Explicit => "explicit",
    }
}

fn envelope_name(e: EnvelopeChoice) -> &'static str {
    match e {
        EnvelopeChoice::DefaultDouble => "default_double",
        EnvelopeChoice::Gaussian => "gaussian",
    }
}

fn phase_mode_name(p: PhaseMode) -> &'static str {
    match p {
        PhaseMode::None => "none",
        PhaseMode::FollowsEnvelope => "follows_envelope",
    }
}

pub fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::CausalSweep => "causal_sweep",
        Scheme::MethodOfLines => "method_of_lines",
        Scheme::PredictorCorrector => "predictor_corrector",
    }
}

fn lookup<T: Copy>(all: &[T], name: impl Fn(T) -> &'static str, s: &str) -> Option<T> {
    all.iter().copied().find(|x| name(*x) == s)
}

impl RunConfig {
    /// Parses configuration text; `origin` labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<RunConfig> {
        let table = tokenize(text, origin)?;
        let r = Reader {
            table: &table,
            path: origin,
        };
        let decay = r.value(
            "physical",
            "decay",
            |s| lookup(&[DecayChoice::CouplingScaled, DecayChoice::Explicit], decay_name, s),
            "`coupling_scaled` or `explicit`",
        )?;
        let envelope = r.value(
            "pulse",
            "envelope",
            |s| lookup(&[EnvelopeChoice::DefaultDouble, EnvelopeChoice::Gaussian], envelope_name, s),
            "`default_double` or `gaussian`",
        )?;
        let phase_mode = r.value(
            "pulse",
            "phase_mode",
            |s| lookup(&[PhaseMode::None, PhaseMode::FollowsEnvelope], phase_mode_name, s),
            "`none` or `follows_envelope`",
        )?;
        let scheme = r.value(
            "grid",
            "scheme",
            |s| {
                lookup(
                    &[Scheme::CausalSweep, Scheme::MethodOfLines, Scheme::PredictorCorrector],
                    scheme_name,
                    s,
                )
            },
            "`causal_sweep`, `method_of_lines` or `predictor_corrector`",
        )?;
        let figures = r
            .text("output", "figures")
            .map(|s| s.split(',').map(|x| x.trim().to_string()).collect())
            .unwrap_or_default();
        let cfg = RunConfig {
            preset: r.text("physical", "preset"),
            physical: PhysicalOverrides {
                gamma_abs: r.float("physical", "gamma_abs")?,
                cell_length_m: r.float("physical", "cell_length_m")?,
                alpha_over_c_p: r.float("physical", "alpha_over_c_p")?,
                alpha_over_c_c: r.float("physical", "alpha_over_c_c")?,
                alpha_ratio: r.float("physical", "alpha_ratio")?,
                decay,
                gamma_b: r.float("physical", "gamma_b")?,
                gamma_c: r.float("physical", "gamma_c")?,
                gamma_ab: r.float("physical", "gamma_ab")?,
                gamma_ca: r.float("physical", "gamma_ca")?,
            },
            pulse: PulseOverrides {
                omega_p0: r.float("pulse", "omega_p0")?,
                omega_c0: r.float("pulse", "omega_c0")?,
                omega_r0: r.float("pulse", "omega_r0")?,
                t_off: r.float("pulse", "t_off")?,
                t_on: r.float("pulse", "t_on")?,
                t_switch: r.float("pulse", "t_switch")?,
                signal_phase: r.float("pulse", "signal_phase")?,
                envelope,
                envelope_center: r.float("pulse", "envelope_center")?,
                envelope_width: r.float("pulse", "envelope_width")?,
                phase_mode,
            },
            grid: GridOverrides {
                n_xi: r.count("grid", "n_xi")?,
                d_tau: r.float("grid", "d_tau")?,
                t_end: r.float("grid", "t_end")?,
                scheme,
            },
            sweep: SweepAxes {
                alpha_ratio: r.floats("sweep", "alpha_ratio")?,
                omega_r0: r.floats("sweep", "omega_r0")?,
            },
            output: OutputOptions {
                dir: r.text("output", "dir").map(PathBuf::from),
                snapshot_stride: r.count("output", "snapshot_stride")?,
                xi_stride: r.count("output", "xi_stride")?,
                figures,
            },
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let mut v = Vec::new();
        let inline = self.physical.cell_length_m.is_some() && self.physical.alpha_over_c_p.is_some();
        if self.preset.is_none() && !inline {
            v.push(Violation::new(
                "physical.preset",
                "give either a preset or an inline medium (cell_length_m and alpha_over_c_p)",
            ));
        }
        if self.physical.alpha_over_c_c.is_some() && self.physical.alpha_ratio.is_some() {
            v.push(Violation::new(
                "physical.alpha_over_c_c, physical.alpha_ratio",
                "set at most one of the two",
            ));
        }
        for f in &self.output.figures {
            if !super::figures::FIGURE_IDS.contains(&f.as_str()) {
                v.push(Violation::new("output.figures", format!("unknown figure id `{f}`")));
            }
        }
        if self.output.snapshot_stride == Some(0) || self.output.xi_stride == Some(0) {
            v.push(Violation::new("output", "strides must be at least 1"));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Canonical text form; [`RunConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let num = |x: f64| format!("{x:?}");
        let list = |xs: &[f64]| xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
        let mut section = |name: &str, entries: Vec<(&str, Option<String>)>| {
            let present: Vec<_> = entries.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect();
            if present.is_empty() {
                return;
            }
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in present {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        let p = &self.physical;
        section(
            "physical",
            vec![
                ("preset", self.preset.clone()),
                ("gamma_abs", p.gamma_abs.map(num)),
                ("cell_length_m", p.cell_length_m.map(num)),
                ("alpha_over_c_p", p.alpha_over_c_p.map(num)),
                ("alpha_over_c_c", p.alpha_over_c_c.map(num)),
                ("alpha_ratio", p.alpha_ratio.map(num)),
                ("decay", p.decay.map(|d| decay_name(d).to_string())),
                ("gamma_b", p.gamma_b.map(num)),
                ("gamma_c", p.gamma_c.map(num)),
                ("gamma_ab", p.gamma_ab.map(num)),
                ("gamma_ca", p.gamma_ca.map(num)),
            ],
        );
        let q = &self.pulse;
        section(
            "pulse",
            vec![
                ("omega_p0", q.omega_p0.map(num)),
                ("omega_c0", q.omega_c0.map(num)),
                ("omega_r0", q.omega_r0.map(num)),
                ("t_off", q.t_off.map(num)),
                ("t_on", q.t_on.map(num)),
                ("t_switch", q.t_switch.map(num)),
                ("signal_phase", q.signal_phase.map(num)),
                ("envelope", q.envelope.map(|e| envelope_name(e).to_string())),
                ("envelope_center", q.envelope_center.map(num)),
                ("envelope_width", q.envelope_width.map(num)),
                ("phase_mode", q.phase_mode.map(|m| phase_mode_name(m).to_string())),
            ],
        );
        let g = &self.grid;
        section(
            "grid",
            vec![
                ("n_xi", g.n_xi.map(|n| n.to_string())),
                ("d_tau", g.d_tau.map(num)),
                ("t_end", g.t_end.map(num)),
                ("scheme", g.scheme.map(|s| scheme_name(s).to_string())),
            ],
        );
        let s = &self.sweep;
        section(
            "sweep",
            vec![
                ("alpha_ratio", (!s.alpha_ratio.is_empty()).then(|| list(&s.alpha_ratio))),
                ("omega_r0", (!s.omega_r0.is_empty()).then(|| list(&s.omega_r0))),
            ],
        );
        let o = &self.output;
        section(
            "output",
            vec![
                ("dir", o.dir.as_ref().map(|d| d.display().to_string())),
                ("snapshot_stride", o.snapshot_stride.map(|n| n.to_string())),
                ("xi_stride", o.xi_stride.map(|n| n.to_string())),
                ("figures", (!o.figures.is_empty()).then(|| o.figures.join(", "))),
            ],
        );
        out
    }

    /// Builds solver inputs: preset values (or inline ones), then overrides.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let base = self.preset.as_deref().map(preset).transpose()?;
        let mut missing = Vec::new();
        let mut need = |name: &'static str, x: Option<f64>, fallback: Option<f64>| {
            x.or(fallback).unwrap_or_else(|| {
                missing.push(Violation::new(name, "required without a preset"));
                0.0
            })
        };
        let pb = base.as_ref().map(|b| &b.physical);
        let sb = base.as_ref().map(|b| &b.spec);
        let p = &self.physical;
        let alpha_p = need("physical.alpha_over_c_p", p.alpha_over_c_p, pb.map(|b| b.alpha_over_c_p));
        let alpha_c = match (p.alpha_over_c_c, p.alpha_ratio) {
            (Some(a), _) => a,
            (None, Some(r)) => alpha_p * r,
            (None, None) => need("physical.alpha_over_c_c", None, pb.map(|b| b.alpha_over_c_c)),
        };
        let cell_length_m = need("physical.cell_length_m", p.cell_length_m, pb.map(|b| b.cell_length_m));
        let gamma_abs = p
            .gamma_abs
            .or(pb.map(|b| b.gamma_abs))
            .unwrap_or(PhysicalConfig::DEFAULT_GAMMA_ABS);
        let q = &self.pulse;
        let omega_c0 = need("pulse.omega_c0", q.omega_c0, sb.map(|s| s.omega_c0));
        let envelope = match (q.envelope, sb) {
            (Some(EnvelopeChoice::Gaussian), _) => Envelope::gaussian(
                need("pulse.envelope_center", q.envelope_center, None),
                need("pulse.envelope_width", q.envelope_width, None),
                q.phase_mode.unwrap_or(PhaseMode::FollowsEnvelope),
            ),
            (Some(EnvelopeChoice::DefaultDouble), _) | (None, None) => {
                let mut e = Envelope::default_double();
                if let Some(m) = q.phase_mode {
                    e.phase_mode = m;
                }
                e
            }
            (None, Some(s)) => {
                let mut e = s.envelope.clone();
                if let Some(m) = q.phase_mode {
                    e.phase_mode = m;
                }
                e
            }
        };
        let spec = PulseSpec {
            omega_p0: need("pulse.omega_p0", q.omega_p0, sb.map(|s| s.omega_p0)),
            omega_c0,
            omega_r0: q.omega_r0.or(sb.map(|s| s.omega_r0)).unwrap_or(omega_c0),
            t_off: need("pulse.t_off", q.t_off, sb.map(|s| s.t_off)),
            t_on: need("pulse.t_on", q.t_on, sb.map(|s| s.t_on)),
            t_switch: need("pulse.t_switch", q.t_switch, sb.map(|s| s.t_switch)),
            signal_phase: q.signal_phase.or(sb.map(|s| s.signal_phase)).unwrap_or(0.0),
            envelope,
        };
        let t_end = need("grid.t_end", self.grid.t_end, pb.map(|b| b.grid.t_end));
        let decay = match p.decay.unwrap_or(match pb.map(|b| b.decay) {
            Some(DecayModel::Explicit { .. }) => DecayChoice::Explicit,
            _ => DecayChoice::CouplingScaled,
        }) {
            DecayChoice::CouplingScaled => DecayModel::CouplingScaled,
            DecayChoice::Explicit => {
                let old = match pb.map(|b| b.decay) {
                    Some(DecayModel::Explicit {
                        gamma_b,
                        gamma_c,
                        gamma_ab,
                        gamma_ca,
                    }) => Some((gamma_b, gamma_c, gamma_ab, gamma_ca)),
                    _ => None,
                };
                DecayModel::Explicit {
                    gamma_b: need("physical.gamma_b", p.gamma_b, old.map(|o| o.0)),
                    gamma_c: need("physical.gamma_c", p.gamma_c, old.map(|o| o.1)),
                    gamma_ab: need("physical.gamma_ab", p.gamma_ab, old.map(|o| o.2)),
                    gamma_ca: need("physical.gamma_ca", p.gamma_ca, old.map(|o| o.3)),
                }
            }
        };
        if !missing.is_empty() {
            return Err(Error::Validation(missing));
        }
        spec.validate()?;

        // provisional grid, refined from the stability rules unless given
        let provisional = pb.map(|b| b.grid).unwrap_or(GridSpec {
            n_xi: 201,
            d_tau: 0.05,
            t_end,
            snapshot_stride: 1,
        });
        let mut physical = PhysicalConfig {
            gamma_abs,
            cell_length_m,
            alpha_over_c_p: alpha_p,
            alpha_over_c_c: alpha_c,
            decay,
            grid: GridSpec { t_end, ..provisional },
        };
        let advice = stability_limits(&nondimensionalize(&physical)?, &spec);
        let d_tau = self.grid.d_tau.unwrap_or(if base.is_some() {
            provisional.d_tau.min(advice.d_tau)
        } else {
            advice.d_tau
        });
        let n_xi = self.grid.n_xi.unwrap_or(if base.is_some() {
            provisional.n_xi.max(advice.n_xi)
        } else {
            advice.n_xi
        });
        let interval = pb.map_or(DEFAULT_SNAPSHOT_INTERVAL, |b| b.grid.snapshot_stride as f64 * b.grid.d_tau);
        let snapshot_stride = self
            .output
            .snapshot_stride
            .unwrap_or(((interval / d_tau).round() as usize).max(1));
        physical.grid = GridSpec {
            n_xi,
            d_tau,
            t_end,
            snapshot_stride,
        };
        let params = nondimensionalize(&physical)?;
        Ok(ResolvedRun {
            name: self.preset.clone().unwrap_or_else(|| "inline".to_string()),
            physical,
            spec,
            params,
            scheme: self.grid.scheme.unwrap_or_default(),
        })
    }

    /// One configuration per sweep point (cartesian product of the axes),
    /// each with its sweep section cleared.
    pub fn sweep_points(&self) -> Vec<RunConfig> {
        let ratios: Vec<Option<f64>> = if self.sweep.alpha_ratio.is_empty() {
            vec![None]
        } else {
            self.sweep.alpha_ratio.iter().map(|r| Some(*r)).collect()
        };
        let drives: Vec<Option<f64>> = if self.sweep.omega_r0.is_empty() {
            vec![None]
        } else {
            self.sweep.omega_r0.iter().map(|r| Some(*r)).collect()
        };
        let mut out = Vec::new();
        for r in &ratios {
            for d in &drives {
                let mut c = self.clone();
                c.sweep = SweepAxes::default();
                if let Some(r) = r {
                    c.physical.alpha_ratio = Some(*r);
                    c.physical.alpha_over_c_c = None;
                }
                if let Some(d) = d {
                    c.pulse.omega_r0 = Some(*d);
                }
                out.push(c);
            }
        }
        out
    }
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("reading configuration", path, e))?;
    RunConfig::parse(&text, &path.display().to_string())
}

/// Writes the canonical text form of `config`.
pub fn write_config(config: &RunConfig, path: &Path) -> Result<()> {
    std::fs::write(path, config.to_text()).map_err(|e| Error::io("writing configuration", path, e))
}
