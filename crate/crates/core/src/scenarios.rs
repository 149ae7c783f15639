//! Boundary-condition programs for the write / store / retrieve protocol and
//! the named presets.
//!
//! At the cell entrance the probe transition carries the signal followed by
//! the retrieval beam, and the control transition carries the writing beam:
//!
//! ```text
//! Ω_p(0,t) = Ω_p⁰ f(t) e^{i f(t)} + (Ω_r⁰/2) [1 + tanh((t − T_on)/T_s)]
//! Ω_c(0,t) = (Ω_c⁰/2) [1 − tanh((t − T_off)/T_s)]
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result, Violation};
use crate::model::{nondimensionalize, DecayModel, GridSpec, PhysicalConfig, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianLobe {
    pub center: f64,
    /// Standard deviation of `exp(−(t−t₀)²/2σ²)`.
    pub width: f64,
    pub height: f64,
}

impl GaussianLobe {
    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.height * (-0.5 * x * x).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EnvelopeShape {
    Gaussian { center: f64, width: f64 },
    /// Sum of two lobes, rescaled so the maximum is exactly one.
    DoubleGaussian { lobes: [GaussianLobe; 2] },
    /// Uniformly sampled values, linearly interpolated, zero outside.
    Sampled { t0: f64, dt: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseMode {
    None,
    /// The signal carries the phase factor `e^{i f(t)}`.
    FollowsEnvelope,
}

/// Unit-amplitude signal envelope `f(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub shape: EnvelopeShape,
    pub phase_mode: PhaseMode,
    norm: f64,
}

impl Envelope {
    pub fn gaussian(center: f64, width: f64, phase_mode: PhaseMode) -> Self {
        Envelope {
            shape: EnvelopeShape::Gaussian { center, width },
            phase_mode,
            norm: 1.0,
        }
    }

    pub fn double_gaussian(first: GaussianLobe, second: GaussianLobe, phase_mode: PhaseMode) -> Self {
        let lobes = [first, second];
        let raw = |t: f64| lobes[0].eval(t) + lobes[1].eval(t);
        let lo = lobes.iter().map(|l| l.center - 4.0 * l.width).fold(f64::INFINITY, f64::min);
        let hi = lobes.iter().map(|l| l.center + 4.0 * l.width).fold(f64::NEG_INFINITY, f64::max);
        let norm = maximize(raw, lo, hi);
        Envelope {
            shape: EnvelopeShape::DoubleGaussian { lobes },
            phase_mode,
            norm,
        }
    }

    pub fn sampled(t0: f64, dt: f64, values: Vec<f64>, phase_mode: PhaseMode) -> Self {
        Envelope {
            shape: EnvelopeShape::Sampled { t0, dt, values },
            phase_mode,
            norm: 1.0,
        }
    }

    /// The default asymmetric two-peak signal: heights 1.0 / 0.6, centres
    /// 55 / 95 γ⁻¹, widths 12 γ⁻¹, phase following the envelope.
    pub fn default_double() -> Self {
        Envelope::double_gaussian(
            GaussianLobe {
                center: 55.0,
                width: 12.0,
                height: 1.0,
            },
            GaussianLobe {
                center: 95.0,
                width: 12.0,
                height: 0.6,
            },
            PhaseMode::FollowsEnvelope,
        )
    }

    pub fn eval(&self, t: f64) -> f64 {
        envelope_eval(t, self)
    }

    /// Time after which `f` stays below `threshold` (relative to its peak).
    pub fn settle_time(&self, threshold: f64) -> f64 {
        match &self.shape {
            EnvelopeShape::Gaussian { center, width } => {
                center + width * (-2.0 * threshold.ln()).sqrt()
            }
            EnvelopeShape::DoubleGaussian { lobes } => lobes
                .iter()
                .map(|l| l.center + l.width * (2.0 * (l.height / (threshold * self.norm)).ln()).max(0.0).sqrt())
                .fold(f64::NEG_INFINITY, f64::max),
            EnvelopeShape::Sampled { t0, dt, values } => {
                let peak = values.iter().cloned().fold(0.0, f64::max);
                let last = values.iter().rposition(|v| *v >= threshold * peak).unwrap_or(0);
                t0 + (last + 1) as f64 * dt
            }
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        match &self.shape {
            EnvelopeShape::Gaussian { width, .. } if !(*width > 0.0) => {
                v.push(Violation::new("envelope.width", "must be positive"))
            }
            EnvelopeShape::DoubleGaussian { lobes } => {
                for l in lobes {
                    if !(l.width > 0.0) || !(l.height > 0.0) {
                        v.push(Violation::new("envelope.lobes", "widths and heights must be positive"));
                    }
                }
            }
            EnvelopeShape::Sampled { dt, values, .. } => {
                let peak = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(*dt > 0.0) {
                    v.push(Violation::new("envelope.dt", "must be positive"));
                }
                if !(peak > 0.0 && peak <= 1.0) || values.iter().any(|x| *x < 0.0) {
                    v.push(Violation::new("envelope.values", "samples must lie in [0, 1] with a positive maximum"));
                }
            }
            _ => {}
        }
        v
    }
}

/// Golden-section refinement of a dense scan.
fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const N: usize = 4000;
    let h = (hi - lo) / N as f64;
    let best = (0..=N)
        .map(|k| lo + k as f64 * h)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(lo);
    let (mut a, mut b) = (best - h, best + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    f(0.5 * (a + b)).max(f(best))
}

/// `f(t)` for the given envelope; always in `[0, 1]`.
pub fn envelope_eval(t: f64, env: &Envelope) -> f64 {
    match &env.shape {
        EnvelopeShape::Gaussian { center, width } => {
            let x = (t - center) / width;
            (-0.5 * x * x).exp()
        }
        EnvelopeShape::DoubleGaussian { lobes } => {
            ((lobes[0].eval(t) + lobes[1].eval(t)) / env.norm).min(1.0)
        }
        EnvelopeShape::Sampled { t0, dt, values } => {
            if values.is_empty() {
                return 0.0;
            }
            let x = (t - t0) / dt;
            if x < 0.0 || x > (values.len() - 1) as f64 {
                return 0.0;
            }
            let k = (x.floor() as usize).min(values.len() - 1);
            let frac = x - k as f64;
            let next = values.get(k + 1).copied().unwrap_or(values[k]);
            values[k] * (1.0 - frac) + next * frac
        }
    }
}

/// Boundary program for both fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseSpec {
    /// Peak signal amplitude `Ω_p⁰` (γ).
    pub omega_p0: f64,
    /// Writing-beam amplitude `Ω_c⁰` (γ).
    pub omega_c0: f64,
    /// Retrieval-beam amplitude on the probe transition (γ); equal to the
    /// writing amplitude unless overridden.
    pub omega_r0: f64,
    /// Writing-beam switch-off centre (γ⁻¹).
    pub t_off: f64,
    /// Retrieval-beam switch-on centre (γ⁻¹).
    pub t_on: f64,
    /// Switching time scale of both tanh ramps (γ⁻¹).
    pub t_switch: f64,
    /// Global phase added to the signal (rad).
    pub signal_phase: f64,
    pub envelope: Envelope,
}

impl PulseSpec {
    /// Storage interval between the two switching centres.
    pub fn storage_time(&self) -> f64 {
        self.t_on - self.t_off
    }

    /// Signal part of the probe boundary value.
    pub fn signal(&self, t: f64) -> Complex64 {
        let f = envelope_eval(t, &self.envelope);
        let phase = match self.envelope.phase_mode {
            PhaseMode::None => self.signal_phase,
            PhaseMode::FollowsEnvelope => f + self.signal_phase,
        };
        Complex64::from_polar(self.omega_p0 * f, phase)
    }

    pub fn retrieval_drive(&self, t: f64) -> f64 {
        0.5 * self.omega_r0 * (1.0 + ((t - self.t_on) / self.t_switch).tanh())
    }

    pub fn writing_drive(&self, t: f64) -> f64 {
        0.5 * self.omega_c0 * (1.0 - ((t - self.t_off) / self.t_switch).tanh())
    }

    /// Largest of the three drive amplitudes (the signal and the retrieval
    /// beam never overlap appreciably).
    pub fn max_amplitude(&self) -> f64 {
        self.omega_p0.max(self.omega_r0).max(self.omega_c0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = self.envelope.violations();
        for (name, x) in [
            ("omega_p0", self.omega_p0),
            ("omega_c0", self.omega_c0),
            ("omega_r0", self.omega_r0),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                v.push(Violation::new(name, "amplitude must be finite and non-negative"));
            }
        }
        if !(self.t_switch.is_finite() && self.t_switch > 0.0) {
            v.push(Violation::new("t_switch", "switching time must be positive"));
        }
        if !(self.t_on > self.t_off) {
            v.push(Violation::new("t_on, t_off", "t_on must be later than t_off"));
        }
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        if self.omega_c0 > 0.0 && self.omega_p0 > 0.1 * self.omega_c0 {
            log::warn!(
                "signal amplitude {} is not small against the writing beam {}; weak-probe storage assumptions do not hold",
                self.omega_p0,
                self.omega_c0
            );
        }
        Ok(())
    }
}

/// Field values at `ξ = 0`.
pub fn boundary_fields(t: f64, spec: &PulseSpec) -> crate::model::FieldPair {
    crate::model::FieldPair {
        omega_p: spec.signal(t) + spec.retrieval_drive(t),
        omega_c: Complex64::new(spec.writing_drive(t), 0.0),
    }
}

/// A fully populated named configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub physical: PhysicalConfig,
    pub spec: PulseSpec,
    pub params: SimParams,
    /// Free-form notes on chosen values the figures do not pin down.
    pub notes: Vec<String>,
}

/// Optical-depth reduction applied by the `_desk` variants.
pub const DESK_DEPTH_FACTOR: f64 = 4.0;

pub const PRESET_NAMES: [&str; 8] = [
    "fig3",
    "fig7_double_drive",
    "fig8_equal_alpha",
    "fig9_alpha_c_larger",
    "gauss_decay",
    "gauss_plateau",
    "gauss_growth",
    "slow_light_check",
];

/// All accepted preset names, including `_desk` variants.
pub fn preset_names() -> Vec<String> {
    PRESET_NAMES
        .iter()
        .flat_map(|n| [n.to_string(), format!("{n}_desk")])
        .collect()
}

const ALPHA_P: f64 = 30177.0;
const OMEGA_P0: f64 = 0.0265;
const OMEGA_C0: f64 = 2.6526;
const T_OFF: f64 = 140.0;
const T_ON: f64 = 259.0;
const T_SWITCH: f64 = 18.85;
const CELL_M: f64 = 0.04;

fn storage_spec(envelope: Envelope) -> PulseSpec {
    PulseSpec {
        omega_p0: OMEGA_P0,
        omega_c0: OMEGA_C0,
        omega_r0: OMEGA_C0,
        t_off: T_OFF,
        t_on: T_ON,
        t_switch: T_SWITCH,
        signal_phase: 0.0,
        envelope,
    }
}

/// Grid sized by [`crate::propagate::stability_limits`]-style rules for the
/// given total depth, drive and horizon.
fn grid_for(depth: f64, max_omega: f64, t_end: f64) -> GridSpec {
    let d_tau = (0.1 / max_omega.max(1.0)).min(0.05);
    let n_xi = ((10.0 * depth).ceil() as usize).max(200) + 1;
    let n_tau = (t_end / d_tau).round() as usize;
    // about one snapshot every 10 γ⁻¹
    let snapshot_stride = ((10.0 / d_tau).round() as usize).max(1);
    let _ = n_tau;
    GridSpec {
        n_xi,
        d_tau,
        t_end,
        snapshot_stride,
    }
}

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<Preset> {
    let (base, desk) = match name.strip_suffix("_desk") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let mut notes = Vec::new();
    let default_env = Envelope::default_double();
    let gauss_env = Envelope::gaussian(75.0, 15.0, PhaseMode::FollowsEnvelope);

    let (ratio, spec, t_end) = match base {
        "fig3" => (29272.0 / ALPHA_P, storage_spec(default_env), 650.0),
        "fig7_double_drive" => {
            let mut s = storage_spec(default_env);
            s.omega_r0 = 2.0 * OMEGA_C0;
            (29272.0 / ALPHA_P, s, 500.0)
        }
        "fig8_equal_alpha" => (1.0, storage_spec(default_env), 650.0),
        "fig9_alpha_c_larger" => (31082.0 / ALPHA_P, storage_spec(default_env), 650.0),
        "gauss_decay" => (29272.0 / ALPHA_P, storage_spec(gauss_env), 650.0),
        "gauss_plateau" => (1.0, storage_spec(gauss_env), 650.0),
        "gauss_growth" => (31082.0 / ALPHA_P, storage_spec(gauss_env), 650.0),
        "slow_light_check" => {
            let mut s = storage_spec(Envelope::gaussian(60.0, 12.0, PhaseMode::None));
            // writing beam stays on for the whole horizon, no retrieval
            s.t_off = 1.0e4;
            s.t_on = 2.0e4;
            s.omega_r0 = 0.0;
            (29272.0 / ALPHA_P, s, 400.0)
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    if matches!(spec.envelope.shape, EnvelopeShape::DoubleGaussian { .. }) {
        notes.push("double-Gaussian signal: heights 1.0/0.6, centres 55/95, widths 12 (not given in the source figures)".into());
    }

    let depth_factor = if desk { DESK_DEPTH_FACTOR } else { 1.0 };
    if desk {
        notes.push(format!("optical depth reduced {DESK_DEPTH_FACTOR}x, drive amplitudes reduced by its square root"));
    }
    let alpha_over_c_p = ALPHA_P / depth_factor;
    let physical = PhysicalConfig {
        gamma_abs: PhysicalConfig::DEFAULT_GAMMA_ABS,
        cell_length_m: CELL_M,
        alpha_over_c_p,
        alpha_over_c_c: alpha_over_c_p * ratio,
        decay: DecayModel::CouplingScaled,
        grid: grid_for(alpha_over_c_p * CELL_M, spec.max_amplitude(), t_end),
    };
    let spec = if desk { desk_spec(spec, depth_factor) } else { spec };
    spec.validate()?;
    let params = nondimensionalize(&physical)?;
    Ok(Preset {
        name: name.to_string(),
        physical,
        spec,
        params,
        notes,
    })
}

/// Scales every drive amplitude by `1/√factor` so delay and pumping times are
/// unchanged when the depth is reduced by `factor`.
fn desk_spec(mut spec: PulseSpec, factor: f64) -> PulseSpec {
    let s = factor.sqrt().recip();
    spec.omega_p0 *= s;
    spec.omega_c0 *= s;
    spec.omega_r0 *= s;
    spec
}
