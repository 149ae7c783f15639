//! Traveling-wave analysis of the equal-coupling regime.
//!
//! With `s = z − v t` and the retarded-frame time `τ = t − z` (c = 1), a
//! snapshot at fixed `τ` samples the profile at `s = ξ(1 − v) − vτ`.
//! Speeds measured in the retarded frame, `u = dξ/dτ`, convert as
//! `v = u/(1 + u)`.

use std::ops::Range;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagate::{GridSlice, SimulationRecord};
use crate::signal::{cross_correlate, parabolic_offset};

/// Minimum shape correlation for two snapshots to count as one traveling
/// structure.
pub const MIN_CORRELATION: f64 = 0.8;
const EPS: f64 = 1e-12;
/// Fraction of the profile used for each limiting value.
const END_FRACTION: f64 = 0.1;
const END_FLATNESS: f64 = 0.05;
const MAX_DERIVATIVE_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingProfile {
    pub s_grid: Vec<f64>,
    pub omega_p: Vec<Complex64>,
    pub omega_c: Vec<Complex64>,
    pub rho_cb: Vec<Complex64>,
    /// Speed in units of `c`.
    pub v: f64,
    /// Common coupling `A_p = A_c`.
    pub alpha0: f64,
    /// Common relaxation rate entering the profile equations.
    pub gamma: f64,
}

impl TravelingProfile {
    /// Profile of cells `range` of `slice` for speed `v`.
    pub fn from_slice(slice: &GridSlice, range: Range<usize>, v: f64, alpha0: f64, gamma: f64) -> Self {
        let r = range.start.min(slice.xi.len())..range.end.min(slice.xi.len());
        TravelingProfile {
            s_grid: slice.xi[r.clone()].iter().map(|x| x * (1.0 - v) - v * slice.tau).collect(),
            omega_p: slice.fields[r.clone()].iter().map(|f| f.omega_p).collect(),
            omega_c: slice.fields[r.clone()].iter().map(|f| f.omega_c).collect(),
            rho_cb: slice.atoms[r].iter().map(|a| a.rho_cb).collect(),
            v,
            alpha0,
            gamma,
        }
    }

    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    /// Rotates `Ω_p` by `φ_p`, `Ω_c` by `φ_c` and `ρ_cb` by `φ_p − φ_c`.
    pub fn with_phases(&self, phi_p: f64, phi_c: f64) -> Self {
        let rot = |v: &[Complex64], phi: f64| {
            let r = Complex64::from_polar(1.0, phi);
            v.iter().map(|z| z * r).collect()
        };
        TravelingProfile {
            omega_p: rot(&self.omega_p, phi_p),
            omega_c: rot(&self.omega_c, phi_c),
            rho_cb: rot(&self.rho_cb, phi_p - phi_c),
            ..self.clone()
        }
    }

    /// `(1 − v)/(α₀ v)`
    pub fn coupling_factor(&self) -> f64 {
        (1.0 - self.v) / (self.alpha0 * self.v)
    }

    fn check_speed(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v < 1.0) {
            return Err(Error::diagnostic(format!("speed {} outside (0, c)", self.v)));
        }
        Ok(())
    }
}

/// Speed of a traveling structure from consecutive snapshot pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedEstimate {
    /// Mean speed in units of `c`.
    pub v: f64,
    /// Standard deviation of the pair speeds.
    pub uncertainty: f64,
    /// (max − min)/mean of the pair speeds; zero for a static profile.
    pub relative_spread: f64,
    /// Mean retarded-frame speed `dξ/dτ`.
    pub u: f64,
    pub pair_speeds: Vec<f64>,
    /// Shape correlation of each pair after the best shift.
    pub pair_correlations: Vec<f64>,
}

/// Best shift `k` (in cells, sub-cell refined) such that `b[j] ≈ a[j − k]`,
/// scored by the Pearson correlation over the overlap. Shifts are limited
/// to half the profile length.
pub fn best_shift(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let n = a.len().min(b.len());
    if n < 4 {
        return None;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let prefix = |x: &[f64], sq: bool| {
        let mut p = vec![0.0; n + 1];
        for (i, v) in x.iter().enumerate() {
            p[i + 1] = p[i] + if sq { v * v } else { *v };
        }
        p
    };
    let (pa, paa, pb, pbb) = (prefix(a, false), prefix(a, true), prefix(b, false), prefix(b, true));
    // c[L] = Σ a[m] b[m − L]; we need Σ_j a[j] b[j + k] = c[−k]
    let c = cross_correlate(a, b);
    let corr_at = |k: isize| -> Option<f64> {
        let j0 = 0isize.max(-k) as usize;
        let j1 = (n as isize).min(n as isize - k) as usize;
        let m = (j1 - j0) as f64;
        let (sa, saa) = (pa[j1] - pa[j0], paa[j1] - paa[j0]);
        let (b0, b1) = ((j0 as isize + k) as usize, (j1 as isize + k) as usize);
        let (sb, sbb) = (pb[b1] - pb[b0], pbb[b1] - pbb[b0]);
        let sab = c[(n as isize - 1 - k) as usize];
        let va = saa - sa * sa / m;
        let vb = sbb - sb * sb / m;
        let scale = saa.max(sbb).max(f64::MIN_POSITIVE);
        if va <= 1e-12 * scale || vb <= 1e-12 * scale {
            return None;
        }
        Some(((sab - sa * sb / m) / (va * vb).sqrt()).clamp(-1.0, 1.0))
    };
    let kmax = (n / 2) as isize;
    let mut best: Option<(isize, f64)> = None;
    for k in -kmax..=kmax {
        if let Some(r) = corr_at(k) {
            if best.map_or(true, |(_, b)| r > b) {
                best = Some((k, r));
            }
        }
    }
    let (k, r) = best?;
    let frac = match (corr_at(k - 1), corr_at(k + 1)) {
        (Some(lo), Some(hi)) => parabolic_offset(lo, r, hi),
        _ => 0.0,
    };
    Some((k as f64 + frac, r))
}

/// Speed from `|Ω_c|` profiles of consecutive slices.
pub fn estimate_speed_slices(slices: &[&GridSlice]) -> Result<SpeedEstimate> {
    if slices.len() < 2 {
        return Err(Error::diagnostic("speed estimate needs at least two snapshots"));
    }
    let mut speeds = Vec::new();
    let mut corrs = Vec::new();
    for w in slices.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let a: Vec<f64> = s0.fields.iter().map(|f| f.omega_c.norm()).collect();
        let b: Vec<f64> = s1.fields.iter().map(|f| f.omega_c.norm()).collect();
        let (k, r) = best_shift(&a, &b).ok_or_else(|| Error::diagnostic("no traveling structure: flat profile"))?;
        if r < MIN_CORRELATION {
            return Err(Error::diagnostic(format!(
                "no traveling structure: correlation {r:.3} between tau = {:.2} and {:.2}",
                s0.tau, s1.tau
            )));
        }
        let dxi = s0.xi[1] - s0.xi[0];
        speeds.push(k * dxi / (s1.tau - s0.tau));
        corrs.push(r);
    }
    let n = speeds.len() as f64;
    let u = speeds.iter().sum::<f64>() / n;
    let pair_speeds: Vec<f64> = speeds.iter().map(|u| u / (1.0 + u)).collect();
    let v = pair_speeds.iter().sum::<f64>() / n;
    let var = pair_speeds.iter().map(|x| (x - v).powi(2)).sum::<f64>() / n;
    let (lo, hi) = pair_speeds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
    Ok(SpeedEstimate {
        v,
        uncertainty: var.sqrt(),
        relative_spread: if v != 0.0 { (hi - lo) / v.abs() } else { hi - lo },
        u,
        pair_speeds,
        pair_correlations: corrs,
    })
}

/// Speed over snapshots `window` of `record`.
pub fn estimate_speed(record: &SimulationRecord, window: Range<usize>) -> Result<SpeedEstimate> {
    let slices: Vec<&GridSlice> = record.snapshots.get(window).unwrap_or(&[]).iter().collect();
    estimate_speed_slices(&slices)
}

/// A relative residual; `degenerate` marks the all-below-ε case reported
/// as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub degenerate: bool,
}

fn l2(x: impl Iterator<Item = Complex64>) -> f64 {
    x.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖ρ_cb + ((1−v)/(α₀v)) Ω_p Ω_c*‖₂ / max(‖ρ_cb‖₂, ε)`.
pub fn coherence_relation_residual(profile: &TravelingProfile) -> Result<Residual> {
    profile.check_speed()?;
    let k = profile.coupling_factor();
    let predicted = || {
        profile
            .omega_p
            .iter()
            .zip(&profile.omega_c)
            .map(move |(p, c)| -k * p * c.conj())
    };
    let n_rho = l2(profile.rho_cb.iter().copied());
    if n_rho < EPS && l2(predicted()) < EPS {
        return Ok(Residual {
            value: 0.0,
            degenerate: true,
        });
    }
    let diff = l2(profile.rho_cb.iter().zip(predicted()).map(|(r, q)| r - q));
    Ok(Residual {
        value: diff / n_rho.max(EPS),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitValues {
    /// `|Ω_p|` averaged over the leading (`s → −∞`) segment.
    pub omega_p_inf: f64,
    /// `|Ω_c|` averaged over the trailing (`s → +∞`) segment.
    pub omega_c_inf: f64,
}

/// Limiting amplitudes from the first and last 10 % of the profile; both
/// segments must vary by less than 5 %.
pub fn limit_values(profile: &TravelingProfile) -> Result<LimitValues> {
    let n = profile.len();
    if n < 2 {
        return Err(Error::diagnostic("limits undefined: profile too short"));
    }
    let m = ((n as f64 * END_FRACTION).ceil() as usize).clamp(1, n);
    let settled = |x: Vec<f64>| -> Option<f64> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        (mean > 0.0 && (hi - lo) <= END_FLATNESS * mean || hi == 0.0).then_some(mean)
    };
    let p = settled(profile.omega_p[..m].iter().map(|z| z.norm()).collect());
    let c = settled(profile.omega_c[n - m..].iter().map(|z| z.norm()).collect());
    match (p, c) {
        (Some(omega_p_inf), Some(omega_c_inf)) => Ok(LimitValues {
            omega_p_inf,
            omega_c_inf,
        }),
        _ => Err(Error::diagnostic("limits undefined: profile ends are not settled")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRule {
    pub value: f64,
    pub limits: LimitValues,
    /// Set for `v = c`, where the left side vanishes identically.
    pub degenerate: bool,
}

/// `((1−v)/(α₀v)) (|Ω_p^∞|² + |Ω_c^∞|²)`, expected to equal 2.
pub fn limit_sum_rule(profile: &TravelingProfile) -> Result<SumRule> {
    if !(profile.v > 0.0 && profile.v <= 1.0) {
        return Err(Error::diagnostic(format!("speed {} outside (0, c]", profile.v)));
    }
    let limits = limit_values(profile)?;
    let degenerate = profile.v == 1.0;
    let value = if degenerate {
        0.0
    } else {
        profile.coupling_factor() * (limits.omega_p_inf.powi(2) + limits.omega_c_inf.powi(2))
    };
    Ok(SumRule {
        value,
        limits,
        degenerate,
    })
}

/// Which field the unsubscripted derivative of the second profile equation
/// refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum DerivativeReading {
    #[default]
    OmegaP,
    OmegaC,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeResidual {
    pub first: f64,
    pub second: f64,
    /// Largest relative disagreement between fourth- and second-order
    /// derivative estimates.
    pub derivative_noise: f64,
    pub reading: DerivativeReading,
    pub degenerate: bool,
}

struct Derivatives {
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    d3: Vec<Complex64>,
    noise: f64,
}

/// Central differences on interior points `3..n−3`, fourth order, plus the
/// relative gap to the second-order formulas.
fn derivatives(f: &[Complex64], h: f64) -> Derivatives {
    let n = f.len();
    let mut d = Derivatives {
        d1: Vec::new(),
        d2: Vec::new(),
        d3: Vec::new(),
        noise: 0.0,
    };
    let (mut e1, mut e2, mut e3, mut n1, mut n2, mut n3) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 3..n.saturating_sub(3) {
        let g = |k: isize| f[(j as isize + k) as usize];
        let d1 = (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * h);
        let d2 = (-g(2) + 16.0 * g(1) - 30.0 * g(0) + 16.0 * g(-1) - g(-2)) / (12.0 * h * h);
        let d3 = (-g(3) + 8.0 * g(2) - 13.0 * g(1) + 13.0 * g(-1) - 8.0 * g(-2) + g(-3)) / (8.0 * h.powi(3));
        let l1 = (g(1) - g(-1)) / (2.0 * h);
        let l2 = (g(1) - 2.0 * g(0) + g(-1)) / (h * h);
        let l3 = (g(2) - 2.0 * g(1) + 2.0 * g(-1) - g(-2)) / (2.0 * h.powi(3));
        e1 += (d1 - l1).norm_sqr();
        e2 += (d2 - l2).norm_sqr();
        e3 += (d3 - l3).norm_sqr();
        n1 += d1.norm_sqr();
        n2 += d2.norm_sqr();
        n3 += d3.norm_sqr();
        d.d1.push(d1);
        d.d2.push(d2);
        d.d3.push(d3);
    }
    let rel = |e: f64, n: f64| if n > 0.0 { (e / n).sqrt() } else { 0.0 };
    d.noise = rel(e1, n1).max(rel(e2, n2)).max(rel(e3, n3));
    d
}

/// Residuals of the two profile equations, each relative to the norm of
/// its largest individual term.
pub fn soliton_ode_residual(profile: &TravelingProfile, reading: DerivativeReading) -> Result<OdeResidual> {
    profile.check_speed()?;
    let n = profile.len();
    if n < 8 {
        return Err(Error::diagnostic("grid too coarse: fewer than 8 profile points"));
    }
    let scale = profile
        .omega_p
        .iter()
        .chain(&profile.omega_c)
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if scale < EPS {
        return Ok(OdeResidual {
            first: 0.0,
            second: 0.0,
            derivative_noise: 0.0,
            reading,
            degenerate: true,
        });
    }
    let h = (profile.s_grid[n - 1] - profile.s_grid[0]) / (n - 1) as f64;
    let dp = derivatives(&profile.omega_p, h);
    let cc: Vec<Complex64> = profile.omega_c.iter().map(|z| z.conj()).collect();
    let dc = derivatives(&cc, h);
    let intensity: Vec<Complex64> = profile
        .omega_p
        .iter()
        .zip(&profile.omega_c)
        .map(|(p, c)| Complex64::new(p.norm_sqr() + c.norm_sqr(), 0.0))
        .collect();
    let di = derivatives(&intensity, h);
    let dc_plain = derivatives(&profile.omega_c, h);
    let noise = dp.noise.max(dc.noise);
    if noise > MAX_DERIVATIVE_NOISE {
        return Err(Error::diagnostic(format!(
            "grid too coarse: derivative noise {noise:.3} exceeds {MAX_DERIVATIVE_NOISE}"
        )));
    }

    let limits = limit_values(profile)?;
    let p_inf2 = limits.omega_p_inf.powi(2);
    let (v, g, a0) = (profile.v, profile.gamma, profile.alpha0);

    let mut t1 = vec![Vec::new(); 5];
    let mut t2 = vec![Vec::new(); 8];
    for (i, j) in (3..n - 3).enumerate() {
        let p = profile.omega_p[j];
        let c = cc[j];
        t1[0].push(v * p * dc.d2[i]);
        t1[1].push(-v * c * dp.d2[i]);
        t1[2].push(-g * p * dc.d1[i]);
        t1[3].push(g * c * dp.d1[i]);
        t1[4].push(p * c * (p_inf2 / v - a0 / (1.0 - v)));

        let d_omega = match reading {
            DerivativeReading::OmegaP => dp.d1[i],
            DerivativeReading::OmegaC => dc_plain.d1[i],
        };
        let total = p.norm_sqr() + profile.omega_c[j].norm_sqr();
        t2[0].push(-v * p * dp.d3[i]);
        t2[1].push(g * p * dp.d2[i]);
        t2[2].push(d_omega * v * dp.d2[i]);
        t2[3].push(-d_omega * g * dp.d1[i]);
        t2[4].push(2.0 * g * p * dp.d2[i]);
        t2[5].push(-(2.0 * g * g / v) * p * dp.d1[i]);
        t2[6].push(-(2.0 / v) * p * p * di.d1[i]);
        t2[7].push(-(g / (v * v)) * p * p * (p_inf2 - total));
    }
    let rel = |terms: &[Vec<Complex64>]| {
        let largest = terms.iter().map(|t| l2(t.iter().copied())).fold(0.0, f64::max);
        if largest < EPS {
            return 0.0;
        }
        let sum = (0..terms[0].len()).map(|i| terms.iter().map(|t| t[i]).sum::<Complex64>());
        l2(sum) / largest
    };
    Ok(OdeResidual {
        first: rel(&t1),
        second: rel(&t2),
        derivative_noise: noise,
        reading,
        degenerate: false,
    })
}

/// `α_p = α_c` up to rounding.
pub fn is_equal_coupling(params: &crate::model::SimParams) -> bool {
    (params.alpha_p - params.alpha_c).abs() <= 1e-9 * params.alpha_p.abs().max(params.alpha_c.abs())
}

/// Position of the retrieval front (first cell where `|Ω_p|` falls below
/// half the retrieval amplitude) as a fraction of the cell length.
pub fn front_fraction(slice: &GridSlice, omega_r0: f64) -> Option<f64> {
    let l = *slice.xi.last()?;
    slice
        .fields
        .iter()
        .position(|f| f.omega_p.norm() < 0.5 * omega_r0)
        .map(|j| slice.xi[j] / l)
}

/// Snapshots whose retrieval front lies in the downstream part
/// `[0.65, 0.85]` of the cell, where the structure has had time to form.
pub fn late_window(record: &SimulationRecord) -> Range<usize> {
    let inside = |s: &GridSlice| {
        front_fraction(s, record.spec.omega_r0).is_some_and(|f| (0.65..=0.85).contains(&f)) && s.tau > record.spec.t_on
    };
    let first = record.snapshots.iter().position(inside);
    match first {
        Some(a) => {
            let b = record.snapshots[a..].iter().position(|s| !inside(s)).map_or(record.snapshots.len(), |k| a + k);
            a..b
        }
        None => 0..0,
    }
}

/// Max |Δ|Ω_c|| between the late profiles of two equal-coupling runs, after
/// the best alignment, normalized by the larger peak.
pub fn seed_independence_check(a: &SimulationRecord, b: &SimulationRecord) -> Result<f64> {
    if !is_equal_coupling(&a.params) || !is_equal_coupling(&b.params) {
        return Err(Error::diagnostic("precondition unmet: both runs need alpha_p = alpha_c"));
    }
    let same_drive = a.spec.omega_r0 == b.spec.omega_r0
        && a.spec.t_on == b.spec.t_on
        && a.spec.t_switch == b.spec.t_switch;
    let same_params = SimParamsKey::from(&a.params) == SimParamsKey::from(&b.params);
    if !same_drive || !same_params {
        return Err(Error::diagnostic("precondition unmet: runs differ in parameters or retrieval drive"));
    }
    let wa = late_window(a);
    let wb = late_window(b);
    estimate_speed(a, wa.clone())?;
    estimate_speed(b, wb.clone())?;
    // latest snapshot time inside both windows
    let tau = a.snapshots[wa.clone()]
        .iter()
        .map(|s| s.tau)
        .filter(|t| b.snapshots[wb.clone()].iter().any(|s| (s.tau - t).abs() < 1e-9))
        .fold(f64::NEG_INFINITY, f64::max);
    if !tau.is_finite() {
        return Err(Error::diagnostic("no common snapshot in the traveling regime"));
    }
    let (sa, sb) = (a.snapshot_near(tau).unwrap(), b.snapshot_near(tau).unwrap());
    let pa: Vec<f64> = sa.fields.iter().map(|f| f.omega_c.norm()).collect();
    let pb: Vec<f64> = sb.fields.iter().map(|f| f.omega_c.norm()).collect();
    Ok(aligned_difference(&pa, &pb))
}

/// Identity of the fields that matter for comparing two runs.
#[derive(PartialEq)]
struct SimParamsKey([u64; 8]);

impl From<&crate::model::SimParams> for SimParamsKey {
    fn from(p: &crate::model::SimParams) -> Self {
        SimParamsKey([
            p.alpha_p.to_bits(),
            p.alpha_c.to_bits(),
            p.gamma_ab.to_bits(),
            p.gamma_ca.to_bits(),
            p.cell_length.to_bits(),
            p.n_xi as u64,
            p.d_tau.to_bits(),
            p.snapshot_stride as u64,
        ])
    }
}

/// L∞ difference of `a` and `b` over their overlap after the best integer
/// alignment, normalized by the larger peak.
pub fn aligned_difference(a: &[f64], b: &[f64]) -> f64 {
    let peak = a.iter().chain(b).cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let k = best_shift(a, b).map_or(0, |(k, _)| k.round() as isize);
    let n = a.len().min(b.len()) as isize;
    (0.max(-k)..n.min(n - k))
        .map(|j| (a[j as usize] - b[(j + k) as usize]).abs())
        .fold(0.0, f64::max)
        / peak
}

fn keep<T>(notes: &mut Vec<String>, name: &str, r: Result<T>) -> Option<T> {
    r.map_err(|e| notes.push(format!("{name}: {e}"))).ok()
}

/// Soliton diagnostics for an equal-coupling record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonReport {
    pub window_taus: Vec<f64>,
    pub speed: SpeedEstimate,
    /// Snapshot time of the analysed profile.
    pub profile_tau: f64,
    pub coherence_residual: Residual,
    pub sum_rule: Option<SumRule>,
    pub ode_residual: Option<OdeResidual>,
    pub ode_residual_alt: Option<OdeResidual>,
    pub notes: Vec<String>,
}

/// Runs the traveling-wave checks on the middle snapshot of the late window.
pub fn analyze_soliton(record: &SimulationRecord) -> Result<SolitonReport> {
    if !is_equal_coupling(&record.params) {
        return Err(Error::diagnostic("precondition unmet: alpha_p != alpha_c"));
    }
    let w = late_window(record);
    let speed = estimate_speed(record, w.clone())?;
    let mid = &record.snapshots[(w.start + w.end) / 2];
    let profile = TravelingProfile::from_slice(
        mid,
        0..mid.xi.len(),
        speed.v,
        record.params.alpha_p,
        record.params.gamma_ab,
    );
    let mut notes = Vec::new();
    let sum_rule = keep(&mut notes, "sum_rule", limit_sum_rule(&profile));
    let coherence_residual = coherence_relation_residual(&profile)?;
    let ode_residual = keep(
        &mut notes,
        "ode_residual",
        soliton_ode_residual(&profile, DerivativeReading::OmegaP),
    );
    let ode_residual_alt = keep(
        &mut notes,
        "ode_residual_alt",
        soliton_ode_residual(&profile, DerivativeReading::OmegaC),
    );
    Ok(SolitonReport {
        window_taus: record.snapshots[w].iter().map(|s| s.tau).collect(),
        speed,
        profile_tau: mid.tau,
        coherence_residual,
        sum_rule,
        ode_residual,
        ode_residual_alt,
        notes,
    })
}
