//! Maxwell–Bloch propagation in the retarded frame `ξ = z`, `τ = t − z/c`.
//!
//! In this frame the field equations lose their time derivative,
//!
//! ```text
//! ∂Ω_p/∂ξ = i A_p ρ_ab,    ∂Ω_c/∂ξ = i A_c ρ_ac,
//! ```
//!
//! so at any instant the fields are a prefix integral of the local
//! coherences, starting from the analytic boundary value at `ξ = 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bloch::{bloch_rhs, rk4_from_slope, rk4_step, AtomicDerivative};
use crate::error::{Error, Result};
use crate::model::{validate, AtomicState, FieldPair, SimParams};
use crate::scenarios::{boundary_fields, PulseSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const MIN_PAR_LEN: usize = 2048;
/// Largest tolerated modulus of any density-matrix element.
pub const INSTABILITY_BOUND: f64 = 1.0 + 1e-3;

/// Full state of the medium at one retarded time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSlice {
    pub tau: f64,
    pub xi: Vec<f64>,
    pub atoms: Vec<AtomicState>,
    pub fields: Vec<FieldPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON of parameters and pulse program.
    pub config_hash: String,
    pub code_version: String,
}

impl Provenance {
    pub fn for_run(params: &SimParams, spec: &PulseSpec) -> Self {
        let canonical = serde_json::to_string(&(params, spec)).unwrap_or_default();
        Provenance {
            config_hash: hex::encode(Sha256::digest(canonical.as_bytes())),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Sampled space-time history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    pub params: SimParams,
    pub spec: PulseSpec,
    /// Retarded times of the boundary and exit samples.
    pub taus: Vec<f64>,
    pub boundary_series: Vec<FieldPair>,
    pub exit_series: Vec<FieldPair>,
    pub snapshots: Vec<GridSlice>,
    pub provenance: Provenance,
    /// Set when the run stopped early on a numerical instability.
    pub aborted: bool,
}

impl SimulationRecord {
    /// Index of the first sample at or after `tau`.
    pub fn index_at(&self, tau: f64) -> usize {
        self.taus.partition_point(|t| *t < tau - 1e-9)
    }

    pub fn exit_p(&self) -> Vec<Complex64> {
        self.exit_series.iter().map(|f| f.omega_p).collect()
    }

    pub fn exit_c(&self) -> Vec<Complex64> {
        self.exit_series.iter().map(|f| f.omega_c).collect()
    }

    /// Snapshot closest to `tau`.
    pub fn snapshot_near(&self, tau: f64) -> Option<&GridSlice> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.tau - tau).abs().total_cmp(&(b.tau - tau).abs()))
    }
}

/// Receives snapshots while a run is in progress.
pub trait SnapshotSink {
    fn snapshot(&mut self, slice: &GridSlice);
}

impl<F: FnMut(&GridSlice)> SnapshotSink for F {
    fn snapshot(&mut self, slice: &GridSlice) {
        self(slice)
    }
}

/// Sink that drops everything.
pub struct Discard;

impl SnapshotSink for Discard {
    fn snapshot(&mut self, _: &GridSlice) {}
}

/// Time-stepping strategy for the coupled atom–field system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Scheme {
    /// Within each step, cells are advanced in order of increasing `ξ`; the
    /// end-of-step field of a cell comes from the trapezoidal march using
    /// the already-updated upstream cell and is solved together with the
    /// cell's own RK4 update. Stable for any `d_tau · A · l`.
    #[default]
    CausalSweep,
    /// Classical RK4 on all cells at once, re-marching the fields from the
    /// stage coherences at every stage. Fourth order in `τ`, but only stable
    /// while `d_tau · A · l` is of order one.
    MethodOfLines,
    /// Per-cell RK4 with frozen interior fields, then one corrector pass
    /// driven by the midpoint fields of the averaged coherences.
    PredictorCorrector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub scheme: Scheme,
    /// Store snapshots in the returned record (they are always passed to
    /// the sink).
    pub keep_snapshots: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            scheme: Scheme::CausalSweep,
            keep_snapshots: true,
        }
    }
}

/// Fields along the grid obtained by trapezoidal integration of
/// `(ρ_ab, ρ_ac)` from the boundary value.
pub fn field_march(
    coherences: &[(Complex64, Complex64)],
    boundary: FieldPair,
    params: &SimParams,
) -> Vec<FieldPair> {
    let mut out = vec![FieldPair::zero(); coherences.len()];
    march_with(coherences.len(), |j| coherences[j], boundary, params, &mut out);
    out
}

#[inline]
fn march_with(
    n: usize,
    coh: impl Fn(usize) -> (Complex64, Complex64),
    boundary: FieldPair,
    params: &SimParams,
    out: &mut [FieldPair],
) {
    if n == 0 {
        return;
    }
    let dxi = params.cell_length / (n.max(2) - 1) as f64;
    let hp = I * (0.5 * params.alpha_p * dxi);
    let hc = I * (0.5 * params.alpha_c * dxi);
    out[0] = boundary;
    let (mut ab, mut ac) = coh(0);
    let mut acc = boundary;
    for j in 1..n {
        let (ab1, ac1) = coh(j);
        acc.omega_p += hp * (ab + ab1);
        acc.omega_c += hc * (ac + ac1);
        out[j] = acc;
        ab = ab1;
        ac = ac1;
    }
}

fn march_atoms(atoms: &[AtomicState], boundary: FieldPair, params: &SimParams, out: &mut [FieldPair]) {
    march_with(atoms.len(), |j| (atoms[j].rho_ab, atoms[j].rho_ac()), boundary, params, out);
}

/// Recommended resolution for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityAdvice {
    pub d_tau: f64,
    pub n_xi: usize,
    pub rationale: Vec<String>,
}

pub const DEFAULT_D_TAU: f64 = 0.05;
pub const DEFAULT_N_XI: usize = 201;

/// Step-size rules: `d_tau ≤ 0.1 / max(γ_ab, γ_ca, |Ω|_max)` and
/// `A Δξ max|ρ_coh| ≤ 0.1` with the coherence bounded by one.
pub fn stability_limits(params: &SimParams, spec: &PulseSpec) -> StabilityAdvice {
    let mut rationale = Vec::new();
    let omega_max = spec.max_amplitude();
    let rate = params.gamma_ab.max(params.gamma_ca).max(omega_max);
    let mut d_tau = DEFAULT_D_TAU;
    if rate > 0.0 && 0.1 / rate < d_tau {
        d_tau = 0.1 / rate;
        rationale.push(format!(
            "d_tau <= 0.1/{rate:.4} = {d_tau:.4} resolves the fastest rate (decay or Rabi)"
        ));
    }
    let a_max = params.alpha_p.max(params.alpha_c);
    let mut n_xi = DEFAULT_N_XI;
    if a_max > 0.0 {
        let intervals = (a_max * params.cell_length / 0.1).ceil() as usize;
        if intervals + 1 > n_xi {
            n_xi = intervals + 1;
            rationale.push(format!(
                "n_xi >= {n_xi} keeps A*dxi*max|rho| <= 0.1 for total depth {:.1}",
                a_max * params.cell_length
            ));
        }
    }
    if rationale.is_empty() {
        rationale.push("no binding constraint; defaults".into());
    }
    StabilityAdvice {
        d_tau,
        n_xi,
        rationale,
    }
}

/// Runs a simulation with default options.
pub fn integrate(
    spec: &PulseSpec,
    params: &SimParams,
    sink: &mut dyn SnapshotSink,
) -> Result<SimulationRecord> {
    integrate_with(spec, params, IntegrateOptions::default(), sink)
}

/// Runs a simulation from the standard initial condition (all atoms in
/// `|b⟩`) for `n_tau − 1` steps.
pub fn integrate_with(
    spec: &PulseSpec,
    params: &SimParams,
    options: IntegrateOptions,
    sink: &mut dyn SnapshotSink,
) -> Result<SimulationRecord> {
    let params = validate(*params)?;
    spec.validate()?;
    let mut solver = Solver::new(spec, &params);
    let n = params.n_xi;
    let xi = params.xi_grid();

    let mut record = SimulationRecord {
        params,
        spec: spec.clone(),
        taus: Vec::with_capacity(params.n_tau),
        boundary_series: Vec::with_capacity(params.n_tau),
        exit_series: Vec::with_capacity(params.n_tau),
        snapshots: Vec::new(),
        provenance: Provenance::for_run(&params, spec),
        aborted: false,
    };

    let mut emit = |step: usize, solver: &Solver, record: &mut SimulationRecord| {
        let tau = params.tau_at(step);
        record.taus.push(tau);
        record.boundary_series.push(solver.fields[0]);
        record.exit_series.push(solver.fields[n - 1]);
        if step % params.snapshot_stride == 0 {
            let slice = GridSlice {
                tau,
                xi: xi.clone(),
                atoms: solver.y.clone(),
                fields: solver.fields.clone(),
            };
            sink.snapshot(&slice);
            if options.keep_snapshots {
                record.snapshots.push(slice);
            }
        }
    };

    emit(0, &solver, &mut record);
    for step in 1..params.n_tau {
        let t = params.tau_at(step - 1);
        match options.scheme {
            Scheme::CausalSweep => solver.step_sweep(t),
            Scheme::MethodOfLines => solver.step_lines(t),
            Scheme::PredictorCorrector => solver.step_corrected(t),
        }
        if let Some(j) = solver.first_unstable() {
            let s = solver.y[j];
            let reason = if s.is_finite() {
                format!("density-matrix element of modulus {:.6} exceeds bound", s.max_abs())
            } else {
                "non-finite density matrix".to_string()
            };
            record.aborted = true;
            return Err(Error::Instability {
                xi: xi[j],
                tau: params.tau_at(step),
                reason,
                partial: Some(Box::new(record)),
            });
        }
        emit(step, &solver, &mut record);
    }
    Ok(record)
}

struct Solver<'a> {
    spec: &'a PulseSpec,
    params: &'a SimParams,
    y: Vec<AtomicState>,
    stage: Vec<AtomicState>,
    acc: Vec<AtomicDerivative>,
    /// Fields consistent with `y` at the current time.
    fields: Vec<FieldPair>,
    work: Vec<FieldPair>,
    work2: Vec<FieldPair>,
    /// Fields one step back, for the midpoint interpolation of the sweep.
    previous: Option<Vec<FieldPair>>,
}

impl<'a> Solver<'a> {
    fn new(spec: &'a PulseSpec, params: &'a SimParams) -> Self {
        let n = params.n_xi;
        let y = vec![AtomicState::ground(); n];
        let mut fields = vec![FieldPair::zero(); n];
        march_atoms(&y, boundary_fields(0.0, spec), params, &mut fields);
        Solver {
            spec,
            params,
            stage: y.clone(),
            y,
            acc: vec![AtomicDerivative::default(); n],
            fields,
            work: vec![FieldPair::zero(); n],
            work2: vec![FieldPair::zero(); n],
            previous: None,
        }
    }

    fn first_unstable(&self) -> Option<usize> {
        self.y
            .iter()
            .position(|s| !s.is_finite() || s.max_abs() > INSTABILITY_BOUND)
    }

    /// One step of the causal sweep.
    ///
    /// The midpoint field of interior cells is the quadratic interpolant
    /// through the previous, current and new samples (linear on the first
    /// step); the coupled cell/field update is resolved by a fixed number
    /// of fixed-point passes starting from an Euler guess.
    fn step_sweep(&mut self, t: f64) {
        const PASSES: usize = 2;
        let h = self.params.d_tau;
        let p = *self.params;
        let n = self.y.len();
        let dxi = p.cell_length / (n - 1) as f64;
        let hp = I * (0.5 * p.alpha_p * dxi);
        let hc = I * (0.5 * p.alpha_c * dxi);
        let b_mid = boundary_fields(t + 0.5 * h, self.spec);
        let b_end = boundary_fields(t + h, self.spec);

        let new_y = &mut self.stage;
        let new_f = &mut self.work;
        let (y, f) = (&self.y, &self.fields);
        let prev = self.previous.as_deref();
        let mid = |j: usize, f1: &FieldPair| -> FieldPair {
            match prev {
                Some(fp) => FieldPair {
                    omega_p: 0.375 * f1.omega_p + 0.75 * f[j].omega_p - 0.125 * fp[j].omega_p,
                    omega_c: 0.375 * f1.omega_c + 0.75 * f[j].omega_c - 0.125 * fp[j].omega_c,
                },
                None => f[j].midpoint(f1),
            }
        };

        let k1 = bloch_rhs(&y[0], &f[0], &p);
        new_y[0] = rk4_from_slope(&y[0], &k1, &b_mid, &b_end, h, &p);
        new_f[0] = b_end;
        for j in 1..n {
            let up = new_f[j - 1];
            let (up_ab, up_ac) = (new_y[j - 1].rho_ab, new_y[j - 1].rho_ac());
            let field_for = |s: &AtomicState| FieldPair {
                omega_p: up.omega_p + hp * (up_ab + s.rho_ab),
                omega_c: up.omega_c + hc * (up_ac + s.rho_ac()),
            };
            let k1 = bloch_rhs(&y[j], &f[j], &p);
            let mut guess = y[j].advanced(&k1, h);
            for _ in 0..PASSES {
                let f1 = field_for(&guess);
                guess = rk4_from_slope(&y[j], &k1, &mid(j, &f1), &f1, h, &p);
            }
            new_f[j] = field_for(&guess);
            new_y[j] = guess;
        }

        std::mem::swap(&mut self.y, &mut self.stage);
        let old = std::mem::replace(&mut self.fields, std::mem::take(&mut self.work));
        self.work = match self.previous.replace(old) {
            Some(v) => v,
            None => vec![FieldPair::zero(); n],
        };
    }

    /// One RK4 step of the whole grid.
    fn step_lines(&mut self, t: f64) {
        let h = self.params.d_tau;
        let p = *self.params;
        let b_mid = boundary_fields(t + 0.5 * h, self.spec);
        let b_end = boundary_fields(t + h, self.spec);

        // stage 1 uses the fields already consistent with y
        (&mut self.acc, &mut self.stage, &self.y, &self.fields)
            .into_par_iter()
            .with_min_len(MIN_PAR_LEN)
            .for_each(|(acc, stage, y, f)| {
                let k = bloch_rhs(y, f, &p);
                *acc = k;
                *stage = y.advanced(&k, 0.5 * h);
            });

        for (weight, next, boundary) in [(2.0, 0.5 * h, b_mid), (2.0, h, b_mid)] {
            march_atoms(&self.stage, boundary, &p, &mut self.work);
            (&mut self.acc, &mut self.stage, &self.y, &self.work)
                .into_par_iter()
                .with_min_len(MIN_PAR_LEN)
                .for_each(|(acc, stage, y, f)| {
                    let k = bloch_rhs(stage, f, &p);
                    *acc = acc.add_scaled(&k, weight);
                    *stage = y.advanced(&k, next);
                });
        }

        march_atoms(&self.stage, b_end, &p, &mut self.work);
        (&mut self.y, &self.acc, &self.stage, &self.work)
            .into_par_iter()
            .with_min_len(MIN_PAR_LEN)
            .for_each(|(y, acc, stage, f)| {
                let k = bloch_rhs(stage, f, &p);
                *y = y.advanced(&acc.add_scaled(&k, 1.0), h / 6.0);
            });

        march_atoms(&self.y, b_end, &p, &mut self.fields);
    }

    /// Frozen-field predictor followed by one midpoint corrector.
    fn step_corrected(&mut self, t: f64) {
        let h = self.params.d_tau;
        let p = *self.params;
        let b0 = boundary_fields(t, self.spec);
        let b_mid = boundary_fields(t + 0.5 * h, self.spec);
        let b_end = boundary_fields(t + h, self.spec);

        let cell = |j: usize, y: &AtomicState, f0: &FieldPair, fm: &FieldPair, f1: &FieldPair| {
            let r = if j == 0 {
                rk4_step(y, &b0, &b_mid, &b_end, h, &p)
            } else {
                rk4_step(y, f0, fm, f1, h, &p)
            };
            r.unwrap_or(AtomicState {
                rho_bb: f64::NAN,
                ..*y
            })
        };

        // predictor
        (&mut self.stage, &self.y, &self.fields)
            .into_par_iter()
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(j, (stage, y, f))| *stage = cell(j, y, f, f, f));
        march_atoms(&self.stage, b_end, &p, &mut self.work);

        // midpoint fields from the averaged coherences
        {
            let (y, stage) = (&self.y, &self.stage);
            march_with(
                y.len(),
                |j| {
                    (
                        0.5 * (y[j].rho_ab + stage[j].rho_ab),
                        0.5 * (y[j].rho_ac() + stage[j].rho_ac()),
                    )
                },
                b_mid,
                &p,
                &mut self.work2,
            );
        }

        // corrector
        (&mut self.stage, &self.y, &self.fields, &self.work2, &self.work)
            .into_par_iter()
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(j, (stage, y, f0, fm, f1))| *stage = cell(j, y, f0, fm, f1));
        std::mem::swap(&mut self.y, &mut self.stage);
        march_atoms(&self.y, b_end, &p, &mut self.fields);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{preset, Envelope, PhaseMode};
    use approx::assert_relative_eq;

    fn params(alpha: f64, n_xi: usize) -> SimParams {
        SimParams {
            alpha_p: alpha,
            alpha_c: alpha,
            gamma_b: 1.0,
            gamma_c: 1.0,
            gamma_ab: 1.0,
            gamma_ca: 1.0,
            cell_length: 1.0,
            n_xi,
            n_tau: 11,
            d_tau: 0.05,
            snapshot_stride: 5,
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_source_keeps_boundary_value() {
        let p = params(3.0, 11);
        let b = FieldPair::new(c(0.3, -0.2), c(1.0, 0.5));
        let f = field_march(&vec![(c(0.0, 0.0), c(0.0, 0.0)); 11], b, &p);
        assert!(f.iter().all(|x| *x == b));
    }

    #[test]
    fn constant_source_is_integrated_exactly() {
        let p = params(3.0, 17);
        let kappa = 0.25;
        let b = FieldPair::new(c(0.1, 0.0), c(0.0, 0.0));
        let f = field_march(&vec![(c(kappa, 0.0), c(0.0, 0.0)); 17], b, &p);
        for (x, fx) in p.xi_grid().iter().zip(&f) {
            let expect = c(0.1, 0.0) + I * 3.0 * kappa * *x;
            assert_relative_eq!(fx.omega_p.re, expect.re, epsilon = 1e-14);
            assert_relative_eq!(fx.omega_p.im, expect.im, epsilon = 1e-14);
            assert_eq!(fx.omega_c, c(0.0, 0.0));
        }
    }

    #[test]
    fn sinusoidal_source_converges_at_second_order() {
        let k = 5.0;
        let a = 2.0;
        let err = |n: usize| {
            let p = params(a, n);
            let xi = p.xi_grid();
            let coh: Vec<_> = xi.iter().map(|x| (c((k * x).sin(), 0.0), c(0.0, 0.0))).collect();
            let f = field_march(&coh, FieldPair::zero(), &p);
            xi.iter()
                .zip(&f)
                .map(|(x, fx)| (fx.omega_p - I * a * (1.0 - (k * x).cos()) / k).norm())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(51), err(101));
        assert!(e1 < 1e-3, "{e1}");
        assert_relative_eq!(e1 / e2, 4.0, max_relative = 0.05);
    }

    #[test]
    fn stability_advice_examples() {
        let fig3 = preset("fig3").unwrap();
        let adv = stability_limits(&fig3.params, &fig3.spec);
        assert_relative_eq!(adv.d_tau, 0.1 / 2.6526, max_relative = 1e-12);
        assert!(adv.d_tau <= 0.0377);
        assert!((12_060..=12_080).contains(&adv.n_xi), "{}", adv.n_xi);

        let mut quiet = fig3.spec.clone();
        quiet.omega_p0 = 0.0;
        quiet.omega_c0 = 0.0;
        quiet.omega_r0 = 0.0;
        let p = SimParams {
            alpha_p: 0.0,
            alpha_c: 0.0,
            gamma_ab: 0.0,
            gamma_ca: 0.0,
            ..fig3.params
        };
        let adv = stability_limits(&p, &quiet);
        assert_eq!((adv.d_tau, adv.n_xi), (DEFAULT_D_TAU, DEFAULT_N_XI));
    }

    fn vacuum_spec() -> PulseSpec {
        PulseSpec {
            omega_p0: 0.0,
            omega_c0: 0.0,
            omega_r0: 0.0,
            t_off: 10.0,
            t_on: 20.0,
            t_switch: 1.0,
            signal_phase: 0.0,
            envelope: Envelope::gaussian(5.0, 1.0, PhaseMode::None),
        }
    }

    #[test]
    fn vacuum_run_stays_in_ground_state() {
        let p = SimParams {
            n_tau: 201,
            ..params(50.0, 41)
        };
        for scheme in [Scheme::CausalSweep, Scheme::MethodOfLines, Scheme::PredictorCorrector] {
            let opts = IntegrateOptions {
                scheme,
                keep_snapshots: true,
            };
            let rec = integrate_with(&vacuum_spec(), &p, opts, &mut Discard).unwrap();
            assert_eq!(rec.exit_series.len(), p.n_tau);
            assert!(rec.exit_series.iter().all(|f| *f == FieldPair::zero()));
            for s in &rec.snapshots {
                assert!(s.atoms.iter().all(|a| *a == AtomicState::ground()));
            }
        }
    }

    #[test]
    fn snapshots_follow_stride_and_reach_sink() {
        let p = SimParams {
            n_tau: 23,
            snapshot_stride: 5,
            ..params(2.0, 11)
        };
        let mut seen = Vec::new();
        let mut sink = |s: &GridSlice| seen.push(s.tau);
        let rec = integrate(&vacuum_spec(), &p, &mut sink).unwrap();
        let taus: Vec<f64> = rec.snapshots.iter().map(|s| s.tau).collect();
        assert_eq!(taus, seen);
        assert_eq!(taus.len(), 5);
        assert!(taus.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(rec.taus.len(), 23);
        assert_eq!(rec.snapshots[0].xi.len(), 11);
        assert_eq!(*rec.snapshots[0].xi.last().unwrap(), 1.0);
    }

    #[test]
    fn invalid_params_rejected_up_front() {
        let p = SimParams {
            n_xi: 1,
            ..params(1.0, 11)
        };
        assert!(matches!(
            integrate(&vacuum_spec(), &p, &mut Discard),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn blow_up_is_reported_with_location() {
        // a huge step on a strongly driven cell leaves the physical range
        let mut spec = vacuum_spec();
        spec.omega_r0 = 400.0;
        spec.t_on = 10.5;
        let p = SimParams {
            d_tau: 0.5,
            n_tau: 100,
            ..params(1.0, 5)
        };
        match integrate(&spec, &p, &mut Discard) {
            Err(Error::Instability { tau, partial, .. }) => {
                assert!(tau > 0.0);
                let partial = partial.unwrap();
                assert!(partial.aborted);
                assert!(!partial.exit_series.is_empty());
            }
            other => panic!("expected instability, got {:?}", other.map(|r| r.taus.len())),
        }
    }
}
