//! Domain types shared by the solver and the analysis code.
//!
//! Internal units: the excited-state decay rate `γ` and the vacuum speed of
//! light are both 1. Rabi frequencies are in units of `γ`, times in `γ⁻¹`
//! and lengths in `c/γ`. The propagation coefficient of each field is
//! `A = α/c`; configured in physical units as γ per metre.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Vacuum speed of light in m/s.
pub const C_SI: f64 = 299_792_458.0;

/// Density-matrix elements of one grid cell in the `{|a⟩, |b⟩, |c⟩}` basis.
///
/// Only the independent elements are stored; `ρ_ba`, `ρ_bc` and `ρ_ac` are
/// their complex conjugates, so the assembled matrix is Hermitian by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AtomicState {
    pub rho_bb: f64,
    pub rho_cc: f64,
    pub rho_aa: f64,
    pub rho_ab: Complex64,
    pub rho_cb: Complex64,
    pub rho_ca: Complex64,
}

impl AtomicState {
    /// All population in the ground state `|b⟩`.
    pub fn ground() -> Self {
        AtomicState {
            rho_bb: 1.0,
            ..Default::default()
        }
    }

    pub fn excited() -> Self {
        AtomicState {
            rho_aa: 1.0,
            ..Default::default()
        }
    }

    /// Pure state `|ψ⟩ = ca|a⟩ + cb|b⟩ + cc|c⟩` (normalised internally).
    pub fn pure(ca: Complex64, cb: Complex64, cc: Complex64) -> Self {
        let norm = (ca.norm_sqr() + cb.norm_sqr() + cc.norm_sqr()).sqrt();
        let (ca, cb, cc) = (ca / norm, cb / norm, cc / norm);
        AtomicState {
            rho_aa: ca.norm_sqr(),
            rho_bb: cb.norm_sqr(),
            rho_cc: cc.norm_sqr(),
            rho_ab: ca * cb.conj(),
            rho_cb: cc * cb.conj(),
            rho_ca: cc * ca.conj(),
        }
    }

    #[inline]
    pub fn rho_ac(&self) -> Complex64 {
        self.rho_ca.conj()
    }

    #[inline]
    pub fn rho_ba(&self) -> Complex64 {
        self.rho_ab.conj()
    }

    #[inline]
    pub fn rho_bc(&self) -> Complex64 {
        self.rho_cb.conj()
    }

    pub fn trace(&self) -> f64 {
        self.rho_bb + self.rho_cc + self.rho_aa
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.rho_aa * self.rho_aa
            + self.rho_bb * self.rho_bb
            + self.rho_cc * self.rho_cc
            + 2.0 * (self.rho_ab.norm_sqr() + self.rho_cb.norm_sqr() + self.rho_ca.norm_sqr())
    }

    /// Full matrix, rows and columns ordered `a, b, c`.
    pub fn to_matrix(&self) -> [[Complex64; 3]; 3] {
        let r = |x: f64| Complex64::new(x, 0.0);
        [
            [r(self.rho_aa), self.rho_ab, self.rho_ac()],
            [self.rho_ba(), r(self.rho_bb), self.rho_bc()],
            [self.rho_ca, self.rho_cb, r(self.rho_cc)],
        ]
    }

    /// Inverse of [`to_matrix`](Self::to_matrix); the upper triangle is
    /// ignored.
    pub fn from_matrix(m: &[[Complex64; 3]; 3]) -> Self {
        AtomicState {
            rho_aa: m[0][0].re,
            rho_bb: m[1][1].re,
            rho_cc: m[2][2].re,
            rho_ab: m[1][0].conj(),
            rho_cb: m[2][1],
            rho_ca: m[2][0],
        }
    }

    /// Eigenvalues of the assembled Hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        hermitian3_eigenvalues(&self.to_matrix())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_finite(&self) -> bool {
        self.rho_bb.is_finite()
            && self.rho_cc.is_finite()
            && self.rho_aa.is_finite()
            && self.rho_ab.is_finite()
            && self.rho_cb.is_finite()
            && self.rho_ca.is_finite()
    }

    /// Largest modulus of any element.
    pub fn max_abs(&self) -> f64 {
        self.rho_bb
            .abs()
            .max(self.rho_cc.abs())
            .max(self.rho_aa.abs())
            .max(self.rho_ab.norm())
            .max(self.rho_cb.norm())
            .max(self.rho_ca.norm())
    }
}

/// Closed-form (trigonometric) eigenvalues of a 3×3 Hermitian matrix,
/// returned in ascending order.
pub fn hermitian3_eigenvalues(m: &[[Complex64; 3]; 3]) -> [f64; 3] {
    let (a11, a22, a33) = (m[0][0].re, m[1][1].re, m[2][2].re);
    let (a12, a13, a23) = (m[0][1], m[0][2], m[1][2]);
    let off = a12.norm_sqr() + a13.norm_sqr() + a23.norm_sqr();
    if off == 0.0 {
        let mut e = [a11, a22, a33];
        e.sort_by(|x, y| x.total_cmp(y));
        return e;
    }
    let q = (a11 + a22 + a33) / 3.0;
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    let (b11, b22, b33) = ((a11 - q) / p, (a22 - q) / p, (a33 - q) / p);
    let (b12, b13, b23) = (a12 / p, a13 / p, a23 / p);
    let det = b11 * b22 * b33 + 2.0 * (b12 * b23 * b13.conj()).re
        - b11 * b23.norm_sqr()
        - b22 * b13.norm_sqr()
        - b33 * b12.norm_sqr();
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

/// Complex Rabi frequencies of the probe (`b↔a`) and control (`c↔a`)
/// transitions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldPair {
    pub omega_p: Complex64,
    pub omega_c: Complex64,
}

impl FieldPair {
    pub fn new(omega_p: Complex64, omega_c: Complex64) -> Self {
        FieldPair { omega_p, omega_c }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.omega_p.is_finite() && self.omega_c.is_finite()
    }

    pub fn max_norm(&self) -> f64 {
        self.omega_p.norm().max(self.omega_c.norm())
    }

    /// Midpoint average, used for RK4 half-step samples.
    pub fn midpoint(&self, other: &FieldPair) -> FieldPair {
        FieldPair {
            omega_p: 0.5 * (self.omega_p + other.omega_p),
            omega_c: 0.5 * (self.omega_c + other.omega_c),
        }
    }
}

/// Dimensionless medium, decay and grid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Probe propagation coefficient `α_p/c` (γ per unit length).
    pub alpha_p: f64,
    /// Control propagation coefficient `α_c/c`.
    pub alpha_c: f64,
    /// Decay `|a⟩ → |b⟩`.
    pub gamma_b: f64,
    /// Decay `|a⟩ → |c⟩`.
    pub gamma_c: f64,
    /// Dephasing of `ρ_ab`.
    pub gamma_ab: f64,
    /// Dephasing of `ρ_ca`.
    pub gamma_ca: f64,
    /// Cell length in units of `c/γ`.
    pub cell_length: f64,
    pub n_xi: usize,
    /// Number of retarded-time samples, including `τ = 0`.
    pub n_tau: usize,
    pub d_tau: f64,
    pub snapshot_stride: usize,
}

impl SimParams {
    pub fn d_xi(&self) -> f64 {
        self.cell_length / (self.n_xi - 1) as f64
    }

    pub fn xi_grid(&self) -> Vec<f64> {
        let dx = self.d_xi();
        (0..self.n_xi)
            .map(|j| {
                if j + 1 == self.n_xi {
                    self.cell_length
                } else {
                    j as f64 * dx
                }
            })
            .collect()
    }

    pub fn tau_at(&self, step: usize) -> f64 {
        step as f64 * self.d_tau
    }

    /// Last sampled retarded time.
    pub fn t_end(&self) -> f64 {
        self.tau_at(self.n_tau.saturating_sub(1))
    }

    /// Field attenuation exponent `A_p l` of the probe in a medium
    /// prepared in `|b⟩` (divide by `γ_ab` for the resonant two-level
    /// value).
    pub fn depth_p(&self) -> f64 {
        self.alpha_p * self.cell_length
    }

    pub fn depth_c(&self) -> f64 {
        self.alpha_c * self.cell_length
    }

    /// Collective-coupling ratio `α_c/α_p`.
    pub fn alpha_ratio(&self) -> f64 {
        self.alpha_c / self.alpha_p
    }

    pub fn validate(self) -> Result<SimParams> {
        validate(self)
    }
}

/// Checks every invariant of `params` and reports all violations at once.
pub fn validate(params: SimParams) -> Result<SimParams> {
    let mut v = Vec::new();
    let rates = [
        ("gamma_b", params.gamma_b),
        ("gamma_c", params.gamma_c),
        ("gamma_ab", params.gamma_ab),
        ("gamma_ca", params.gamma_ca),
    ];
    for (name, rate) in rates {
        if !rate.is_finite() || rate < 0.0 {
            v.push(Violation::new(name, "decay rate must be finite and non-negative"));
        }
    }
    for (name, a) in [("alpha_p", params.alpha_p), ("alpha_c", params.alpha_c)] {
        if !a.is_finite() || a < 0.0 {
            v.push(Violation::new(name, "coupling must be finite and non-negative"));
        }
    }
    if !(params.cell_length.is_finite() && params.cell_length > 0.0) {
        v.push(Violation::new("cell_length", "non-positive cell length"));
    }
    if params.n_xi < 2 {
        v.push(Violation::new("n_xi", "grid too coarse"));
    }
    if params.n_tau < 1 {
        v.push(Violation::new("n_tau", "no time samples"));
    }
    if !(params.d_tau.is_finite() && params.d_tau > 0.0) {
        v.push(Violation::new("d_tau", "non-positive step"));
    }
    if params.snapshot_stride == 0 {
        v.push(Violation::new("snapshot_stride", "stride must be at least 1"));
    }
    if v.is_empty() {
        Ok(params)
    } else {
        Err(Error::Validation(v))
    }
}

/// How the four relaxation rates are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayModel {
    /// `γ_b = γ_ab = 1`, `γ_c = γ_ca = α_c/α_p`.
    CouplingScaled,
    Explicit {
        gamma_b: f64,
        gamma_c: f64,
        gamma_ab: f64,
        gamma_ca: f64,
    },
}

/// Grid request in physical-time units (`γ⁻¹`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_xi: usize,
    pub d_tau: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
}

/// Medium description in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    /// Excited-state decay rate `γ` in s⁻¹; sets the length unit `c/γ`.
    pub gamma_abs: f64,
    pub cell_length_m: f64,
    /// `α_p/c` in γ per metre.
    pub alpha_over_c_p: f64,
    /// `α_c/c` in γ per metre.
    pub alpha_over_c_c: f64,
    pub decay: DecayModel,
    pub grid: GridSpec,
}

impl PhysicalConfig {
    /// Default calibration of `γ` in s⁻¹.
    pub const DEFAULT_GAMMA_ABS: f64 = 1.7e8;

    /// Total probe field-attenuation exponent `(α_p/c) l` in units of γ.
    pub fn depth_p(&self) -> f64 {
        self.alpha_over_c_p * self.cell_length_m
    }

    /// Rescale `α_c` so that `α_c/α_p = ratio`.
    pub fn with_alpha_ratio(mut self, ratio: f64) -> Self {
        self.alpha_over_c_c = self.alpha_over_c_p * ratio;
        self
    }
}

/// Converts a laboratory configuration into solver units.
pub fn nondimensionalize(cfg: &PhysicalConfig) -> Result<SimParams> {
    let mut v = Vec::new();
    if !(cfg.gamma_abs.is_finite() && cfg.gamma_abs > 0.0) {
        v.push(Violation::new("gamma_abs", "must be positive"));
    }
    if !(cfg.cell_length_m.is_finite() && cfg.cell_length_m > 0.0) {
        v.push(Violation::new("cell_length_m", "must be positive"));
    }
    if !(cfg.grid.t_end.is_finite() && cfg.grid.t_end >= 0.0) {
        v.push(Violation::new("t_end", "must be finite and non-negative"));
    }
    if !(cfg.grid.d_tau.is_finite() && cfg.grid.d_tau > 0.0) {
        v.push(Violation::new("d_tau", "non-positive step"));
    }
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }

    // metres per unit length
    let length_unit = C_SI / cfg.gamma_abs;
    let cell_length = cfg.cell_length_m / length_unit;
    let alpha_p = cfg.alpha_over_c_p * length_unit;
    let alpha_c = cfg.alpha_over_c_c * length_unit;

    let (gamma_b, gamma_c, gamma_ab, gamma_ca) = match cfg.decay {
        DecayModel::CouplingScaled => {
            let ratio = if cfg.alpha_over_c_p > 0.0 {
                cfg.alpha_over_c_c / cfg.alpha_over_c_p
            } else {
                1.0
            };
            (1.0, ratio, 1.0, ratio)
        }
        DecayModel::Explicit {
            gamma_b,
            gamma_c,
            gamma_ab,
            gamma_ca,
        } => (gamma_b, gamma_c, gamma_ab, gamma_ca),
    };

    let n_tau = (cfg.grid.t_end / cfg.grid.d_tau).round() as usize + 1;
    validate(SimParams {
        alpha_p,
        alpha_c,
        gamma_b,
        gamma_c,
        gamma_ab,
        gamma_ca,
        cell_length,
        n_xi: cfg.grid.n_xi,
        n_tau,
        d_tau: cfg.grid.d_tau,
        snapshot_stride: cfg.grid.snapshot_stride,
    })
}
