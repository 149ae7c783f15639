//! Helpers shared by the integration tests: an independent density-matrix
//! oracle and small configurations.
#![allow(dead_code)]

use lambda_eit::model::{AtomicState, FieldPair, SimParams};
use num_complex::Complex64;

pub type Matrix = [[Complex64; 3]; 3];

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

fn zero() -> Matrix {
    [[Complex64::new(0.0, 0.0); 3]; 3]
}

fn mul(x: &Matrix, y: &Matrix) -> Matrix {
    let mut out = zero();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += x[i][k] * y[k][j];
            }
        }
    }
    out
}

/// Full matrix in the basis order `(a, b, c)`.
pub fn matrix(s: &AtomicState) -> Matrix {
    let mut m = zero();
    m[A][A] = s.rho_aa.into();
    m[B][B] = s.rho_bb.into();
    m[C][C] = s.rho_cc.into();
    m[A][B] = s.rho_ab;
    m[B][A] = s.rho_ab.conj();
    m[C][B] = s.rho_cb;
    m[B][C] = s.rho_cb.conj();
    m[C][A] = s.rho_ca;
    m[A][C] = s.rho_ca.conj();
    m
}

/// `−i[H, ρ]` with `H = −(Ω_p|a⟩⟨b| + Ω_c|a⟩⟨c| + h.c.)`, plus spontaneous
/// emission out of `|a⟩` and dephasing of the optical coherences.
pub fn oracle_rhs(s: &AtomicState, f: &FieldPair, p: &SimParams) -> Matrix {
    let rho = matrix(s);
    let mut h = zero();
    h[A][B] = -f.omega_p;
    h[B][A] = -f.omega_p.conj();
    h[A][C] = -f.omega_c;
    h[C][A] = -f.omega_c.conj();
    let (hr, rh) = (mul(&h, &rho), mul(&rho, &h));
    let mut d = zero();
    let minus_i = Complex64::new(0.0, -1.0);
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = minus_i * (hr[i][j] - rh[i][j]);
        }
    }
    let total = p.gamma_b + p.gamma_c;
    d[A][A] -= total * rho[A][A];
    d[B][B] += p.gamma_b * rho[A][A];
    d[C][C] += p.gamma_c * rho[A][A];
    let mut rates = [[0.0; 3]; 3];
    rates[A][B] = p.gamma_ab;
    rates[B][A] = p.gamma_ab;
    rates[A][C] = p.gamma_ca;
    rates[C][A] = p.gamma_ca;
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] -= rates[i][j] * rho[i][j];
        }
    }
    d
}

pub fn params_with_rates(gamma_b: f64, gamma_c: f64, gamma_ab: f64, gamma_ca: f64) -> SimParams {
    SimParams {
        alpha_p: 1.0,
        alpha_c: 1.0,
        gamma_b,
        gamma_c,
        gamma_ab,
        gamma_ca,
        cell_length: 1.0,
        n_xi: 11,
        n_tau: 11,
        d_tau: 0.01,
        snapshot_stride: 1,
    }
}

/// Small storage-and-retrieval run that finishes in well under a second.
pub const SMALL_CONFIG: &str = "\
[physical]
cell_length_m = 0.04
alpha_over_c_p = 200
alpha_ratio = 1.0

[pulse]
omega_p0 = 0.02
omega_c0 = 1.0
t_off = 30
t_on = 60
t_switch = 5
envelope = gaussian
envelope_center = 10
envelope_width = 3

[grid]
t_end = 100
n_xi = 41
d_tau = 0.05

[output]
snapshot_stride = 40
";
