//! Local optical Bloch equations of a resonantly driven Λ atom.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{AtomicState, FieldPair, SimParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Time derivative of an [`AtomicState`]; the population components sum to
/// zero exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AtomicDerivative {
    pub rho_bb: f64,
    pub rho_cc: f64,
    pub rho_aa: f64,
    pub rho_ab: Complex64,
    pub rho_cb: Complex64,
    pub rho_ca: Complex64,
}

impl AtomicDerivative {
    pub fn trace(&self) -> f64 {
        (self.rho_bb + self.rho_cc) + self.rho_aa
    }

    #[inline]
    pub fn scaled(&self, h: f64) -> AtomicDerivative {
        AtomicDerivative {
            rho_bb: h * self.rho_bb,
            rho_cc: h * self.rho_cc,
            rho_aa: h * self.rho_aa,
            rho_ab: h * self.rho_ab,
            rho_cb: h * self.rho_cb,
            rho_ca: h * self.rho_ca,
        }
    }

    /// `self + h·other`
    #[inline]
    pub fn add_scaled(&self, other: &AtomicDerivative, h: f64) -> AtomicDerivative {
        AtomicDerivative {
            rho_bb: self.rho_bb + h * other.rho_bb,
            rho_cc: self.rho_cc + h * other.rho_cc,
            rho_aa: self.rho_aa + h * other.rho_aa,
            rho_ab: self.rho_ab + h * other.rho_ab,
            rho_cb: self.rho_cb + h * other.rho_cb,
            rho_ca: self.rho_ca + h * other.rho_ca,
        }
    }
}

impl AtomicState {
    /// `self + h·d`
    #[inline]
    pub fn advanced(&self, d: &AtomicDerivative, h: f64) -> AtomicState {
        AtomicState {
            rho_bb: self.rho_bb + h * d.rho_bb,
            rho_cc: self.rho_cc + h * d.rho_cc,
            rho_aa: self.rho_aa + h * d.rho_aa,
            rho_ab: self.rho_ab + h * d.rho_ab,
            rho_cb: self.rho_cb + h * d.rho_cb,
            rho_ca: self.rho_ca + h * d.rho_ca,
        }
    }
}

/// Right-hand side of the density-matrix equations on one- and two-photon
/// resonance.
///
/// The interaction is `H = −(Ω_p|a⟩⟨b| + Ω_c|a⟩⟨c| + h.c.)`; the excited
/// state decays to `|b⟩` at `γ_b` and to `|c⟩` at `γ_c`, the optical
/// coherences dephase at `γ_ab` and `γ_ca`, and the ground-state coherence
/// `ρ_cb` does not decay.
#[inline]
pub fn bloch_rhs(s: &AtomicState, f: &FieldPair, p: &SimParams) -> AtomicDerivative {
    let (op, oc) = (f.omega_p, f.omega_c);
    // i Ω_p* ρ_ab and its conjugate give the b-a population exchange
    let pump_b = 2.0 * (I * op.conj() * s.rho_ab).re;
    let pump_c = 2.0 * (I * oc.conj() * s.rho_ac()).re;

    let rho_bb = p.gamma_b * s.rho_aa + pump_b;
    let rho_cc = p.gamma_c * s.rho_aa + pump_c;
    let rho_aa = -(rho_bb + rho_cc);

    let rho_ab = -p.gamma_ab * s.rho_ab + I * op * (s.rho_bb - s.rho_aa) + I * oc * s.rho_cb;
    let rho_cb = -I * op * s.rho_ca + I * oc.conj() * s.rho_ab;
    let rho_ca =
        -p.gamma_ca * s.rho_ca - I * op.conj() * s.rho_cb + I * oc.conj() * (s.rho_aa - s.rho_cc);

    AtomicDerivative {
        rho_bb,
        rho_cc,
        rho_aa,
        rho_ab,
        rho_cb,
        rho_ca,
    }
}

/// One classical RK4 step of a single cell driven by field samples at the
/// start, midpoint and end of the step.
pub fn rk4_step(
    state: &AtomicState,
    fields_t0: &FieldPair,
    fields_mid: &FieldPair,
    fields_t1: &FieldPair,
    d_tau: f64,
    params: &SimParams,
) -> Result<AtomicState> {
    let k1 = bloch_rhs(state, fields_t0, params);
    let next = rk4_from_slope(state, &k1, fields_mid, fields_t1, d_tau, params);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Instability {
            xi: f64::NAN,
            tau: f64::NAN,
            reason: "non-finite density matrix after RK4 step".into(),
            partial: None,
        })
    }
}

/// Remaining RK4 stages given the slope `k1` at the start of the step.
#[inline]
pub(crate) fn rk4_from_slope(
    state: &AtomicState,
    k1: &AtomicDerivative,
    fields_mid: &FieldPair,
    fields_t1: &FieldPair,
    h: f64,
    params: &SimParams,
) -> AtomicState {
    let k2 = bloch_rhs(&state.advanced(k1, 0.5 * h), fields_mid, params);
    let k3 = bloch_rhs(&state.advanced(&k2, 0.5 * h), fields_mid, params);
    let k4 = bloch_rhs(&state.advanced(&k3, h), fields_t1, params);
    let incr = k1.add_scaled(&k2, 2.0).add_scaled(&k3, 2.0).add_scaled(&k4, 1.0);
    state.advanced(&incr, h / 6.0)
}
