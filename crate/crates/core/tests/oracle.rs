mod common;

use common::{matrix, oracle_rhs, params_with_rates};
use lambda_eit::bloch::{bloch_rhs, rk4_step, AtomicDerivative};
use lambda_eit::model::{AtomicState, FieldPair};
use num_complex::Complex64;
use proptest::prelude::*;

fn derivative_matrix(d: &AtomicDerivative) -> common::Matrix {
    // a derivative has the same layout as a state
    matrix(&AtomicState {
        rho_bb: d.rho_bb,
        rho_cc: d.rho_cc,
        rho_aa: d.rho_aa,
        rho_ab: d.rho_ab,
        rho_cb: d.rho_cb,
        rho_ca: d.rho_ca,
    })
}

fn complex(r: f64, phi: f64) -> Complex64 {
    Complex64::from_polar(r, phi)
}

prop_compose! {
    fn pure_state()(
        amps in prop::array::uniform3(0.0..1.0f64),
        phases in prop::array::uniform3(-3.2..3.2f64),
    ) -> AtomicState {
        let [ra, rb, rc] = amps;
        let [pa, pb, pc] = phases;
        AtomicState::pure(complex(ra + 1e-3, pa), complex(rb, pb), complex(rc, pc))
    }
}

prop_compose! {
    /// Convex mixture of two pure states.
    fn mixed_state()(x in pure_state(), y in pure_state(), w in 0.0..1.0f64) -> AtomicState {
        AtomicState {
            rho_bb: w * x.rho_bb + (1.0 - w) * y.rho_bb,
            rho_cc: w * x.rho_cc + (1.0 - w) * y.rho_cc,
            rho_aa: w * x.rho_aa + (1.0 - w) * y.rho_aa,
            rho_ab: w * x.rho_ab + (1.0 - w) * y.rho_ab,
            rho_cb: w * x.rho_cb + (1.0 - w) * y.rho_cb,
            rho_ca: w * x.rho_ca + (1.0 - w) * y.rho_ca,
        }
    }
}

prop_compose! {
    fn fields()(p in 0.0..5.0f64, pp in -3.2..3.2f64, c in 0.0..5.0f64, pc in -3.2..3.2f64) -> FieldPair {
        FieldPair::new(complex(p, pp), complex(c, pc))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rhs_matches_commutator_oracle(
        s in mixed_state(),
        f in fields(),
        rates in prop::array::uniform4(0.0..3.0f64),
    ) {
        let p = params_with_rates(rates[0], rates[1], rates[2], rates[3]);
        let got = derivative_matrix(&bloch_rhs(&s, &f, &p));
        let want = oracle_rhs(&s, &f, &p);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((got[i][j] - want[i][j]).norm() < 1e-12, "({i},{j}): {} vs {}", got[i][j], want[i][j]);
            }
        }
    }
}

/// Resonant two-level flop from `|b⟩`: `ρ_aa = sin²(Ωt)`, `ρ_ab = i sin cos`.
fn rabi_error(h: f64, t_end: f64, omega: f64) -> f64 {
    let p = params_with_rates(0.0, 0.0, 0.0, 0.0);
    let f = FieldPair::new(Complex64::new(omega, 0.0), Complex64::new(0.0, 0.0));
    let steps = (t_end / h).round() as usize;
    let mut s = AtomicState::ground();
    for _ in 0..steps {
        s = rk4_step(&s, &f, &f, &f, h, &p).unwrap();
    }
    let (sn, cs) = (omega * t_end).sin_cos();
    let exact_ab = Complex64::new(0.0, sn * cs);
    (s.rho_aa - sn * sn).abs().max((s.rho_ab - exact_ab).norm())
}

#[test]
fn rk4_converges_at_fourth_order_on_rabi_flop() {
    let hs = [0.2, 0.1, 0.05, 0.025];
    let errors: Vec<f64> = hs.iter().map(|h| rabi_error(*h, 4.0, 1.3)).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() < 0.3, "order {order} from {errors:?}");
    }
}
