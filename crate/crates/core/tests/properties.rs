mod common;

use common::params_with_rates;
use lambda_eit::bloch::{bloch_rhs, rk4_step};
use lambda_eit::cli_io::{
    DecayChoice, EnvelopeChoice, GridOverrides, OutputOptions, PhysicalOverrides, PulseOverrides, RunConfig,
    SweepAxes,
};
use lambda_eit::model::{AtomicState, FieldPair};
use lambda_eit::propagate::Scheme;
use lambda_eit::scenarios::PhaseMode;
use lambda_eit::soliton::{best_shift, coherence_relation_residual, limit_sum_rule, TravelingProfile};
use num_complex::Complex64;
use proptest::prelude::*;

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
        AtomicState::pure(complex(ra, pa), complex(rb + 1e-3, pb), complex(rc, pc))
    }
}

prop_compose! {
    fn fields(max: f64)(p in 0.0..max, pp in -3.2..3.2f64, c in 0.0..max, pc in -3.2..3.2f64) -> FieldPair {
        FieldPair::new(complex(p, pp), complex(c, pc))
    }
}

proptest! {
    #[test]
    fn populations_change_without_changing_the_trace(s in pure_state(), f in fields(5.0), g in 0.0..3.0f64) {
        let p = params_with_rates(g, 0.5 * g, g, g);
        prop_assert!(bloch_rhs(&s, &f, &p).trace().abs() < 1e-14);
    }

    /// With `γ_ab = γ_ca ≥ (γ_b + γ_c)/2` the relaxation is of Lindblad form
    /// and the state stays a density matrix.
    #[test]
    fn lindblad_rates_keep_the_state_positive(
        s in pure_state(),
        f in fields(2.0),
        g in prop::array::uniform2(0.0..2.0f64),
        extra in 0.0..1.0f64,
    ) {
        let dephasing = 0.5 * (g[0] + g[1]) + extra;
        let p = params_with_rates(g[0], g[1], dephasing, dephasing);
        let mut x = s;
        for _ in 0..400 {
            x = rk4_step(&x, &f, &f, &f, 0.01, &p).unwrap();
            prop_assert!((x.trace() - 1.0).abs() < 1e-12);
            prop_assert!(x.min_eigenvalue() > -1e-9, "eigenvalue {}", x.min_eigenvalue());
        }
    }

    #[test]
    fn coherence_relation_is_phase_covariant(
        seed in prop::collection::vec(-1.0..1.0f64, 12),
        phi_p in -3.2..3.2f64,
        phi_c in -3.2..3.2f64,
        v in 0.01..0.9f64,
    ) {
        let profile = synthetic_profile(&seed, v);
        let base = coherence_relation_residual(&profile).unwrap();
        let turned = coherence_relation_residual(&profile.with_phases(phi_p, phi_c)).unwrap();
        prop_assert!((base.value - turned.value).abs() <= 1e-10 * base.value.max(1.0));
    }

    #[test]
    fn sum_rule_is_phase_covariant(phi_p in -3.2..3.2f64, phi_c in -3.2..3.2f64, v in 0.01..0.9f64) {
        let profile = synthetic_profile(&[0.0; 12], v);
        let base = limit_sum_rule(&profile).unwrap();
        let turned = limit_sum_rule(&profile.with_phases(phi_p, phi_c)).unwrap();
        prop_assert!((base.value - turned.value).abs() <= 1e-12 * base.value);
    }

    #[test]
    fn best_shift_recovers_integer_shifts(k in -40isize..40, width in 4.0..15.0f64) {
        let n = 400;
        let a: Vec<f64> = (0..n).map(|j| bump(j as f64, 200.0, width)).collect();
        let b: Vec<f64> = (0..n).map(|j| bump(j as f64 - k as f64, 200.0, width)).collect();
        let (shift, corr) = best_shift(&a, &b).unwrap();
        prop_assert!((shift - k as f64).abs() < 1e-3, "{shift} vs {k}");
        prop_assert!(corr > 0.999);
    }

    #[test]
    fn config_text_reads_back_unchanged(c in run_config()) {
        let text = c.to_text();
        prop_assert_eq!(RunConfig::parse(&text, "generated").unwrap(), c);
    }
}

fn bump(x: f64, centre: f64, width: f64) -> f64 {
    (-((x - centre) / width).powi(2)).exp()
}

/// Kink-shaped fields whose ends are flat, with `ρ_cb` close to the
/// predicted relation and perturbed by `seed`.
fn synthetic_profile(seed: &[f64], v: f64) -> TravelingProfile {
    let n = 200;
    let s_grid: Vec<f64> = (0..n).map(|j| -10.0 + 20.0 * j as f64 / (n - 1) as f64).collect();
    let alpha0 = 3.0;
    let k = (1.0 - v) / (alpha0 * v);
    let omega_p: Vec<Complex64> = s_grid
        .iter()
        .map(|s| complex(0.5 * (1.0 - (s / 1.5).tanh()), 0.3))
        .collect();
    let omega_c: Vec<Complex64> = s_grid
        .iter()
        .map(|s| complex(0.4 * (1.0 + (s / 1.5).tanh()), -0.7))
        .collect();
    let rho_cb = omega_p
        .iter()
        .zip(&omega_c)
        .enumerate()
        .map(|(j, (p, c))| -k * p * c.conj() * (1.0 + 0.05 * seed[j % seed.len()]))
        .collect();
    TravelingProfile {
        s_grid,
        omega_p,
        omega_c,
        rho_cb,
        v,
        alpha0,
        gamma: 1.0,
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, 1e-9..1e-3f64, Just(0.0), Just(0.1), Just(1.0 / 3.0)]
}

fn opt<T: std::fmt::Debug + Clone>(s: impl Strategy<Value = T>) -> impl Strategy<Value = Option<T>> {
    prop::option::of(s)
}

prop_compose! {
    fn physical()(
        gamma_abs in opt(finite()),
        cell_length_m in opt(finite()),
        alpha_over_c_p in opt(finite()),
        coupling in opt((any::<bool>(), finite())),
        decay in opt(prop_oneof![Just(DecayChoice::CouplingScaled), Just(DecayChoice::Explicit)]),
        rates in prop::array::uniform4(opt(finite())),
    ) -> PhysicalOverrides {
        let (alpha_over_c_c, alpha_ratio) = match coupling {
            Some((true, x)) => (Some(x), None),
            Some((false, x)) => (None, Some(x)),
            None => (None, None),
        };
        PhysicalOverrides {
            gamma_abs,
            cell_length_m,
            alpha_over_c_p,
            alpha_over_c_c,
            alpha_ratio,
            decay,
            gamma_b: rates[0],
            gamma_c: rates[1],
            gamma_ab: rates[2],
            gamma_ca: rates[3],
        }
    }
}

prop_compose! {
    fn pulse()(
        values in prop::array::uniform9(opt(finite())),
        envelope in opt(prop_oneof![Just(EnvelopeChoice::DefaultDouble), Just(EnvelopeChoice::Gaussian)]),
        phase_mode in opt(prop_oneof![Just(PhaseMode::None), Just(PhaseMode::FollowsEnvelope)]),
    ) -> PulseOverrides {
        PulseOverrides {
            omega_p0: values[0],
            omega_c0: values[1],
            omega_r0: values[2],
            t_off: values[3],
            t_on: values[4],
            t_switch: values[5],
            signal_phase: values[6],
            envelope,
            envelope_center: values[7],
            envelope_width: values[8],
            phase_mode,
        }
    }
}

prop_compose! {
    fn run_config()(
        preset in prop::sample::select(vec!["fig3", "fig8_equal_alpha_desk", "gauss_growth"]),
        physical in physical(),
        pulse in pulse(),
        n_xi in opt(2usize..100_000),
        d_tau in opt(finite()),
        t_end in opt(finite()),
        scheme in opt(prop_oneof![
            Just(Scheme::CausalSweep),
            Just(Scheme::MethodOfLines),
            Just(Scheme::PredictorCorrector),
        ]),
        ratios in prop::collection::vec(finite(), 0..4),
        drives in prop::collection::vec(finite(), 0..4),
        dir in opt("[a-z][a-z0-9_/]{0,12}"),
        strides in (opt(1usize..1000), opt(1usize..1000)),
        figures in prop::sample::subsequence(vec!["fig2", "fig3", "fig6", "fig10"], 0..4),
    ) -> RunConfig {
        RunConfig {
            preset: Some(preset.to_string()),
            physical,
            pulse,
            grid: GridOverrides { n_xi, d_tau, t_end, scheme },
            sweep: SweepAxes { alpha_ratio: ratios, omega_r0: drives },
            output: OutputOptions {
                dir: dir.map(Into::into),
                snapshot_stride: strides.0,
                xi_stride: strides.1,
                figures: figures.into_iter().map(String::from).collect(),
            },
        }
    }
}

/// The decay rates of the `α_c > α_p` presets (`γ_ab = 1 < (γ_b + γ_c)/2`)
/// are not of Lindblad form, and optical pumping drives a single atom out
/// of the positive cone.
#[test]
fn coupling_scaled_rates_above_equal_coupling_lose_positivity() {
    let ratio = 31082.0 / 30177.0;
    let p = params_with_rates(1.0, ratio, 1.0, ratio);
    let f = FieldPair::new(Complex64::new(0.2, 0.0), Complex64::new(0.0, 0.0));
    let mut s = AtomicState::ground();
    let mut worst: f64 = 0.0;
    for _ in 0..4000 {
        s = rk4_step(&s, &f, &f, &f, 0.01, &p).unwrap();
        worst = worst.min(s.min_eigenvalue());
    }
    assert!(worst < -1e-5, "{worst}");

    // the ground state sits on the edge of the cone; truncation error alone
    // stays near 1e-9
    let lindblad = params_with_rates(1.0, ratio, 0.5 * (1.0 + ratio), 0.5 * (1.0 + ratio));
    let mut s = AtomicState::ground();
    for _ in 0..4000 {
        s = rk4_step(&s, &f, &f, &f, 0.01, &lindblad).unwrap();
        assert!(s.min_eigenvalue() > -1e-7, "{}", s.min_eigenvalue());
    }
}
