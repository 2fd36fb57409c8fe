//! Randomized identities between independent formulas for the same
//! quantity.

use std::f64::consts::LN_2;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qcwalk_core::dynamics::{rhs_bloch, rhs_fock};
use qcwalk_core::model::{amplitude_moduli_from_bloch, bloch_from_amplitudes, QcState, SystemParams};
use qcwalk_core::observables::{self, AtomicReduction};
use qcwalk_core::oracles::{approx_fidelity, resonant_amplitudes, resonant_purity};

const RUNGS: usize = 5;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn normalized(mut s: QcState) -> Option<QcState> {
    let norm = s.norm_sqr().sqrt();
    if norm < 1e-3 {
        return None;
    }
    s.b0 /= norm;
    s.a.iter_mut().chain(s.b.iter_mut()).for_each(|c| *c /= norm);
    Some(s)
}

/// Normalized state with every amplitude random.
fn any_state() -> impl Strategy<Value = QcState> {
    (complex(), prop::collection::vec(complex(), 2 * RUNGS), -3.0..3.0f64, -50.0..50.0f64).prop_filter_map(
        "zero vector",
        |(b0, amps, x, p)| {
            let mut s = QcState::vacuum(RUNGS, x, p);
            s.b0 = b0;
            s.a.copy_from_slice(&amps[..RUNGS]);
            s.b.copy_from_slice(&amps[RUNGS..]);
            normalized(s)
        },
    )
}

/// Normalized state populating only rungs `n-1` and `n` (only `b_0` and
/// rung 0 when `n = 0`), as reached from a Fock field.
fn two_rung_state() -> impl Strategy<Value = (usize, QcState)> {
    (0..RUNGS, prop::collection::vec(complex(), 4), -3.0..3.0f64, -50.0..50.0f64).prop_filter_map(
        "zero vector",
        |(n, c, x, p)| {
            let mut s = QcState::vacuum(RUNGS, x, p);
            s.a[n] = c[0];
            s.b[n] = c[1];
            if n == 0 {
                s.b0 = c[2];
            } else {
                s.a[n - 1] = c[2];
                s.b[n - 1] = c[3];
            }
            normalized(s).map(|s| (n, s))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bloch_round_trip_recovers_moduli(s in any_state()) {
        let b = bloch_from_amplitudes(&s);
        for (k, (a2, b2)) in amplitude_moduli_from_bloch(&b).into_iter().enumerate() {
            prop_assert!((a2 - s.a[k].norm_sqr()).abs() <= 1e-12);
            prop_assert!((b2 - s.b[k].norm_sqr()).abs() <= 1e-12);
        }
    }

    #[test]
    fn bloch_vectors_lie_on_rung_spheres(s in any_state()) {
        let b = bloch_from_amplitudes(&s);
        for k in 0..RUNGS {
            let len2 = b.u[k] * b.u[k] + b.v[k] * b.v[k] + b.z[k] * b.z[k];
            prop_assert!((len2 - b.r[k] * b.r[k]).abs() <= 1e-12);
        }
        prop_assert!((b.r.iter().sum::<f64>() + b.b0_mag2 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn inversion_routes_agree(s in any_state()) {
        let amp = observables::inversion(&s);
        let bloch = observables::inversion_bloch(&bloch_from_amplitudes(&s));
        prop_assert!((amp - bloch).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn purity_and_entropies_are_bounded(s in any_state()) {
        let r = s.reduced().unwrap();
        let p = r.purity();
        prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&p));
        let sn = r.von_neumann_entropy();
        prop_assert!((-1e-12..=LN_2 + 1e-12).contains(&sn));
        prop_assert_eq!(p + r.linear_entropy(), 1.0);
        prop_assert!(r.c.norm_sqr() <= r.a * r.b + 1e-12);
        prop_assert!((r.a + r.b - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn entropy_vanishes_exactly_on_product_states(s in any_state()) {
        let r = s.reduced().unwrap();
        if 1.0 - r.purity() > 1e-6 {
            prop_assert!(r.von_neumann_entropy() > 0.0);
        }
    }

    #[test]
    fn product_states_are_pure(e in complex(), g in complex(), field in prop::collection::vec(complex(), RUNGS)) {
        // (e|2> + g|1>) ⊗ Σ_{m<N} c_m |m>; level N stays empty because a_N
        // is not represented
        let mut s = QcState::vacuum(RUNGS, 0.0, 0.0);
        s.b0 = g * field[0];
        for k in 0..RUNGS {
            s.a[k] = e * field[k];
            if k + 1 < RUNGS {
                s.b[k] = g * field[k + 1];
            }
        }
        if let Some(s) = normalized(s) {
            let r = s.reduced().unwrap();
            prop_assert!((r.purity() - 1.0).abs() <= 1e-12);
            prop_assert!(r.von_neumann_entropy() <= 1e-4);
        }
    }

    #[test]
    fn fock_formula_equals_generic_purity((n, s) in two_rung_state()) {
        let b = bloch_from_amplitudes(&s);
        let generic = observables::purity(&s).unwrap();
        let fock = if n == 0 {
            // b0 plays the role of rung -1 with z = -|b0|^2
            observables::fock_purity(-b.b0_mag2, b.z[0], b.b0_mag2, b.r[0])
        } else {
            observables::fock_purity(b.z[n - 1], b.z[n], b.r[n - 1], b.r[n])
        };
        prop_assert!((generic - fock).abs() <= 1e-12);
        let from_bloch = observables::purity(&b).unwrap();
        prop_assert!((generic - from_bloch).abs() <= 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_phase_blind(s1 in any_state(), s2 in any_state(), phi in -3.2..3.2f64) {
        let f12 = observables::fidelity(&s1, &s2).unwrap();
        let f21 = observables::fidelity(&s2, &s1).unwrap();
        prop_assert!((f12 - f21).abs() <= 1e-14);
        prop_assert!((0.0..=1.0).contains(&f12));
        let mut rotated = s1.clone();
        let g = C64::from_polar(1.0, phi);
        rotated.b0 *= g;
        rotated.a.iter_mut().chain(rotated.b.iter_mut()).for_each(|c| *c *= g);
        prop_assert!((observables::fidelity(&s1, &rotated).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fock_rhs_equals_full_rhs((_n, s) in two_rung_state(), delta in -5.0..5.0f64) {
        let params = SystemParams::new(0.001, delta, RUNGS);
        let b = bloch_from_amplitudes(&s);
        let full = rhs_bloch(&b, &params).unwrap();
        let fock = rhs_fock(&b, &params).unwrap();
        prop_assert_eq!(full, fock);
    }

    #[test]
    fn resonant_rotation_preserves_norm(a in complex(), b in complex(), n in 0usize..50, angle in -100.0..100.0f64) {
        let (a1, b1) = resonant_amplitudes(a, b, n, angle);
        let before = a.norm_sqr() + b.norm_sqr();
        prop_assert!((a1.norm_sqr() + b1.norm_sqr() - before).abs() <= 1e-14 * before.max(1.0));
    }

    #[test]
    fn fidelity_asymptotics_stay_in_range(t in 0.0..1.0f64, dd in -1.0..1.0f64, tau in 0.0..1e4f64) {
        let (a0, b0) = (t, 1.0 - t);
        let f = approx_fidelity(a0, b0, dd, tau);
        prop_assert!(f >= (a0 - b0).powi(2) - 1e-12 && f <= 1.0 + 1e-12);
    }

    #[test]
    fn resonant_purity_stays_in_range(n in 0usize..40, p0 in 1.0..100.0f64, tau in 0.0..1e4f64) {
        let p = resonant_purity(n, 0.001, p0, tau).unwrap();
        prop_assert!((0.5..=1.0).contains(&p));
    }
}
