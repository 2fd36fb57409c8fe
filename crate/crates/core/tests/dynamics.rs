//! Integrator checks against conservation laws, time reversal, closed-form
//! solutions and tolerance refinement.

use num_complex::Complex64 as C64;

use qcwalk_core::dynamics::total_energy;
use qcwalk_core::model::{bloch_from_amplitudes, fock_initial, AtomInit, BlochState, QcState, SystemParams};
use qcwalk_core::observables::{self, purity_variance, TimeSeries};
use qcwalk_core::oracles::{free_flight_integral, resonant_purity, resonant_zn, OracleParams};
use qcwalk_core::{integrate, Evolvable};

fn params(delta: f64) -> SystemParams {
    SystemParams::new(0.001, delta, 12)
}

fn excited(p: &SystemParams) -> QcState {
    fock_initial(10, AtomInit::excited(), p, 0.0, 25.0).unwrap()
}

#[test]
fn time_reversal_recovers_regular_trajectory() {
    let p = params(32.0);
    let s0 = bloch_from_amplitudes(&excited(&p));
    let ctrl = p.controller();
    let forward = integrate(&s0, &p, 200.0, &ctrl, 200.0).unwrap();
    let turned = forward.samples.last().unwrap().time_reversed();
    let back = integrate(&turned, &p, turned.tau + 200.0, &ctrl, 200.0).unwrap();
    let end = back.samples.last().unwrap();
    assert!((end.x - s0.x).abs() < 1e-6, "x error {}", (end.x - s0.x).abs());
    assert!((end.inversion() - s0.inversion()).abs() < 1e-6);
    assert!((end.p + s0.p).abs() < 1e-6);
}

/// Agreement of the two representations on `x`, `p`, every population and
/// the inversion.
fn representation_gap(delta: f64, rel_tol: f64) -> f64 {
    let p = params(delta);
    let amp0 = excited(&p);
    let bloch0 = bloch_from_amplitudes(&amp0);
    let mut ctrl = p.controller();
    ctrl.rel_tol = rel_tol;
    ctrl.abs_tol = rel_tol / 100.0;
    let a = integrate(&amp0, &p, 500.0, &ctrl, 1.0).unwrap();
    let b = integrate(&bloch0, &p, 500.0, &ctrl, 1.0).unwrap();
    assert_eq!(a.samples.len(), b.samples.len());
    let mut gap: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let conv = bloch_from_amplitudes(sa);
        gap = gap.max((sa.x - sb.x).abs()).max((sa.p - sb.p).abs());
        gap = gap.max((sa.inversion() - sb.inversion()).abs());
        for k in 0..sb.n_rungs() {
            gap = gap.max((conv.r[k] + conv.z[k] - sb.r[k] - sb.z[k]).abs() / 2.0);
            gap = gap.max((conv.r[k] - conv.z[k] - sb.r[k] + sb.z[k]).abs() / 2.0);
        }
    }
    gap
}

#[test]
fn representations_agree_at_resonance() {
    let rel_tol = SystemParams::DEFAULT_REL_TOL;
    let gap = representation_gap(0.0, rel_tol);
    assert!(gap < 10.0 * rel_tol, "gap {gap:e}");
}

/// Off resonance the two forms accumulate independent phase errors at the
/// detuning frequency, so the gap is a multiple of the tolerance that does
/// not shrink to `10 rel_tol`; it must converge with the tolerance instead.
#[test]
fn representations_converge_off_resonance() {
    let coarse = representation_gap(32.0, 1e-10);
    let fine = representation_gap(32.0, 1e-12);
    assert!(fine < coarse / 50.0, "gap {coarse:e} -> {fine:e}");
    assert!(fine < 1e-8, "gap {fine:e}");
}

#[test]
fn halving_tolerance_leaves_regular_purity_unchanged() {
    let p = params(32.0);
    let s0 = bloch_from_amplitudes(&excited(&p));
    let coarse = p.controller();
    let mut fine = coarse.clone();
    fine.rel_tol /= 2.0;
    let end = |c| {
        let t = integrate(&s0, &p, 500.0, c, 500.0).unwrap();
        observables::purity(t.samples.last().unwrap()).unwrap()
    };
    let diff = (end(&coarse) - end(&fine)).abs();
    assert!(diff < 1e-6, "purity change {diff:e}");
}

#[test]
fn energy_is_conserved_in_chaotic_run() {
    let p = params(0.4);
    let s0 = bloch_from_amplitudes(&excited(&p));
    let e0 = total_energy(&s0, &p);
    let t = integrate(&s0, &p, 1000.0, &p.controller(), 10.0).unwrap();
    for s in &t.samples {
        assert!((total_energy(s, &p) - e0).abs() < 100.0 * SystemParams::DEFAULT_REL_TOL);
    }
}

#[test]
fn coherence_u_is_frozen_at_resonance() {
    let p = params(0.0);
    let mut s = QcState::vacuum(12, 0.3, 10.0);
    s.a[4] = C64::new(0.6, 0.0);
    s.b[4] = C64::new(0.0, 0.8);
    let s0 = bloch_from_amplitudes(&s);
    let t = integrate(&s0, &p, 100.0, &p.controller(), 1.0).unwrap();
    for st in &t.samples {
        assert!((st.u[4] - s0.u[4]).abs() < 1e-9);
    }
}

#[test]
fn resonant_inversion_matches_closed_form() {
    let p = params(0.0);
    let s0 = bloch_from_amplitudes(&excited(&p));
    let op = OracleParams::from_bloch(&s0, 10, &p).unwrap();
    let t = integrate(&s0, &p, 500.0, &p.controller(), 0.5).unwrap();
    let mut worst: f64 = 0.0;
    for st in &t.samples {
        let integral = free_flight_integral(0.0, p.omega_r, 25.0, st.tau);
        let z = resonant_zn(&op, integral, None).unwrap().value;
        worst = worst.max((st.z[10] - z).abs());
    }
    assert!(worst < 1e-8, "worst {worst:e}");
}

fn resonant_series(dt: f64, len: usize) -> (Vec<BlochState>, Vec<f64>) {
    let p = params(0.0);
    let s0 = bloch_from_amplitudes(&excited(&p));
    let t = integrate(&s0, &p, dt * (len - 1) as f64, &p.controller(), dt).unwrap();
    let closed = t.samples.iter().map(|s| resonant_purity(10, p.omega_r, 25.0, s.tau).unwrap()).collect();
    (t.samples, closed)
}

#[test]
fn resonant_purity_variance_matches_closed_form() {
    let (samples, closed) = resonant_series(0.1, 10_001);
    let numeric: Vec<f64> = samples.iter().map(|s| observables::purity(s).unwrap()).collect();
    let sn = purity_variance(&TimeSeries::new(0.0, 0.1, numeric).unwrap()).unwrap();
    let sc = purity_variance(&TimeSeries::new(0.0, 0.1, closed).unwrap()).unwrap();
    assert!((sn - sc).abs() < 1e-6, "{sn} vs {sc}");
}

#[test]
fn excited_fock_purity_follows_single_rung_formula() {
    let p = params(0.4);
    let s0 = bloch_from_amplitudes(&excited(&p));
    let t = integrate(&s0, &p, 300.0, &p.controller(), 1.0).unwrap();
    for s in &t.samples {
        let generic = observables::purity(s).unwrap();
        let single = 0.5 * (1.0 + s.z[10] * s.z[10]);
        assert!((generic - single).abs() < 1e-12);
        assert!((0.5..=1.0 + 1e-12).contains(&generic));
    }
}
