//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

use qcwalk_core::model::{bloch_from_amplitudes, QcState, SystemParams};
use qcwalk_core::oracles::{approx_zn_fast_or_detuned, ApproxRegime, OracleParams};
use qcwalk_core::{integrate, StepController};

/// Largest gap between the running maxima, or the running minima, of two
/// equally sampled signals over every window of `width` samples. Blind to
/// slow phase slips that a pointwise comparison would count as full-swing
/// errors.
pub fn envelope_gap(a: &[f64], b: &[f64], width: usize) -> f64 {
    assert_eq!(a.len(), b.len());
    assert!(width >= 1 && width <= a.len());
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    (0..=a.len() - width)
        .map(|i| {
            let (wa, wb) = (&a[i..i + width], &b[i..i + width]);
            (max(wa) - max(wb)).abs().max((min(wa) - min(wb)).abs())
        })
        .fold(0.0, f64::max)
}

/// Rung `n = 10` in the equal real superposition `a_10 = b_11 = 1/sqrt(2)`,
/// launched from `x0 = 0` with `p0 = 25`.
pub fn single_rung_state(n_trunc: usize) -> QcState {
    let mut s = QcState::vacuum(n_trunc, 0.0, 25.0);
    let h = C64::new(0.5f64.sqrt(), 0.0);
    s.a[10] = h;
    s.b[10] = h;
    s
}

/// Envelope gap between the integrated `z_10` and the asymptotic
/// inversion of `regime` over `τ ∈ [0, horizon]`, sampled 64 times per
/// period of the fast oscillation (the detuning, or the transit of one
/// wavelength for a fast atom) and compared over one-period windows. Also
/// returns the regime separation ratio.
pub fn asymptotic_envelope_error(
    regime: ApproxRegime,
    delta: f64,
    p0: f64,
    horizon: f64,
    ctrl: &StepController,
) -> (f64, f64) {
    let params = SystemParams::new(0.001, delta, 13);
    let mut start = single_rung_state(13);
    start.p = p0;
    let s0 = bloch_from_amplitudes(&start);
    let op = OracleParams::from_bloch(&s0, 10, &params).unwrap();
    let fast = match regime {
        ApproxRegime::LargeDetuning => delta.abs(),
        ApproxRegime::FastAtom => params.omega_r * p0.abs(),
    };
    let per_period = 64;
    let dt = 2.0 * std::f64::consts::PI / fast / per_period as f64;
    let traj = integrate(&s0, &params, horizon, ctrl, dt).unwrap();
    let numeric: Vec<f64> = traj.samples.iter().map(|s| s.z[10]).collect();
    let oracle: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| approx_zn_fast_or_detuned(&op, Some(regime), s.x, s.tau).unwrap().value)
        .collect();
    (envelope_gap(&numeric, &oracle, per_period), regime.ratio(&op))
}

/// [`asymptotic_envelope_error`] for the large-detuning branch at
/// `p0 = 25`.
pub fn large_detuning_envelope_error(delta: f64, horizon: f64, ctrl: &StepController) -> (f64, f64) {
    asymptotic_envelope_error(ApproxRegime::LargeDetuning, delta, 25.0, horizon, ctrl)
}
