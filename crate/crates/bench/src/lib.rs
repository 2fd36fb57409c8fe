//! Shared fixtures for the benchmarks.

use qcwalk_core::model::{bloch_from_amplitudes, coherent_initial, AtomInit, BlochState, QcState, SystemParams};
use qcwalk_core::presets::RunConfig;

/// Chaotic Fock configuration: `n = 10`, excited atom, `δ = 0.4`, `p0 = 25`.
pub fn chaotic_fock() -> (SystemParams, QcState, BlochState) {
    let c = RunConfig::base();
    let amp = c.initial.build(&c.system).expect("base preset builds");
    let bloch = bloch_from_amplitudes(&amp);
    (c.system, amp, bloch)
}

/// Coherent field with mean photon number 10 on `N = 100`.
pub fn chaotic_coherent() -> (SystemParams, QcState) {
    let p = SystemParams::new(0.001, 0.4, 100);
    let alpha = num_complex::Complex64::new(10f64.sqrt(), 0.0);
    let s = coherent_initial(alpha, AtomInit::excited(), &p, 0.0, 25.0).expect("coherent state fits");
    (p, s)
}
