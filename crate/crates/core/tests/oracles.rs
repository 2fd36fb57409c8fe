//! Integrator against the asymptotic inversion in both scale-separated
//! regimes.

mod common;

use qcwalk_core::model::SystemParams;
use qcwalk_core::oracles::ApproxRegime;

use common::asymptotic_envelope_error;

fn ctrl() -> qcwalk_core::StepController {
    SystemParams::new(0.001, 1.0, 13).controller()
}

#[test]
fn large_detuning_envelope_within_perturbation_bound() {
    let (gap, ratio) = asymptotic_envelope_error(ApproxRegime::LargeDetuning, 32.0, 25.0, 200.0, &ctrl());
    let eps = 2.0 * 11f64.sqrt() / 32.0;
    assert!((ratio - 1.0 / eps).abs() < 1e-12);
    assert!(gap < 10.0 * eps, "gap {gap}");
    // the bound is loose; the envelope actually tracks to a fraction of it
    assert!(gap < eps / 4.0, "gap {gap}");
}

#[test]
fn fast_atom_envelope_tightens_with_speed() {
    let errors: Vec<(f64, f64)> = [1e5, 1e6, 1e7]
        .iter()
        .map(|&p0| asymptotic_envelope_error(ApproxRegime::FastAtom, 0.4, p0, 2.0, &ctrl()))
        .collect();
    for w in errors.windows(2) {
        assert!(w[1].0 < w[0].0, "{errors:?}");
    }
    // neglected terms are second order in the inverse separation ratio
    let (first, last) = (errors[0], errors[2]);
    assert!(last.0 / first.0 < 10.0 * (first.1 / last.1).powi(2), "{errors:?}");
}
