//! Drivers: Lyapunov robustness, fidelity bounds, scattering determinism
//! and structure, sweep rows at the integrable and detuned ends.

use qcwalk_core::analysis::{
    detuning_sweep, fidelity_decay, fractal_refinement, lyapunov_max, scattering_scan, FidelityConfig, LyapunovConfig,
    ScatterConfig, SweepConfig,
};
use qcwalk_core::model::{bloch_from_amplitudes, BlochState, InitialCondition, SystemParams};
use qcwalk_core::presets::RunConfig;
use qcwalk_core::StepController;

fn chaotic() -> (SystemParams, InitialCondition) {
    let c = RunConfig::base();
    (c.system, c.initial)
}

fn projected(p: &SystemParams) -> StepController {
    let mut c = p.controller();
    c.rung_projection = true;
    c
}

fn start(p: &SystemParams, init: &InitialCondition) -> BlochState {
    bloch_from_amplitudes(&init.build(p).unwrap())
}

#[test]
fn lyapunov_ignores_initial_separation_and_renormalization_interval() {
    let (p, init) = chaotic();
    let s0 = start(&p, &init);
    let run = |d0: f64, renorm_interval: f64| {
        let cfg = LyapunovConfig { horizon: 1e5, renorm_interval, d0 };
        lyapunov_max(&s0, &p, &cfg, &projected(&p)).unwrap()
    };
    let reference = run(1e-8, 1.0);
    let variants = [run(1e-9, 1.0), run(1e-6, 1.0), run(1e-8, 4.0)];
    for v in &variants {
        let spread = reference.last_quarter_spread.max(v.last_quarter_spread);
        let diff = (v.lambda - reference.lambda).abs();
        assert!(
            diff <= 2.0 * spread,
            "lambda {} (d0 {}, interval {}) vs {}: diff {diff:.2e}, spread {spread:.2e}",
            v.lambda,
            v.d0,
            v.renorm_interval,
            reference.lambda
        );
    }
    assert!(reference.curve.iter().all(|(_, l)| l.is_finite()));
}

#[test]
fn fidelity_starts_at_one_and_stays_in_range() {
    let (p, init) = chaotic();
    let s0 = init.build(&p).unwrap();
    let cfg = FidelityConfig { horizon: 400.0, ..FidelityConfig::default() };
    let r = fidelity_decay(&s0, &p, &cfg, &p.controller()).unwrap();
    assert_eq!(r.series.values[0], 1.0);
    assert!(r.series.values.iter().all(|f| (0.0..=1.0).contains(f)));
    // the chaotic twins separate at a rate of order lambda (0.052 here)
    let rate = r.fit.expect("chaotic fidelity decays").rate;
    assert!((0.026..=0.104).contains(&rate), "rate {rate}");

    let same = FidelityConfig { delta_delta: 0.0, horizon: 100.0, ..FidelityConfig::default() };
    let r = fidelity_decay(&s0, &p, &same, &p.controller()).unwrap();
    assert!(r.series.values.iter().all(|&f| (f - 1.0).abs() < 1e-12));
    assert!(r.fit.is_none());
}

#[test]
fn scattering_scan_is_bit_reproducible_across_pools() {
    let (p, init) = chaotic();
    let grid: Vec<f64> = (0..8).map(|i| 45.9 + 0.125 * i as f64).collect();
    let cfg = ScatterConfig { tau_max: 2000.0, ..ScatterConfig::default() };
    let scan = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| scattering_scan(&grid, &p, &init, &cfg, &p.controller()).unwrap())
    };
    let one = scan(1);
    assert_eq!(one, scan(3));
    assert_eq!(one, scan(1));
    assert!(one.iter().all(|r| r.error.is_none() && (r.timed_out || r.t_exit > 0.0)));
}

#[test]
fn slow_atoms_stay_trapped_in_the_first_well() {
    let (p, init) = chaotic();
    let cfg = ScatterConfig { tau_max: 2000.0, ..ScatterConfig::default() };
    let recs = scattering_scan(&[5.0, 10.0, 15.0], &p, &init, &cfg, &p.controller()).unwrap();
    for r in recs {
        assert!(r.timed_out, "p0 {} left at {}", r.p0, r.t_exit);
        assert!(r.turns > 1, "p0 {}: {} turns", r.p0, r.turns);
        assert!((-std::f64::consts::FRAC_PI_2..3.0 * std::f64::consts::FRAC_PI_2).contains(&r.x_exit));
    }
}

#[test]
fn regular_exit_time_has_no_fine_structure() {
    let (p, init) = chaotic();
    let p = p.with_delta(32.0);
    let levels = fractal_refinement((45.9, 46.9), &[10, 100, 1000], &p, &init, &ScatterConfig::default(), &p.controller())
        .unwrap();
    for l in &levels {
        assert_eq!((l.segments, l.timed_out, l.failed), (1, 0, 0), "{levels:?}");
    }
}

#[test]
fn sweep_rows_at_resonance_and_far_detuning_are_regular() {
    let (p, init) = chaotic();
    let mut cfg = SweepConfig::default();
    cfg.lyapunov.horizon = 1e4;
    let rows = detuning_sweep(&[0.0, 32.0], &p, &init, &cfg, &p.controller()).unwrap();
    let (resonant, detuned) = (&rows[0], &rows[1]);
    assert!(rows.iter().all(|r| r.error.is_none()), "{rows:?}");
    // integrable at resonance, yet the purity keeps oscillating
    assert!(resonant.lambda < 0.002, "{resonant:?}");
    assert!(resonant.sigma_p > 0.05, "{resonant:?}");
    // far detuned: regular, with a purity oscillation of small depth
    assert!(detuned.lambda < 0.002, "{detuned:?}");
    assert!(detuned.sigma_p < resonant.sigma_p / 5.0, "{detuned:?} vs {resonant:?}");
}
