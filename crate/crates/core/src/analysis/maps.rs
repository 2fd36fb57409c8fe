//! Final-state maps over a grid of initial conditions, and the
//! predictability horizon.

use rayon::prelude::*;

use crate::dynamics::{Evolvable, Propagator, StepController};
use crate::error::{Error, Result};
use crate::model::{bloch_from_amplitudes, AtomInit, InitialCondition, SystemParams};

/// One grid point: the input value and the observable at every snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct MapRow {
    pub input: f64,
    pub outputs: Vec<f64>,
    pub error: Option<String>,
}

fn snapshots<S: Evolvable>(
    s0: &S,
    params: &SystemParams,
    snaps: &[f64],
    ctrl: &StepController,
    observe: impl Fn(&S) -> f64,
) -> Result<Vec<f64>> {
    let mut prop = Propagator::new(s0, params, ctrl)?;
    let mut out = Vec::with_capacity(snaps.len());
    for &t in snaps {
        let target = s0.tau() + t;
        prop.set_stop(Some(target));
        while prop.tau() < target {
            prop.step()?;
        }
        out.push(observe(&prop.current()));
    }
    Ok(out)
}

fn check_snaps(snaps: &[f64]) -> Result<()> {
    if snaps.is_empty() || snaps.windows(2).any(|w| w[1] <= w[0]) || snaps[0] <= 0.0 {
        return Err(Error::InvalidParameter(format!("snapshot times must be positive and increasing, got {snaps:?}")));
    }
    Ok(())
}

fn map_rows(inputs: &[f64], row: impl Fn(f64) -> Result<Vec<f64>> + Sync) -> Vec<MapRow> {
    inputs
        .par_iter()
        .map(|&input| match row(input) {
            Ok(outputs) => MapRow { input, outputs, error: None },
            Err(e) => {
                log::error!("map row {input}: {e}");
                MapRow { input, outputs: Vec::new(), error: Some(e.to_string()) }
            }
        })
        .collect()
}

/// `x(τ)` at each snapshot for launches with momentum `p0`.
pub fn position_map(
    p0_grid: &[f64],
    params: &SystemParams,
    init: &InitialCondition,
    snaps: &[f64],
    ctrl: &StepController,
) -> Result<Vec<MapRow>> {
    check_snaps(snaps)?;
    params.validate()?;
    let mut ctrl = ctrl.clone();
    ctrl.rung_projection = true;
    Ok(map_rows(p0_grid, |p0| {
        let s0 = bloch_from_amplitudes(&init.with_p0(p0).build(params)?);
        snapshots(&s0, params, snaps, &ctrl, |s| s.position())
    }))
}

/// Atomic inversion at each snapshot for atoms prepared with inversion
/// `z_in` (amplitudes `sqrt((1 ± z)/2)`, relative phase `phase`).
pub fn inversion_map(
    zin_grid: &[f64],
    params: &SystemParams,
    init: &InitialCondition,
    phase: f64,
    snaps: &[f64],
    ctrl: &StepController,
) -> Result<Vec<MapRow>> {
    check_snaps(snaps)?;
    params.validate()?;
    if let Some(z) = zin_grid.iter().find(|z| !(-1.0..=1.0).contains(*z)) {
        return Err(Error::InvalidParameter(format!("inversion {z} outside [-1, 1]")));
    }
    let mut ctrl = ctrl.clone();
    ctrl.rung_projection = true;
    Ok(map_rows(zin_grid, |z| {
        let s0 = bloch_from_amplitudes(&init.with_atom(AtomInit::from_inversion(z, phase)).build(params)?);
        snapshots(&s0, params, snaps, &ctrl, |s| s.inversion())
    }))
}

/// `Σ |y_{i+1} - y_i|`.
pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// `ln(dx / dx0) / λ`; infinite when `λ <= 0`.
pub fn predictability_horizon(lambda: f64, dx: f64, dx0: f64) -> Result<f64> {
    if !(dx0 > 0.0 && dx >= dx0) || !dx.is_finite() {
        return Err(Error::InvalidParameter(format!("need dx >= dx0 > 0, got dx = {dx}, dx0 = {dx0}")));
    }
    if lambda.is_nan() {
        return Err(Error::InvalidParameter("lambda is NaN".into()));
    }
    if lambda <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((dx / dx0).ln() / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FieldInit;
    use approx::assert_abs_diff_eq;

    #[test]
    fn horizon_examples() {
        assert_eq!(predictability_horizon(0.04, 1e-3, 1e-3).unwrap(), 0.0);
        assert_abs_diff_eq!(predictability_horizon(0.04, 1.0, 1e-3).unwrap(), 1000f64.ln() / 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(predictability_horizon(0.04, 1.0, 1e-3).unwrap(), 172.69388197455342, epsilon = 1e-9);
        let h1 = predictability_horizon(0.04, 1.0, 2e-3).unwrap();
        let h2 = predictability_horizon(0.04, 1.0, 1e-3).unwrap();
        assert_abs_diff_eq!(h2 - h1, 2f64.ln() / 0.04, epsilon = 1e-12);
        assert_eq!(predictability_horizon(0.0, 1.0, 1e-3).unwrap(), f64::INFINITY);
        assert!(predictability_horizon(0.04, 1e-4, 1e-3).is_err());
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&[]), 0.0);
        assert_eq!(total_variation(&[1.0, 3.0, 2.0]), 3.0);
    }

    #[test]
    fn resonant_free_flight_position() {
        let params = SystemParams::new(0.001, 0.0, 12);
        let init = InitialCondition { field: FieldInit::Fock(10), atom: AtomInit::excited(), x0: 0.0, p0: 0.0 };
        let rows = position_map(&[10.0, 25.0, -40.0], &params, &init, &[50.0, 300.0], &params.controller()).unwrap();
        for r in rows {
            assert_abs_diff_eq!(r.outputs[0], 0.001 * r.input * 50.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.outputs[1], 0.001 * r.input * 300.0, epsilon = 1e-12);
        }
    }
}
