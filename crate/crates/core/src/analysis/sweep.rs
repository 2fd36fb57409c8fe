//! Detuning sweep: maximal Lyapunov exponent and purity statistics per `δ`.

use rayon::prelude::*;

use crate::dynamics::{integrate, StepController};
use crate::error::{Error, Result};
use crate::model::{bloch_from_amplitudes, InitialCondition, SystemParams};
use crate::observables::{power_spectrum, purity, purity_variance, spectral_flatness, TimeSeries, Window};

use super::lyapunov::{lyapunov_max, LyapunovConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub lyapunov: LyapunovConfig,
    /// Purity statistics use `τ ∈ [window.0, window.1]`.
    pub window: (f64, f64),
    pub sample_dt: f64,
    /// Frequency band (cycles per unit time) for the flatness measure.
    pub flatness_band: (f64, f64),
    /// A row is flagged irregular when its purity-spectrum flatness
    /// exceeds this.
    pub flatness_threshold: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lyapunov: LyapunovConfig { horizon: 1e4, ..LyapunovConfig::default() },
            window: (0.0, 1000.0),
            sample_dt: 0.1,
            flatness_band: (0.0, 1.0),
            flatness_threshold: 0.17,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.lyapunov.validate()?;
        let (t0, t1) = self.window;
        if !(t0 >= 0.0 && t1 > t0) {
            return Err(Error::InvalidParameter(format!("purity window [{t0}, {t1}] is empty")));
        }
        if !(self.sample_dt > 0.0) {
            return Err(Error::InvalidParameter("sample_dt must be positive".into()));
        }
        let (f0, f1) = self.flatness_band;
        if !(f0 >= 0.0 && f1 > f0) {
            return Err(Error::InvalidParameter(format!("flatness band [{f0}, {f1}] is empty")));
        }
        Ok(())
    }
}

/// Per-detuning outcome; `error` is set when either computation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub lambda: f64,
    pub lambda_raw: f64,
    pub lambda_spread: f64,
    pub sigma_p: f64,
    pub flatness: f64,
    pub irregular: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(delta: f64, err: &Error) -> Self {
        Self {
            delta,
            lambda: f64::NAN,
            lambda_raw: f64::NAN,
            lambda_spread: f64::NAN,
            sigma_p: f64::NAN,
            flatness: f64::NAN,
            irregular: false,
            error: Some(err.to_string()),
        }
    }
}

/// Purity statistics of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityStats {
    pub series: TimeSeries,
    pub sigma_p: f64,
    pub flatness: f64,
}

/// Purity series over `cfg.window` and its spread and spectral flatness.
pub fn purity_statistics(
    init: &InitialCondition,
    params: &SystemParams,
    cfg: &SweepConfig,
    ctrl: &StepController,
) -> Result<PurityStats> {
    let s0 = bloch_from_amplitudes(&init.build(params)?);
    let traj = integrate(&s0, params, cfg.window.1, ctrl, cfg.sample_dt)?;
    let values = traj.samples.iter().map(purity).collect::<Result<Vec<_>>>()?;
    let series = TimeSeries::new(s0.tau, cfg.sample_dt, values)?.window(cfg.window.0, cfg.window.1);
    let sigma_p = purity_variance(&series)?;
    let spectrum = power_spectrum(&series, Window::Hann)?;
    let flatness = spectral_flatness(&spectrum, cfg.flatness_band.0, cfg.flatness_band.1);
    Ok(PurityStats { series, sigma_p, flatness })
}

fn sweep_row(delta: f64, base: &SystemParams, init: &InitialCondition, cfg: &SweepConfig, ctrl: &StepController) -> SweepRow {
    let params = base.with_delta(delta);
    let run = || -> Result<SweepRow> {
        let stats = purity_statistics(init, &params, cfg, ctrl)?;
        let s0 = bloch_from_amplitudes(&init.build(&params)?);
        let mut lctrl = ctrl.clone();
        lctrl.rung_projection = true;
        let ly = lyapunov_max(&s0, &params, &cfg.lyapunov, &lctrl)?;
        Ok(SweepRow {
            delta,
            lambda: ly.lambda,
            lambda_raw: ly.lambda_raw,
            lambda_spread: ly.last_quarter_spread,
            sigma_p: stats.sigma_p,
            flatness: stats.flatness,
            irregular: stats.flatness > cfg.flatness_threshold,
            error: None,
        })
    };
    run().unwrap_or_else(|e| {
        log::error!("sweep row delta = {delta}: {e}");
        SweepRow::failed(delta, &e)
    })
}

/// One row per detuning, in grid order, computed in parallel on the
/// current rayon pool. Row failures are recorded, not propagated.
pub fn detuning_sweep(
    deltas: &[f64],
    base: &SystemParams,
    init: &InitialCondition,
    cfg: &SweepConfig,
    ctrl: &StepController,
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    base.validate()?;
    Ok(deltas.par_iter().map(|&d| sweep_row(d, base, init, cfg, ctrl)).collect())
}

/// `{start, start + step, ..., end}` with the end included up to rounding;
/// each entry is `start + i * step` rounded to 12 significant digits so
/// grids print cleanly.
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(end >= start) {
        return Err(Error::InvalidParameter(format!("bad grid {start}..{end} step {step}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| round_sig(start + i as f64 * step, 12)).collect())
}

fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

/// Jaccard index `|A ∩ B| / |A ∪ B|` of two boolean masks (1 when both
/// are empty).
pub fn jaccard(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
