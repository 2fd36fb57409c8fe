//! Fidelity (Loschmidt echo) between twins evolved under `δ` and `δ + Δδ`.

use crate::dynamics::{b0_exact, pack_amplitude, unpack_amplitude_into, Dop853, Evolvable, Monitor, StepController};
use crate::error::{Error, Result};
use crate::model::{QcState, SystemParams};
use crate::observables::{fidelity, TimeSeries};

use super::lyapunov::Stacked;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityConfig {
    pub delta_delta: f64,
    pub horizon: f64,
    pub sample_dt: f64,
    /// The decay fit stops at the first sample with `log10(1 - f)` at or
    /// above this level.
    pub fit_ceiling_log10: f64,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self { delta_delta: 1e-4, horizon: 1000.0, sample_dt: 0.1, fit_ceiling_log10: -0.5 }
    }
}

/// Straight-line fit of `ln(1 - f)` over the initial growth window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `d ln(1 - f) / dτ`.
    pub slope: f64,
    /// Exponential rate of the state deviation, `slope / 2`: `1 - f` is
    /// quadratic in the deviation of the twins.
    pub rate: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityResult {
    pub series: TimeSeries,
    /// `None` when `1 - f` never reaches the fit ceiling (no decay).
    pub fit: Option<DecayFit>,
    pub delta_delta: f64,
}

/// Integrates twins from `s0` under `params.delta` and
/// `params.delta + Δδ`, sampling `f(τ)` every `sample_dt`.
pub fn fidelity_decay(
    s0: &QcState,
    params: &SystemParams,
    cfg: &FidelityConfig,
    ctrl: &StepController,
) -> Result<FidelityResult> {
    params.validate()?;
    if !(cfg.sample_dt > 0.0 && cfg.horizon > 0.0) {
        return Err(Error::InvalidParameter("fidelity horizon and sample_dt must be positive".into()));
    }
    if !cfg.delta_delta.is_finite() {
        return Err(Error::InvalidParameter("detuning offset must be finite".into()));
    }
    let twin_params = params.with_delta(params.delta + cfg.delta_delta);
    let series = twin_series(s0, params, &twin_params, cfg, ctrl)?;
    let fit = fit_decay(&series, cfg.fit_ceiling_log10)?;
    Ok(FidelityResult { series, fit, delta_delta: cfg.delta_delta })
}

fn twin_series(
    s0: &QcState,
    p1: &SystemParams,
    p2: &SystemParams,
    cfg: &FidelityConfig,
    ctrl: &StepController,
) -> Result<TimeSeries> {
    let base = pack_amplitude(s0);
    let d = base.len();
    let mut y = base.clone();
    y.extend_from_slice(&base);
    let sys = Stacked { first: s0.system(p1), second: s0.system(p2) };
    let mut stepper = Dop853::new(sys, s0.tau, &y, ctrl)?;
    let mut mon1 = Monitor::new(s0, p1, ctrl);
    let mut mon2 = Monitor::new(s0, p2, ctrl);
    let (mut w1, mut w2) = (s0.clone(), s0.clone());
    let unpack = |t: f64, y: &[f64], w1: &mut QcState, w2: &mut QcState| {
        unpack_amplitude_into(&y[..d], w1);
        unpack_amplitude_into(&y[d..], w2);
        w1.tau = t;
        w2.tau = t;
        w1.b0 = b0_exact(s0.b0, p1.delta, t - s0.tau);
        w2.b0 = b0_exact(s0.b0, p2.delta, t - s0.tau);
    };

    let n_samples = (cfg.horizon / cfg.sample_dt * (1.0 + 1e-12)).floor() as usize;
    let mut values = Vec::with_capacity(n_samples + 1);
    values.push(fidelity(s0, s0)?);
    let mut buf = vec![0.0; 2 * d];
    let t_end = s0.tau + n_samples as f64 * cfg.sample_dt;
    stepper.set_stop(Some(t_end));
    let mut next = 1usize;
    while next <= n_samples {
        stepper.step()?;
        if stepper.stats().accepted % ctrl.monitor_every as u64 == 0 {
            unpack(stepper.t(), stepper.y(), &mut w1, &mut w2);
            mon1.check(&w1, p1)?;
            mon2.check(&w2, p2)?;
        }
        while next <= n_samples {
            let ts = s0.tau + next as f64 * cfg.sample_dt;
            if ts > stepper.t() {
                break;
            }
            stepper.interpolate(ts, &mut buf);
            unpack(ts, &buf, &mut w1, &mut w2);
            values.push(fidelity(&w1, &w2)?);
            next += 1;
        }
    }
    unpack(stepper.t(), stepper.y(), &mut w1, &mut w2);
    mon1.check(&w1, p1)?;
    mon2.check(&w2, p2)?;
    TimeSeries::new(s0.tau, cfg.sample_dt, values)
}

/// Least-squares line through `ln(1 - f)` from the first sample with
/// `1 - f > 0` up to the first sample with `log10(1 - f) >= ceiling`.
pub fn fit_decay(series: &TimeSeries, ceiling_log10: f64) -> Result<Option<DecayFit>> {
    let deficit: Vec<f64> = series.values.iter().map(|f| 1.0 - f).collect();
    let Some(end) = deficit.iter().position(|&g| g > 0.0 && g.log10() >= ceiling_log10) else {
        return Ok(None);
    };
    let Some(start) = deficit[..=end].iter().position(|&g| g > 0.0) else {
        return Ok(None);
    };
    let pts: Vec<(f64, f64)> = (start..=end)
        .filter(|&i| deficit[i] > 0.0)
        .map(|i| (series.time(i), deficit[i].ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, have: pts.len() });
    }
    let slope = least_squares_slope(&pts);
    Ok(Some(DecayFit {
        slope,
        rate: 0.5 * slope,
        t_start: series.time(start),
        t_end: series.time(end),
        points: pts.len(),
    }))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
