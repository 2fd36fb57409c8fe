//! Maximal Lyapunov exponent by the two-trajectory (Benettin) scheme.
//!
//! Reference and shadow trajectories are integrated as one stacked system so
//! both see the same step sequence; separation is measured in the Euclidean
//! metric of the packed phase-space vector and renormalized to `d0` at a
//! fixed cadence. With rung projection enabled both copies are put back on
//! the initial rung spheres and energy shell after each renormalization, so
//! the shadow explores the same invariant level set.

use crate::dynamics::{Dop853, Evolvable, Monitor, OdeSystem, StepController};
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Two equally sized systems evolved side by side in one state vector.
#[derive(Debug, Clone)]
pub struct Stacked<S> {
    pub first: S,
    pub second: S,
}

impl<S: OdeSystem> OdeSystem for Stacked<S> {
    fn dim(&self) -> usize {
        self.first.dim() + self.second.dim()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let d = self.first.dim();
        let (y1, y2) = y.split_at(d);
        let (d1, d2) = dy.split_at_mut(d);
        self.first.rhs(y1, d1);
        self.second.rhs(y2, d2);
    }
}

/// Benettin-scheme settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConfig {
    pub horizon: f64,
    pub renorm_interval: f64,
    pub d0: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self { horizon: 1e5, renorm_interval: 1.0, d0: 1e-8 }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.renorm_interval > 0.0 && self.renorm_interval <= self.horizon) {
            return Err(Error::InvalidParameter(format!(
                "renormalization interval must lie in (0, horizon], got {}",
                self.renorm_interval
            )));
        }
        if !(1e-9..=1e-6).contains(&self.d0) {
            return Err(Error::InvalidParameter(format!("d0 must lie in [1e-9, 1e-6], got {}", self.d0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovResult {
    /// Reported exponent, clamped at zero.
    pub lambda: f64,
    /// Unclamped running-average estimate at the horizon.
    pub lambda_raw: f64,
    /// Running estimate `(τ, λ(τ))` after every renormalization.
    pub curve: Vec<(f64, f64)>,
    /// `max - min` of the running estimate over the last quarter of the run.
    pub last_quarter_spread: f64,
    pub renorm_interval: f64,
    pub horizon: f64,
    pub d0: f64,
}

/// Separation above which the linearized picture is considered broken.
pub const MAX_SEPARATION: f64 = 1e-2;

/// Maximal Lyapunov exponent of the trajectory starting at `s0`.
pub fn lyapunov_max<S: Evolvable>(
    s0: &S,
    params: &SystemParams,
    cfg: &LyapunovConfig,
    ctrl: &StepController,
) -> Result<LyapunovResult> {
    cfg.validate()?;
    params.validate()?;
    let base = s0.pack();
    let d = base.len();
    let mut y = Vec::with_capacity(2 * d);
    y.extend_from_slice(&base);
    let kick = cfg.d0 / (d as f64).sqrt();
    y.extend(base.iter().map(|v| v + kick));
    let mut stepper = Dop853::new(Stacked { first: s0.system(params), second: s0.system(params) }, s0.tau(), &y, ctrl)?;

    let mut monitor = Monitor::new(s0, params, ctrl);
    let mut scratch = s0.clone();
    let t0 = s0.tau();
    let n_renorm = (cfg.horizon / cfg.renorm_interval).round().max(1.0) as usize;
    let mut curve = Vec::with_capacity(n_renorm);
    let mut log_sum = 0.0;
    let mut buf = vec![0.0; 2 * d];

    for k in 1..=n_renorm {
        let target = t0 + k as f64 * cfg.renorm_interval;
        stepper.set_stop(Some(target));
        while stepper.t() < target {
            stepper.step()?;
            if stepper.stats().accepted % ctrl.monitor_every as u64 == 0 {
                s0.unpack_into(params, stepper.t(), &stepper.y()[..d], &mut scratch);
                monitor.check(&scratch, params)?;
            }
        }
        buf.copy_from_slice(stepper.y());
        let (y1, y2) = buf.split_at_mut(d);
        let sep = y1.iter().zip(y2.iter()).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        if !(sep > 0.0 && sep.is_finite() && sep <= MAX_SEPARATION) {
            return Err(Error::Separation { separation: sep, tau: target });
        }
        log_sum += (sep / cfg.d0).ln();
        curve.push((target, log_sum / (target - t0)));
        if ctrl.rung_projection {
            s0.project_packed(params, y1);
            s0.project_packed(params, y2);
        }
        let now = y1.iter().zip(y2.iter()).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        if !(now > 0.0) {
            return Err(Error::Separation { separation: now, tau: target });
        }
        let scale = cfg.d0 / now;
        for (b, a) in y2.iter_mut().zip(y1.iter()) {
            *b = a + (*b - a) * scale;
        }
        stepper.reset_state(&buf);
    }
    s0.unpack_into(params, stepper.t(), &stepper.y()[..d], &mut scratch);
    monitor.check(&scratch, params)?;

    let lambda_raw = curve.last().map_or(0.0, |c| c.1);
    let quarter = &curve[curve.len() - curve.len().div_ceil(4)..];
    let (lo, hi) = quarter
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, l)| (lo.min(l), hi.max(l)));
    Ok(LyapunovResult {
        lambda: lambda_raw.max(0.0),
        lambda_raw,
        curve,
        last_quarter_spread: hi - lo,
        renorm_interval: cfg.renorm_interval,
        horizon: cfg.horizon,
        d0: cfg.d0,
    })
}
