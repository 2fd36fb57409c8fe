//! Exit-time scattering from one well of the standing wave and the
//! refinement study of its fractal structure.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dynamics::{Evolvable, Propagator, StepController};
use crate::error::{Error, Result};
use crate::model::{bloch_from_amplitudes, InitialCondition, SystemParams};

/// Exit nodes on either side of the launch point `x = 0`.
pub const LEFT_NODE: f64 = -PI / 2.0;
pub const RIGHT_NODE: f64 = 3.0 * PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterConfig {
    pub tau_max: f64,
    /// A reversal of `p` is counted once `|p|` exceeds this with the new
    /// sign.
    pub hysteresis: f64,
    /// Bisection stops when the exit time is bracketed this tightly.
    pub time_tol: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self { tau_max: 1e4, hysteresis: 0.1, time_tol: 1e-6 }
    }
}

impl ScatterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_max > 0.0 && self.hysteresis >= 0.0 && self.time_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("bad scattering settings {self:?}")));
        }
        Ok(())
    }
}

/// Outcome of one launch. Timed-out records carry `t_exit = tau_max` and
/// the state reached at that time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRecord {
    pub p0: f64,
    pub t_exit: f64,
    pub turns: u32,
    pub x_exit: f64,
    pub z_out: f64,
    pub timed_out: bool,
    pub error: Option<String>,
}

/// Tracks reversals of the momentum with hysteresis.
#[derive(Debug, Clone, Copy)]
struct TurnCounter {
    sign: i8,
    turns: u32,
    threshold: f64,
}

impl TurnCounter {
    fn new(p0: f64, threshold: f64) -> Self {
        let mut c = Self { sign: 0, turns: 0, threshold };
        c.observe(p0);
        c
    }

    fn observe(&mut self, p: f64) {
        let s = if p > self.threshold {
            1
        } else if p < -self.threshold {
            -1
        } else {
            return;
        };
        if self.sign != 0 && s != self.sign {
            self.turns += 1;
        }
        self.sign = s;
    }
}

fn outside(x: f64) -> bool {
    x <= LEFT_NODE || x >= RIGHT_NODE
}

/// Launches one atom from `init` with momentum `p0`.
pub fn scatter_one(
    init: &InitialCondition,
    p0: f64,
    params: &SystemParams,
    cfg: &ScatterConfig,
    ctrl: &StepController,
) -> Result<ScatterRecord> {
    let s0 = bloch_from_amplitudes(&init.with_p0(p0).build(params)?);
    if outside(s0.x) {
        return Err(Error::InvalidParameter(format!("launch point x0 = {} is outside the cell", s0.x)));
    }
    let mut prop = Propagator::new(&s0, params, ctrl)?;
    let t_end = s0.tau + cfg.tau_max;
    prop.set_stop(Some(t_end));
    let mut counter = TurnCounter::new(p0, cfg.hysteresis);
    while prop.tau() < t_end {
        prop.step()?;
        let (x, p) = prop.position_momentum();
        if outside(x) {
            let (mut a, mut b) = prop.last_step();
            while b - a > cfg.time_tol {
                let mid = 0.5 * (a + b);
                if outside(prop.position_momentum_at(mid).0) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let s = prop.state_at(b);
            return Ok(ScatterRecord {
                p0,
                t_exit: b - s0.tau,
                turns: counter.turns,
                x_exit: s.position(),
                z_out: s.inversion(),
                timed_out: false,
                error: None,
            });
        }
        counter.observe(p);
    }
    prop.check_now()?;
    let s = prop.current();
    Ok(ScatterRecord {
        p0,
        t_exit: cfg.tau_max,
        turns: counter.turns,
        x_exit: s.position(),
        z_out: s.inversion(),
        timed_out: true,
        error: None,
    })
}

/// One record per launch momentum, in grid order. Long runs use invariant
/// projection; per-row failures are recorded, not propagated.
pub fn scattering_scan(
    p0_grid: &[f64],
    params: &SystemParams,
    init: &InitialCondition,
    cfg: &ScatterConfig,
    ctrl: &StepController,
) -> Result<Vec<ScatterRecord>> {
    cfg.validate()?;
    params.validate()?;
    let mut ctrl = ctrl.clone();
    ctrl.rung_projection = true;
    Ok(p0_grid
        .par_iter()
        .map(|&p0| {
            scatter_one(init, p0, params, cfg, &ctrl).unwrap_or_else(|e| {
                log::error!("scattering p0 = {p0}: {e}");
                ScatterRecord {
                    p0,
                    t_exit: f64::NAN,
                    turns: 0,
                    x_exit: f64::NAN,
                    z_out: f64::NAN,
                    timed_out: false,
                    error: Some(e.to_string()),
                }
            })
        })
        .collect())
}

/// Number of maximal monotone runs: one more than the number of sign
/// changes among the nonzero successive differences.
pub fn count_monotone_segments(values: &[f64]) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut segments = 1;
    let mut last = 0.0f64;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 || d.is_nan() {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            segments += 1;
        }
        last = d;
    }
    segments
}

/// `n` equally spaced points spanning `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementLevel {
    pub points: usize,
    pub segments: usize,
    pub timed_out: usize,
    pub failed: usize,
    /// `segments / previous level's segments`; `None` on the first level.
    pub growth: Option<f64>,
}

/// Monotone-segment count of `T(p0)` on successively finer grids over
/// `window`.
pub fn fractal_refinement(
    window: (f64, f64),
    levels: &[usize],
    params: &SystemParams,
    init: &InitialCondition,
    cfg: &ScatterConfig,
    ctrl: &StepController,
) -> Result<Vec<RefinementLevel>> {
    if !(window.1 > window.0) {
        return Err(Error::InvalidParameter(format!("empty window {window:?}")));
    }
    let mut out: Vec<RefinementLevel> = Vec::with_capacity(levels.len());
    for &n in levels {
        let recs = scattering_scan(&linspace(window.0, window.1, n), params, init, cfg, ctrl)?;
        let times: Vec<f64> = recs.iter().map(|r| r.t_exit).collect();
        let segments = count_monotone_segments(&times);
        let growth = out.last().map(|prev| segments as f64 / prev.segments as f64);
        out.push(RefinementLevel {
            points: n,
            segments,
            timed_out: recs.iter().filter(|r| r.timed_out).count(),
            failed: recs.iter().filter(|r| r.error.is_some()).count(),
            growth,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomInit, FieldInit};
    use approx::assert_relative_eq;

    #[test]
    fn segment_counts() {
        assert_eq!(count_monotone_segments(&[]), 0);
        assert_eq!(count_monotone_segments(&[3.0]), 1);
        assert_eq!(count_monotone_segments(&[1.0, 2.0, 3.0]), 1);
        assert_eq!(count_monotone_segments(&[1.0, 2.0, 2.0, 1.0]), 2);
        assert_eq!(count_monotone_segments(&[5.0, 5.0, 5.0]), 1);
        assert_eq!(count_monotone_segments(&[1.0, 3.0, 2.0, 4.0, 0.0]), 4);
    }

    #[test]
    fn turn_counter_hysteresis() {
        let mut c = TurnCounter::new(1.0, 0.1);
        for p in [0.5, 0.05, -0.05, 0.02, -0.08, -0.2, -1.0, 0.09, 0.3] {
            c.observe(p);
        }
        assert_eq!(c.turns, 2);
    }

    #[test]
    fn linspace_ends() {
        let g = linspace(45.9, 46.9, 11);
        assert_eq!(g[0], 45.9);
        assert_eq!(g[10], 46.9);
    }

    #[test]
    fn ballistic_transit() {
        let params = SystemParams::new(0.001, 0.4, 12);
        let init = InitialCondition { field: FieldInit::Fock(10), atom: AtomInit::excited(), x0: 0.0, p0: 0.0 };
        let p0 = 1e5;
        let r = scatter_one(&init, p0, &params, &ScatterConfig::default(), &params.controller()).unwrap();
        assert!(!r.timed_out);
        assert_eq!(r.turns, 0);
        assert_relative_eq!(r.t_exit, RIGHT_NODE / (0.001 * p0), max_relative = 1e-3);
        assert!((r.x_exit - RIGHT_NODE).abs() < 1e-4);
        let r = scatter_one(&init, -p0, &params, &ScatterConfig::default(), &params.controller()).unwrap();
        assert_relative_eq!(r.t_exit, -LEFT_NODE / (0.001 * p0), max_relative = 1e-3);
    }
}
