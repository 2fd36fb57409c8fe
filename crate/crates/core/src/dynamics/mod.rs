//! Equations of motion, the adaptive integrator, and conserved-quantity
//! monitors.

mod dop853;
mod rhs;

pub use dop853::{Dop853, OdeSystem, StepController, StepStats};
pub use rhs::{
    rhs_amplitude, rhs_bloch, rhs_fock, AmplitudeDerivative, AmplitudeSystem, BlochDerivative, BlochSystem,
    FockSystem,
};
pub(crate) use rhs::{pack_amplitude, pack_bloch, unpack_amplitude_into, unpack_bloch_into};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{BlochState, QcState, SystemParams};

/// Invariant drift allowed by the monitors, in units of `rel_tol`.
pub const DRIFT_FACTOR: f64 = 100.0;

/// Exact evolution of the isolated ground amplitude `b_0`.
pub fn b0_exact(b0_init: C64, delta: f64, tau: f64) -> C64 {
    b0_init * C64::from_polar(1.0, -0.5 * delta * tau)
}

/// A state that can be handed to the integrator.
pub trait Evolvable: Clone + Send + Sync {
    type System: OdeSystem + Send;

    fn tau(&self) -> f64;
    fn system(&self, params: &SystemParams) -> Self::System;
    fn pack(&self) -> Vec<f64>;
    /// Writes the state encoded by `y` at time `tau` into `out`, taking the
    /// non-integrated parts from `self` (the initial state).
    fn unpack_into(&self, params: &SystemParams, tau: f64, y: &[f64], out: &mut Self);
    /// `R_k` evaluated from the current dynamical variables.
    fn rung_norms(&self) -> Vec<f64>;
    fn energy(&self, params: &SystemParams) -> f64;
    /// Population of the highest kept Fock level.
    fn top_level_probability(&self) -> f64;
    /// Atomic inversion `z = sum |a_n|^2 - sum |b_n|^2`.
    fn inversion(&self) -> f64;
    fn position(&self) -> f64;
    fn momentum(&self) -> f64;

    /// Pulls the packed vector `y` back onto the invariant set of `self`
    /// (the initial state): rung norms and total energy.
    fn project_packed(&self, params: &SystemParams, y: &mut [f64]);

    /// Upper bound on the magnitude of the individual energy terms; the
    /// energy monitor measures drift relative to `max(1, scale)`.
    fn energy_scale(&self, params: &SystemParams) -> f64 {
        let p = self.momentum();
        let mut scale = 0.5 * params.omega_r * p * p;
        for (k, r) in self.rung_norms().iter().enumerate() {
            scale += (0.5 * params.delta.abs() + ((k + 1) as f64).sqrt()) * r;
        }
        scale.max(1.0)
    }
}

impl Evolvable for QcState {
    type System = AmplitudeSystem;

    fn tau(&self) -> f64 {
        self.tau
    }

    fn system(&self, params: &SystemParams) -> AmplitudeSystem {
        AmplitudeSystem::new(params, self.n_rungs())
    }

    fn pack(&self) -> Vec<f64> {
        pack_amplitude(self)
    }

    fn unpack_into(&self, params: &SystemParams, tau: f64, y: &[f64], out: &mut Self) {
        unpack_amplitude_into(y, out);
        out.tau = tau;
        out.b0 = b0_exact(self.b0, params.delta, tau - self.tau);
    }

    fn rung_norms(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }

    fn energy(&self, params: &SystemParams) -> f64 {
        let mut zsum = 0.0;
        let mut coupling = 0.0;
        for (k, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            zsum += a.norm_sqr() - b.norm_sqr();
            coupling += ((k + 1) as f64).sqrt() * (a * b.conj()).re;
        }
        0.5 * params.omega_r * self.p * self.p - 0.5 * params.delta * zsum - 2.0 * self.x.cos() * coupling
    }

    fn project_packed(&self, params: &SystemParams, y: &mut [f64]) {
        let blocks: Vec<(usize, usize, f64)> = self
            .a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(k, (a, b))| (2 + 4 * k, 4, (a.norm_sqr() + b.norm_sqr()).sqrt()))
            .collect();
        let (w, d) = (params.omega_r, params.delta);
        project_onto_invariants(y, &blocks, self.energy(params), |y, g| {
            let (x, p) = (y[0], y[1]);
            let (sx, cx) = x.sin_cos();
            g.iter_mut().for_each(|v| *v = 0.0);
            let mut zsum = 0.0;
            let mut coupling = 0.0;
            for k in 0..blocks.len() {
                let o = 2 + 4 * k;
                let (ar, ai, br, bi) = (y[o], y[o + 1], y[o + 2], y[o + 3]);
                let s = ((k + 1) as f64).sqrt();
                zsum += ar * ar + ai * ai - br * br - bi * bi;
                coupling += s * (ar * br + ai * bi);
                g[o] = -d * ar - 2.0 * cx * s * br;
                g[o + 1] = -d * ai - 2.0 * cx * s * bi;
                g[o + 2] = d * br - 2.0 * cx * s * ar;
                g[o + 3] = d * bi - 2.0 * cx * s * ai;
            }
            g[0] = 2.0 * sx * coupling;
            g[1] = w * p;
            0.5 * w * p * p - 0.5 * d * zsum - 2.0 * cx * coupling
        });
    }

    fn top_level_probability(&self) -> f64 {
        self.b.last().map_or(self.b0.norm_sqr(), |b| b.norm_sqr())
    }

    fn inversion(&self) -> f64 {
        let excited: f64 = self.a.iter().map(|c| c.norm_sqr()).sum();
        let ground: f64 = self.b0.norm_sqr() + self.b.iter().map(|c| c.norm_sqr()).sum::<f64>();
        excited - ground
    }

    fn position(&self) -> f64 {
        self.x
    }

    fn momentum(&self) -> f64 {
        self.p
    }
}

/// Either the full Bloch ladder or its two-rung Fock reduction.
#[derive(Debug, Clone)]
pub enum BlochDynamics {
    Fock(FockSystem),
    Full(BlochSystem),
}

impl BlochDynamics {
    pub fn window(&self) -> (usize, usize) {
        match self {
            BlochDynamics::Fock(f) => (f.first_rung(), f.n_rungs()),
            BlochDynamics::Full(b) => (b.first_rung, b.n_rungs()),
        }
    }
}

impl OdeSystem for BlochDynamics {
    fn dim(&self) -> usize {
        match self {
            BlochDynamics::Fock(f) => f.dim(),
            BlochDynamics::Full(b) => b.dim(),
        }
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        match self {
            BlochDynamics::Fock(f) => f.rhs(y, dy),
            BlochDynamics::Full(b) => b.rhs(y, dy),
        }
    }
}

impl BlochState {
    fn window(&self) -> (usize, usize) {
        match self.fock_index() {
            Some(0) => (0, 1),
            Some(n) => (n - 1, 2),
            None => (0, self.n_rungs()),
        }
    }
}

impl Evolvable for BlochState {
    type System = BlochDynamics;

    fn tau(&self) -> f64 {
        self.tau
    }

    fn system(&self, params: &SystemParams) -> BlochDynamics {
        match self.fock_index() {
            Some(n) => BlochDynamics::Fock(FockSystem::new(params, n)),
            None => BlochDynamics::Full(BlochSystem::new(params, 0, self.n_rungs())),
        }
    }

    fn pack(&self) -> Vec<f64> {
        let (first, count) = self.window();
        pack_bloch(self, first, count)
    }

    fn unpack_into(&self, _params: &SystemParams, tau: f64, y: &[f64], out: &mut Self) {
        let (first, _) = self.window();
        unpack_bloch_into(y, first, out);
        out.tau = tau;
    }

    fn rung_norms(&self) -> Vec<f64> {
        (0..self.n_rungs()).map(|k| self.radius(k)).collect()
    }

    fn energy(&self, params: &SystemParams) -> f64 {
        let mut zsum = 0.0;
        let mut coupling = 0.0;
        for k in 0..self.n_rungs() {
            zsum += self.z[k];
            coupling += ((k + 1) as f64).sqrt() * self.u[k];
        }
        0.5 * params.omega_r * self.p * self.p - 0.5 * params.delta * zsum - self.x.cos() * coupling
    }

    fn project_packed(&self, params: &SystemParams, y: &mut [f64]) {
        let (first, count) = self.window();
        let blocks: Vec<(usize, usize, f64)> = (0..count).map(|j| (2 + 3 * j, 3, self.r[first + j])).collect();
        let (w, d) = (params.omega_r, params.delta);
        project_onto_invariants(y, &blocks, self.energy(params), |y, g| {
            let (x, p) = (y[0], y[1]);
            let (sx, cx) = x.sin_cos();
            let mut zsum = 0.0;
            let mut coupling = 0.0;
            for j in 0..count {
                let o = 2 + 3 * j;
                let s = ((first + j + 1) as f64).sqrt();
                zsum += y[o + 2];
                coupling += s * y[o];
                g[o] = -cx * s;
                g[o + 1] = 0.0;
                g[o + 2] = -0.5 * d;
            }
            g[0] = sx * coupling;
            g[1] = w * p;
            0.5 * w * p * p - 0.5 * d * zsum - cx * coupling
        });
    }

    fn top_level_probability(&self) -> f64 {
        let k = self.n_rungs() - 1;
        0.5 * (self.r[k] - self.z[k])
    }

    fn inversion(&self) -> f64 {
        self.z.iter().sum::<f64>() - self.b0_mag2
    }

    fn position(&self) -> f64 {
        self.x
    }

    fn momentum(&self) -> f64 {
        self.p
    }
}

fn renormalize_blocks(y: &mut [f64], blocks: &[(usize, usize, f64)]) {
    for &(o, len, target) in blocks {
        let block = &mut y[o..o + len];
        let now = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if now > 0.0 { target / now } else { 0.0 };
        block.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Rung renormalization, then one Newton step on the energy along its
/// gradient made tangent to every rung sphere, then renormalization again.
/// `energy` returns `E(y)` and writes `∇E` into its second argument.
fn project_onto_invariants(
    y: &mut [f64],
    blocks: &[(usize, usize, f64)],
    e0: f64,
    energy: impl Fn(&[f64], &mut [f64]) -> f64,
) {
    renormalize_blocks(y, blocks);
    let mut g = vec![0.0; y.len()];
    let e = energy(y, &mut g);
    for &(o, len, _) in blocks {
        let (yb, gb) = (&y[o..o + len], &mut g[o..o + len]);
        let nn: f64 = yb.iter().map(|v| v * v).sum();
        if nn > 0.0 {
            let c = yb.iter().zip(gb.iter()).map(|(a, b)| a * b).sum::<f64>() / nn;
            gb.iter_mut().zip(yb).for_each(|(gv, yv)| *gv -= c * yv);
        } else {
            gb.iter_mut().for_each(|gv| *gv = 0.0);
        }
    }
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if gg > 0.0 {
        let c = (e - e0) / gg;
        y.iter_mut().zip(&g).for_each(|(yv, gv)| *yv -= c * gv);
    }
    renormalize_blocks(y, blocks);
}

/// Conserved norm `R_n` of rung `n`.
pub fn integral_r<S: Evolvable>(s: &S, n: usize) -> f64 {
    s.rung_norms().get(n).copied().unwrap_or(0.0)
}

pub fn total_energy<S: Evolvable>(s: &S, params: &SystemParams) -> f64 {
    s.energy(params)
}

/// Largest invariant drifts seen by the monitors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DriftReport {
    pub max_rung_drift: f64,
    /// Absolute energy drift; the monitor limit is scaled by
    /// [`Evolvable::energy_scale`].
    pub max_energy_drift: f64,
    pub max_top_level: f64,
}

/// Continuous monitor of `R_n`, energy and truncation leakage.
#[derive(Debug, Clone)]
pub struct Monitor {
    r0: Vec<f64>,
    e0: f64,
    e_scale: f64,
    pub drift_limit: f64,
    pub leak_tol: f64,
    pub report: DriftReport,
}

impl Monitor {
    pub fn new<S: Evolvable>(s0: &S, params: &SystemParams, ctrl: &StepController) -> Self {
        Self {
            r0: s0.rung_norms(),
            e0: s0.energy(params),
            e_scale: s0.energy_scale(params),
            drift_limit: DRIFT_FACTOR * ctrl.rel_tol,
            leak_tol: params.leak_tol,
            report: DriftReport::default(),
        }
    }

    pub fn check<S: Evolvable>(&mut self, s: &S, params: &SystemParams) -> Result<()> {
        let tau = s.tau();
        for (k, (r, r0)) in s.rung_norms().iter().zip(&self.r0).enumerate() {
            let drift = (r - r0).abs();
            self.report.max_rung_drift = self.report.max_rung_drift.max(drift);
            if drift > self.drift_limit {
                return Err(Error::InvariantDrift { name: format!("R_{k}"), drift, limit: self.drift_limit, tau });
            }
        }
        let drift = (s.energy(params) - self.e0).abs();
        self.report.max_energy_drift = self.report.max_energy_drift.max(drift);
        let limit = self.drift_limit * self.e_scale;
        if drift > limit {
            return Err(Error::InvariantDrift { name: "E".into(), drift, limit, tau });
        }
        let top = s.top_level_probability();
        self.report.max_top_level = self.report.max_top_level.max(top);
        if top > self.leak_tol {
            return Err(Error::Leak { tau, prob: top });
        }
        Ok(())
    }
}

/// Step-by-step propagation of one state with monitors and dense output.
pub struct Propagator<S: Evolvable> {
    template: S,
    params: SystemParams,
    stepper: Dop853<S::System>,
    scratch: S,
    monitor: Monitor,
    monitor_every: usize,
    project: bool,
    projection_due: bool,
    ybuf: Vec<f64>,
}

impl<S: Evolvable> Propagator<S> {
    pub fn new(s0: &S, params: &SystemParams, ctrl: &StepController) -> Result<Self> {
        params.validate()?;
        let sys = s0.system(params);
        let stepper = Dop853::new(sys, s0.tau(), &s0.pack(), ctrl)?;
        let mut monitor = Monitor::new(s0, params, ctrl);
        monitor.check(s0, params)?;
        Ok(Self {
            template: s0.clone(),
            params: params.clone(),
            stepper,
            scratch: s0.clone(),
            monitor,
            monitor_every: ctrl.monitor_every,
            project: ctrl.rung_projection,
            projection_due: false,
            ybuf: s0.pack(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.stepper.t()
    }

    pub fn stats(&self) -> StepStats {
        self.stepper.stats()
    }

    pub fn drift(&self) -> DriftReport {
        self.monitor.report
    }

    pub fn set_stop(&mut self, tau: Option<f64>) {
        self.stepper.set_stop(tau);
    }

    /// One accepted step; monitors run on their cadence. With rung
    /// projection enabled, the state is projected at the start of the step
    /// following a monitor check, so dense output of the step just taken is
    /// never invalidated.
    pub fn step(&mut self) -> Result<()> {
        if self.projection_due {
            self.ybuf.copy_from_slice(self.stepper.y());
            self.template.project_packed(&self.params, &mut self.ybuf);
            self.stepper.reset_state(&self.ybuf);
            self.projection_due = false;
        }
        self.stepper.step()?;
        if self.stepper.stats().accepted.is_multiple_of(self.monitor_every as u64) {
            self.check_now()?;
            self.projection_due = self.project;
        }
        Ok(())
    }

    pub fn check_now(&mut self) -> Result<()> {
        let t = self.stepper.t();
        self.template.unpack_into(&self.params, t, self.stepper.y(), &mut self.scratch);
        self.monitor.check(&self.scratch, &self.params)
    }

    /// `(x, p)` at the end of the last accepted step; both layouts store
    /// them first.
    pub fn position_momentum(&self) -> (f64, f64) {
        let y = self.stepper.y();
        (y[0], y[1])
    }

    /// `(x, p)` at `tau` inside the last accepted step.
    pub fn position_momentum_at(&mut self, tau: f64) -> (f64, f64) {
        self.stepper.interpolate(tau, &mut self.ybuf);
        (self.ybuf[0], self.ybuf[1])
    }

    /// State at the end of the last accepted step.
    pub fn current(&self) -> S {
        let mut s = self.template.clone();
        self.template.unpack_into(&self.params, self.stepper.t(), self.stepper.y(), &mut s);
        s
    }

    /// State at `tau` inside the last accepted step.
    pub fn state_at(&mut self, tau: f64) -> S {
        let mut y = vec![0.0; self.stepper.y().len()];
        self.stepper.interpolate(tau, &mut y);
        let mut s = self.template.clone();
        self.template.unpack_into(&self.params, tau, &y, &mut s);
        s
    }

    /// Interval `[tau_prev, tau]` covered by the last accepted step.
    pub fn last_step(&self) -> (f64, f64) {
        (self.stepper.t_prev(), self.stepper.t())
    }

    /// Integrates to `tau_end`, handing the state at every multiple of
    /// `sample_dt` (measured from the initial time) to `observer`.
    pub fn run_sampled(&mut self, tau_end: f64, sample_dt: f64, mut observer: impl FnMut(&S)) -> Result<()> {
        let t0 = self.template.tau();
        if !(sample_dt > 0.0) {
            return Err(Error::InvalidParameter("sample_dt must be positive".into()));
        }
        if !(tau_end > t0) {
            return Err(Error::InvalidParameter("tau_end must lie after the initial time".into()));
        }
        let n_samples = ((tau_end - t0) / sample_dt * (1.0 + 1e-12)).floor() as usize;
        let mut next = 0usize;
        // samples already covered by the current step
        while next <= n_samples && t0 + next as f64 * sample_dt <= self.stepper.t() {
            let s = self.state_at(t0 + next as f64 * sample_dt);
            observer(&s);
            next += 1;
        }
        self.stepper.set_stop(Some(tau_end));
        while self.stepper.t() < tau_end {
            self.step()?;
            while next <= n_samples {
                let ts = t0 + next as f64 * sample_dt;
                if ts > self.stepper.t() {
                    break;
                }
                let s = if next == 0 { self.template.clone() } else { self.state_at(ts) };
                observer(&s);
                next += 1;
            }
        }
        self.check_now()
    }
}

/// Sampled trajectory plus run diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub samples: Vec<S>,
    pub stats: StepStats,
    pub drift: DriftReport,
}

/// Integrates `s0` up to `tau_end`, sampling every `sample_dt`.
pub fn integrate<S: Evolvable>(
    s0: &S,
    params: &SystemParams,
    tau_end: f64,
    ctrl: &StepController,
    sample_dt: f64,
) -> Result<Trajectory<S>> {
    let mut prop = Propagator::new(s0, params, ctrl)?;
    let mut samples = Vec::new();
    prop.run_sampled(tau_end, sample_dt, |s| samples.push(s.clone()))?;
    Ok(Trajectory { samples, stats: prop.stats(), drift: prop.drift() })
}
