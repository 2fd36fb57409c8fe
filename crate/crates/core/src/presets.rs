//! Complete run descriptions and the named figure configurations.

use num_complex::Complex64 as C64;

use crate::analysis::{FidelityConfig, LyapunovConfig, ScatterConfig, SweepConfig};
use crate::error::{Error, Result};
use crate::model::{AtomInit, FieldInit, InitialCondition, SystemParams};
use crate::observables::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Bloch,
    Amplitude,
}

/// Sampled trajectory over `[0, tau_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub tau_end: f64,
    pub sample_dt: f64,
    pub form: Representation,
}

/// Purity spectrum of the trajectory over `[0, tau_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub tau_end: f64,
    pub sample_dt: f64,
    pub window: Window,
}

/// `start, start + step, ..., end` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub end: f64,
    pub step: f64,
    /// Rows with `λ` above this count as chaotic in the summary.
    pub lambda_threshold: f64,
    pub config: SweepConfig,
}

/// Launch momenta `linspace(window.0, window.1, points)`; `levels` adds a
/// refinement study over the same window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSpec {
    pub window: (f64, f64),
    pub points: usize,
    pub levels: Vec<usize>,
    pub config: ScatterConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// `x(τ)` against the launch momentum.
    Position,
    /// Inversion at `τ` against the initial inversion.
    Inversion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapsSpec {
    pub kind: MapKind,
    pub range: (f64, f64),
    pub points: usize,
    pub snapshots: Vec<f64>,
    /// Relative phase of the excited amplitude for inversion maps.
    pub phase: f64,
}

/// Everything needed to reproduce any experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub initial: InitialCondition,
    pub simulate: SimulateSpec,
    pub spectrum: SpectrumSpec,
    pub lyapunov: LyapunovConfig,
    pub fidelity: FidelityConfig,
    pub sweep: SweepSpec,
    pub scatter: ScatterSpec,
    pub maps: MapsSpec,
}

impl RunConfig {
    /// Fock field `n = 10`, excited atom at `x0 = 0`, `p0 = 25`, `δ = 0.4`.
    pub fn base() -> Self {
        Self {
            system: SystemParams::new(0.001, 0.4, 12),
            initial: InitialCondition { field: FieldInit::Fock(10), atom: AtomInit::excited(), x0: 0.0, p0: 25.0 },
            simulate: SimulateSpec { tau_end: 1000.0, sample_dt: 0.1, form: Representation::Bloch },
            spectrum: SpectrumSpec { tau_end: 1000.0, sample_dt: 0.1, window: Window::Hann },
            lyapunov: LyapunovConfig::default(),
            fidelity: FidelityConfig::default(),
            sweep: SweepSpec { start: -2.0, end: 2.0, step: 0.1, lambda_threshold: 0.01, config: SweepConfig::default() },
            scatter: ScatterSpec { window: (45.9, 46.9), points: 1000, levels: Vec::new(), config: ScatterConfig::default() },
            maps: MapsSpec {
                kind: MapKind::Inversion,
                range: (-1.0, 1.0),
                points: 401,
                snapshots: vec![100.0, 200.0],
                phase: 0.0,
            },
        }
    }

    /// Coherent field with mean photon number 10 truncated at `N = 100`.
    fn coherent(self) -> Self {
        let mut c = self;
        c.system.n_trunc = 100;
        c.initial.field = FieldInit::Coherent(C64::new(10f64.sqrt(), 0.0));
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let positive = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { bad(format!("{name} must be positive, got {v}")) };
        positive("simulate.tau_end", self.simulate.tau_end)?;
        positive("simulate.sample_dt", self.simulate.sample_dt)?;
        positive("spectrum.tau_end", self.spectrum.tau_end)?;
        positive("spectrum.sample_dt", self.spectrum.sample_dt)?;
        self.lyapunov.validate()?;
        positive("fidelity.horizon", self.fidelity.horizon)?;
        positive("fidelity.sample_dt", self.fidelity.sample_dt)?;
        positive("sweep.step", self.sweep.step)?;
        if self.sweep.end < self.sweep.start {
            return bad(format!("sweep range [{}, {}] is empty", self.sweep.start, self.sweep.end));
        }
        self.sweep.config.validate()?;
        self.scatter.config.validate()?;
        if !(self.scatter.window.1 > self.scatter.window.0) || self.scatter.points == 0 {
            return bad(format!("scatter window {:?} with {} points is empty", self.scatter.window, self.scatter.points));
        }
        if self.maps.points == 0 || !(self.maps.range.1 >= self.maps.range.0) {
            return bad(format!("map range {:?} with {} points is empty", self.maps.range, self.maps.points));
        }
        if self.maps.snapshots.is_empty() || self.maps.snapshots.windows(2).any(|w| w[1] <= w[0]) || self.maps.snapshots[0] <= 0.0
        {
            return bad(format!("map snapshots must be positive and increasing, got {:?}", self.maps.snapshots));
        }
        if let FieldInit::Fock(n) = self.initial.field {
            if n + 1 > self.system.n_trunc {
                return Err(Error::FockOutOfRange { n, n_trunc: self.system.n_trunc });
            }
        }
        Ok(())
    }
}

/// Subcommand a preset was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Spectrum,
    Lyapunov,
    Fidelity,
    Sweep,
    Scatter,
    Maps,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Spectrum => "spectrum",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Fidelity => "fidelity",
            Experiment::Sweep => "sweep",
            Experiment::Scatter => "scatter",
            Experiment::Maps => "maps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub experiment: Experiment,
    pub summary: &'static str,
    pub config: RunConfig,
}

pub const PRESET_NAMES: [&str; 16] = [
    "fig1a", "fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8a", "fig8b", "fig8c",
    "fig9", "base",
];

/// All named presets in a fixed order.
pub fn presets() -> Vec<Preset> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("listed preset exists")).collect()
}

pub fn preset(name: &str) -> Option<Preset> {
    let base = RunConfig::base();
    let with = |experiment, summary, config| Some(Preset { name: PRESET_NAMES.iter().find(|&&n| n == name)?, experiment, summary, config });
    // The representation check compares two integrations off resonance,
    // where their gap is thousands of rel_tol; these panels therefore run
    // converged.
    let tight = |mut c: RunConfig| {
        c.system.rel_tol = 1e-12;
        c.system.abs_tol = 1e-14;
        c
    };
    match name {
        "base" => with(Experiment::Simulate, "Fock n=10, excited atom, delta=0.4, p0=25", base),
        "fig1a" => {
            let mut c = tight(base);
            c.system.delta = 0.0;
            with(Experiment::Simulate, "purity at exact resonance (periodic, period pi/(omega_r p0))", c)
        }
        "fig1b" => {
            let mut c = tight(base);
            c.system.delta = 32.0;
            with(Experiment::Simulate, "purity of a ballistic atom at large detuning", c)
        }
        "fig1c" => {
            let mut c = base;
            c.system.delta = 32.0;
            c.initial.p0 = 32000.0;
            c.simulate = SimulateSpec { tau_end: 200.0, sample_dt: 0.01, form: Representation::Bloch };
            c.spectrum = SpectrumSpec { tau_end: 200.0, sample_dt: 0.01, window: Window::Hann };
            with(Experiment::Spectrum, "Doppler-Rabi resonance: purity spectrum", c)
        }
        "fig1d" => with(Experiment::Spectrum, "chaotic walking: broadened purity spectrum", base),
        "fig2a" => {
            let mut c = base;
            c.scatter.window = (0.0, 100.0);
            c.scatter.points = 2000;
            with(Experiment::Scatter, "exit time and turn count against launch momentum", c)
        }
        "fig2b" => {
            let mut c = base;
            c.scatter.levels = vec![1000, 10_000, 100_000];
            with(Experiment::Scatter, "zoom of the exit-time function on [45.9, 46.9]", c)
        }
        "fig3" => {
            let mut c = base;
            c.maps = MapsSpec {
                kind: MapKind::Position,
                range: (0.0, 100.0),
                points: 1001,
                snapshots: vec![300.0, 1000.0],
                phase: 0.0,
            };
            with(Experiment::Maps, "position at fixed times against launch momentum", c)
        }
        "fig4" => with(Experiment::Maps, "inversion at fixed times against initial inversion", base),
        "fig5" => {
            let mut c = base;
            c.initial.atom = AtomInit::superposition(0.0);
            with(Experiment::Sweep, "lambda and purity variance against detuning, superposition atom", c)
        }
        "fig6" => with(Experiment::Fidelity, "fidelity decay in a Fock field (delta=0.4 chaotic, 0.8 regular)", base),
        "fig7" => with(Experiment::Sweep, "lambda and purity variance against detuning, coherent field", base.coherent()),
        "fig8a" => {
            let mut c = base.coherent();
            c.scatter.window = (20.0, 60.0);
            c.scatter.points = 400;
            c.scatter.config.tau_max = 2000.0;
            with(Experiment::Scatter, "launch momenta leaving a coherent-field cavity", c)
        }
        "fig8b" => {
            let mut c = base.coherent();
            c.maps = MapsSpec {
                kind: MapKind::Position,
                range: (0.0, 100.0),
                points: 401,
                snapshots: vec![300.0],
                phase: 0.0,
            };
            with(Experiment::Maps, "position against launch momentum, coherent field", c)
        }
        "fig8c" => {
            let mut c = base.coherent();
            c.maps.snapshots = vec![200.0];
            with(Experiment::Maps, "inversion map, coherent field", c)
        }
        "fig9" => {
            let mut c = base.coherent();
            c.lyapunov.horizon = 1e4;
            with(Experiment::Fidelity, "fidelity decay in a coherent field (z0=1 chaotic, z0=0 regular)", c)
        }
        _ => None,
    }
}

/// Atom with inversion `z0` and zero relative phase; `z0 = ±1` give the
/// basis states exactly.
pub fn atom_with_inversion(z0: f64) -> AtomInit {
    if z0 == 1.0 {
        AtomInit::excited()
    } else if z0 == -1.0 {
        AtomInit::ground()
    } else {
        AtomInit::from_inversion(z0, 0.0)
    }
}
