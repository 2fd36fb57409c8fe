//! Chaos quantifiers and experiment drivers.

pub mod fidelity;
pub mod lyapunov;

pub use fidelity::{fidelity_decay, fit_decay, DecayFit, FidelityConfig, FidelityResult};
pub use lyapunov::{lyapunov_max, LyapunovConfig, LyapunovResult, Stacked};
pub mod sweep;

pub use sweep::{detuning_sweep, jaccard, purity_statistics, uniform_grid, PurityStats, SweepConfig, SweepRow};
pub mod maps;
pub mod scattering;

pub use maps::{inversion_map, position_map, predictability_horizon, total_variation, MapRow};
pub use scattering::{
    count_monotone_segments, fractal_refinement, linspace, scatter_one, scattering_scan, RefinementLevel,
    ScatterConfig, ScatterRecord,
};
