//! Numerical laboratory for a two-level atom walking in a quantized
//! standing-wave cavity mode: the translational motion is classical, the
//! atom-field state is a Jaynes-Cummings ladder, and the two are coupled
//! through the optical potential.

// Negated float comparisons are how NaN inputs get rejected; integrator
// coefficients keep the digits of their published tableau.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod observables;
pub mod oracles;
pub mod presets;

pub use dynamics::{integrate, Evolvable, Propagator, StepController, Trajectory};
pub use error::{Error, Result};
pub use model::{
    AtomInit, BlochState, FieldInit, InitialCondition, QcState, SystemParams, amplitude_moduli_from_bloch,
    bloch_from_amplitudes, coherent_initial, fock_initial,
};
