//! Simulation of two counter-propagating dark-state polaritons colliding in
//! a deep optical lattice, and of the conditional phase they acquire.
//!
//! - [`params`]: physical inputs, validation, detunings and elementary
//!   derived quantities.
//! - [`dispersion`]: group velocity, mixing angle and Kerr coefficients.
//! - [`site_dynamics`]: direct integration of the single-site amplitude
//!   equations, used as an oracle for the adiabatic elimination.
//! - [`scattering`]: the two-particle wave function under the
//!   delta-interaction transport equation, solved by characteristics and by
//!   an upwind scheme.
//! - [`gate`]: conditional phase, interaction time and sweeps.
//! - [`cli`]: run configuration files and the subcommands of the
//!   `polariton-gate` binary.

// `!(x > y)` forms are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dispersion;
pub mod error;
pub mod gate;
pub mod output;
pub mod params;
pub mod scattering;
pub mod site_dynamics;

pub use dispersion::EitMedium;
pub use error::{Error, Result};
pub use gate::GateReport;
pub use params::ExperimentConfig;
pub use scattering::{InitialCondition, PairCoupling, TwoParticleWave};
