//! Finite-difference simulation of a two-phase incompressible mixture whose
//! phase dynamics are driven by a nonlocal interaction energy with a singular
//! logarithmic entropy, coupled to variable-density, variable-viscosity
//! momentum transport on a staggered grid.
//!
//! The library exposes the discrete operators, the regularized potential,
//! interaction kernels, the two time steppers, the coupled simulation loop,
//! and a set of executable verification experiments (energy balance, mass
//! conservation, separation from the pure phases, continuous dependence,
//! constant-density stability, pressure interpolation).
//!
//! Start from the runnable examples (`cargo run --release --example simulate_bubble`)
//! or the `nlagg` binary, which exposes the same entry points as subcommands.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod nch;
pub mod ns;
pub mod sim;
pub mod potential;

pub use error::{Error, Result};
