//! Shallow Water Linearized Moment Equations (SWLME) in one space dimension.
//!
//! The crate is split along the lines of the numerical pipeline:
//!
//! * [`basis`]: shifted Legendre polynomials on `[0, 1]`, Gauss rules and the
//!   moment closure tensors `A_ijk`, `B_ijk`.
//! * [`model`]: state conversions, fluxes, nonconservative products, the
//!   energy/entropy pair and its entropy variables.
//! * [`solver`]: a first-order path-conservative Rusanov scheme with
//!   hydrostatic reconstruction and SSP-RK3 time stepping.
//! * [`diagnostics`]: pointwise checks of the energy derivation, entropy
//!   variable gradients, the exact dam-break solution and convergence studies.
//! * [`config`]: the flat `section.key = value` scenario format used by the CLI.
//! * [`cli`]: the `swlme` command-line front end.

pub mod basis;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod parallel;
pub mod solver;

pub use basis::{ClosureTensors, QuadratureRule, Variant};
pub use error::{Error, Result};
pub use model::{ConservedState, EnergyPair, EntropyVars, ModelParams, PrimitiveState};
pub use parallel::Execution;
