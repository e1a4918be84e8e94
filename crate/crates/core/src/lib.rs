//! Released hanging mass-spring chains.
//!
//! A chain of `n` point masses joined by `n - 1` Hookean springs hangs in
//! static equilibrium and is released at the top. This crate predicts how
//! long each mass "hangs" before moving, using the large-`s` behaviour of the
//! chain's Laplace transform, and checks those predictions against direct
//! time integration and measured track data.
//!
//! Units are cgs throughout (grams, centimetres, seconds, dynes). Downward
//! displacement is negative.
//!
//! Modules, bottom up:
//!
//! - [`chain`]: configuration, spring-mass lumping, nondimensional scales
//! - [`equilibrium`]: hanging geometry before release
//! - [`spectral`]: characteristic polynomial of the Laplace-domain matrix
//! - [`asymptotics`]: short-time power laws, hang-time, limits
//! - [`dynamics`]: fixed-step integration, spring cut-off events, analytic
//!   two-mass solution
//! - [`fitting`]: spring calibration and track comparison

pub mod asymptotics;
pub mod chain;
pub mod dynamics;
pub mod equilibrium;
mod error;
pub mod fitting;
pub mod presets;
pub mod spectral;

pub use chain::{ChainConfig, LumpingPolicy, NondimSystem};
pub use error::{Error, Result};
