//! Extremum-seeking Nash equilibrium computation for N-player differential
//! games.
//!
//! Players measure only their own payoff and apply sinusoidally perturbed
//! gradient estimates of it. Two seeker schemes are provided behind a common
//! registry: `"wsso"`, whose probing amplitude decays to zero as the payoff
//! stops improving so the closed loop converges without steady-state
//! oscillation, and `"classical"`, the fixed-amplitude baseline. The crate
//! also ships the verification tooling around them: a numerical
//! quasi-steady-state map, finite-difference stationarity and stability
//! checks for candidate equilibria, exact-rational non-resonance checks of
//! the probing frequencies, averaging-moment verification, and run metrics.
//!
//! Modules:
//!
//! * [`game`] — game models, the built-in two-player example, and the
//!   quasi-steady-state (plant equilibrium) map;
//! * [`controller`] — per-player seeker laws, the scheme registry, and exact
//!   frequency checks;
//! * [`sim`] — fixed-step closed-loop simulation;
//! * [`analysis`] — equilibrium verification, run metrics, and
//!   averaging-moment checks;
//! * [`error`] — the shared error type.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod game;
pub mod sim;

pub use error::{Error, Result};
