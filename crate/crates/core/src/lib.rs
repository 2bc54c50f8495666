//! Simulation of a single-step N-qubit i-Toffoli gate in a linear trapped-ion
//! crystal: chain normal modes, phonon-mediated Ising couplings, adiabatically
//! ramped spin-phonon gate sequences with a resonant target drive, echo pulse
//! synthesis, and average-gate-fidelity analysis.
//!
//! Conventions used throughout:
//! * angular frequencies in rad/s, times in seconds;
//! * qubit basis index: ion 0 is the most significant bit, sigma_z|0> = +|0>;
//! * composite index layout: qubit index slowest, then one Fock index per
//!   selected mode in order, last mode fastest.

pub mod analysis;
pub mod crystal;
pub mod error;
pub mod evolution;
pub mod hamiltonians;
pub mod hilbert;
pub mod math;
pub mod multibeat;
pub mod presets;
pub mod spinmodel;

pub use error::{ModelError, Result};
