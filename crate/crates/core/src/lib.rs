//! Wave-packet simulation of macroscopic quantum tunneling of the phase of a
//! current-biased Josephson junction.
//!
//! Tunneling is turned into norm loss by a time-dependent imaginary
//! potential placed beyond the moving outer turning point of the tilted
//! washboard. The surviving norm gives switching rates and switching-current
//! distributions, which can be compared with the Caldeira–Leggett
//! quasi-static prediction.

pub mod absorber;
pub mod error;
pub mod grid;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod propagator;
pub mod switching;
pub mod wavefunction;

pub use error::{Error, Result};
pub use grid::{Grid, GridSpec};
pub use model::JunctionConfig;
pub use wavefunction::Wavefunction;
