//! Schrödinger-field capture by classical absorbing bodies.
//!
//! An incident one-body wavefunction evolves on a periodic grid; scripted rigid
//! bodies absorb the amplitude that reaches their surfaces, and every capture is
//! booked per surface site and time bin in a ledger of weighted records. A second
//! toolkit covers harmonic lattices: normal modes, phonon amplitudes and the
//! occupancy-number operator algebra.

pub mod body;
pub mod error;
pub mod fock_kernel;
pub mod grid_field;
pub mod harness;
pub mod lattice_phonon;
pub mod measurement;
pub mod spectral;
pub mod tdse;

pub use error::{Error, Result};
