//! Sideband-resolved simulation of homodyne and double balanced homodyne
//! readout in the two-photon formalism, with a truncated Fock-space oracle.

pub mod engine;
pub mod error;
pub mod fock;
pub mod gw;
pub mod network;
pub mod readout;
pub mod scenario;
pub mod sideband;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
