//! Pulse learning for a driven qubit: the control phase φ(t) of
//! H = ω(cos φ X + sin φ Y) is digitized into a quantum-signal-processing
//! surrogate, the surrogate's phases are learned from (simulated) tomography
//! data, and a smooth pulse is reconstructed with splines.

pub mod error;
pub mod fisher;
pub mod io;
pub mod numkit;
pub mod pipeline;
pub mod dynamics;
pub mod pulse;
pub mod qsp;
pub mod reconstruct;
pub mod seeds;
pub mod tomography;

pub use error::{Error, Result};
