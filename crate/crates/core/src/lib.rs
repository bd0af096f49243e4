//! Topological multi-mode amplification in driven-dissipative bosonic
//! lattices.
//!
//! Cavities on a line couple through a chiral multi-mode waveguide. The
//! resulting non-reciprocal, long-range couplings ([`couplings`]) build a
//! non-Hermitian dynamical matrix ([`dynmatrix`]) whose Bloch symbol carries a
//! winding number ([`bloch`]). A nonzero winding predicts directional
//! amplification that grows exponentially with the chain length
//! ([`steadystate`]), together with slow metastable transients
//! ([`dynamics`]). [`hofstadter`] extracts multi-channel chiral edge modes of
//! a Harper-Hofstadter strip that can play the role of the waveguide.
//!
//! Units: total decay rate Γ = 1, lattice spacing a = 1, time in 1/Γ.

pub mod bloch;
pub mod couplings;
pub mod dynamics;
pub mod dynmatrix;
pub mod error;
pub mod hofstadter;
pub mod linalg;
pub mod steadystate;

pub use bloch::{BlochSymbol, PhaseDiagramGrid, WindingResult};
pub use couplings::{Chirality, CouplingMatrices, LatticeSpec, WaveguideSpec};
pub use dynmatrix::{DriveSpec, DynamicalMatrix, MatrixKind, SvdTriple};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
