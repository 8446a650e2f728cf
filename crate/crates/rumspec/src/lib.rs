//! Crystallographic bar-joint frameworks: transfer functions, rigid-unit-mode
//! and geometric flex spectra, flex construction and crystal flex bases.
//!
//! The library models a crystal framework by a period lattice and a motif
//! (representative joints and edges with cell offsets), realizes finite
//! patches, assembles the transfer function as a matrix of Laurent
//! polynomials, scans torus grids and moduli slices for rank degeneracy,
//! builds factor-periodic and band-limited flexes, and recovers coefficients
//! against the documented spanning sets of the built-in gallery frameworks.

pub mod basis;
pub mod error;
pub mod flex;
pub mod framework;
pub mod gallery;
pub mod json;
pub mod laurent;
pub mod linalg;
pub mod output;
pub mod spectrum;
pub mod symbol;

pub use error::{Result, RumspecError};
pub use laurent::C64;
