//! Trace distances between bosonic Gaussian states (and linear combinations of
//! them) computed from moments alone, with a truncated-Fock reference oracle.

pub mod bargmann;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod lanczos;
pub mod lincomb;
pub mod linalg;
pub mod moments;
pub mod sampling;
pub mod symplectic;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, PureGaussianKet};
