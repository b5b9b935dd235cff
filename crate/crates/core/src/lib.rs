//! Numerical family-index toolkit for first-order self-adjoint elliptic boundary problems on the
//! flat cylinder [0, 1] × S¹.
//!
//! The topological side builds the subbundle F of E⁻ over each boundary torus and takes lattice
//! Chern numbers; the analytical side discretizes the odd Dirac operator with local boundary
//! conditions and counts spectral flow over a loop. `ktheory` checks the coinvariant-algebra
//! identities exactly.

extern crate openblas_src;

pub mod boundary;
pub mod error;
pub mod ktheory;
pub mod linalg;
pub mod spectral;
pub mod symbol;
pub mod topo;

pub use error::{Error, Result};
