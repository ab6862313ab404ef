//! Finite-volume simulation of an elastically mounted cylinder in 2D
//! incompressible cross-flow on a moving mesh, plus a POD-Galerkin
//! reduced-order pipeline with an RBF displacement surrogate.
//!
//! The crate is organised around the offline/online workflow:
//!
//! - [`mesh`] owns geometry, connectivity and swept-area bookkeeping;
//! - [`fvops`] assembles the discrete momentum and pressure operators;
//! - [`linsolve`] provides the iterative and dense solvers;
//! - [`structure`] integrates the one-degree-of-freedom cylinder dynamics
//!   and the fluid forces driving it;
//! - [`meshmotion`] propagates the cylinder displacement into the volume
//!   mesh (spring analogy or RBF interpolation);
//! - [`pimple`] is the segregated transient solver with dynamic mesh;
//! - [`pod`] builds snapshot POD bases;
//! - [`rom`] is the reduced segregated solver and displacement surrogate;
//! - [`postproc`] computes the run diagnostics (errors, spectra, lock-in).

pub mod case;
pub mod error;
pub mod fields;
pub mod fvops;
pub mod io;
pub mod linsolve;
pub mod mesh;
pub mod meshmotion;
pub mod par;
pub mod pimple;
pub mod pod;
pub mod postproc;
pub mod rom;
pub mod structure;

pub use error::{Result, VivError};
