//! Hybridized discontinuous Galerkin solver for second-order elliptic
//! problems on 2D triangulated domains, with flux postprocessing, analysis
//! operators for verification, and a convergence-study harness.

pub mod cli;
pub mod error;
pub mod fespace;
pub mod harness;
pub mod hdg_core;
pub mod mesh;
pub mod postprocess;
pub mod verify;

pub use error::{HdgError, Result};
