//! Hybridized mixed discretization of the second-order elliptic problem
//! c sigma = grad u, -div sigma = -f in Omega, u = g on the boundary, with
//! piecewise P_k flux and face traces, P_{k+1} potential, and the penalty
//! alpha_T = 1/h_T. The element unknowns are condensed onto the face traces.

mod condense;
mod local;
mod skyline;
mod solve;

pub use condense::{apply_dirichlet, condense, recover_local, CondensedLocal};
pub use local::{
    assemble_local, potential_face_moments, HdgConfig, LocalSystem, ProblemData,
};
pub use skyline::{factor_skyline, SkylineCholesky, SymmetricCoo};
pub use solve::{assemble_condensed, solve_condensed, solve_hdg, CondensedSystem, HDGSolution};
