//! Static condensation: eliminate the element-interior unknowns (s, u) and
//! keep only the face traces, plus the reverse substitution.

use nalgebra::{DMatrix, DVector};

use crate::error::{HdgError, Result};
use crate::fespace::{trace_project, FeSpaceTables};
use crate::mesh::Mesh;

use super::local::{LocalSystem, ProblemData};

/// Condensed element contribution: the Schur complement on the three trace
/// blocks and the matching right-hand side.
#[derive(Debug, Clone)]
pub struct CondensedLocal {
    pub schur: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

/// Forms S = H - K_lt K_tt^{-1} K_tl and b = -K_lt K_tt^{-1} (0; F_T), where
/// K_tt = [[-A, -B], [-B^T, E]] and K_tl = [C; -G]. S is symmetric because
/// the full block matrix is.
pub fn condense(local: &LocalSystem) -> Result<CondensedLocal> {
    let interior = local.interior_matrix();
    let coupling = local.coupling();
    let lu = interior.lu();
    let x = lu.solve(&coupling).ok_or(HdgError::SingularLocalSystem {
        element: local.element,
        context: "condensation",
    })?;
    let y = lu.solve(&local.interior_rhs()).ok_or(HdgError::SingularLocalSystem {
        element: local.element,
        context: "condensation",
    })?;
    let schur = &local.h - coupling.transpose() * x;
    let rhs = -(coupling.transpose() * y);
    Ok(CondensedLocal { schur, rhs })
}

/// Recovers the interior unknowns from the local traces: solves
/// K_tt (s; u) = (0; F_T) - K_tl lam and returns (sigma, u).
pub fn recover_local(
    local: &LocalSystem,
    lambda: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    assert_eq!(lambda.len(), local.n_trace());
    let rhs = local.interior_rhs() - local.coupling() * lambda;
    let sol = local
        .interior_matrix()
        .lu()
        .solve(&rhs)
        .ok_or(HdgError::SingularLocalSystem {
            element: local.element,
            context: "recovery",
        })?;
    let ns = local.n_flux();
    let nu = local.n_potential();
    let sigma = DVector::from_iterator(ns, sol.rows(0, ns).iter().cloned());
    let u = DVector::from_iterator(nu, sol.rows(ns, nu).iter().cloned());
    Ok((sigma, u))
}

/// Projects the boundary value g onto P_k of every boundary face; interior
/// faces get `None`. Coefficients are in the orthonormal face basis.
pub fn apply_dirichlet(
    mesh: &Mesh,
    problem: &dyn ProblemData,
    k: usize,
) -> Result<Vec<Option<Vec<f64>>>> {
    let _ = FeSpaceTables::new(k)?; // degree validation
    let mut out = vec![None; mesh.n_faces()];
    for face in 0..mesh.n_faces() {
        if mesh.is_boundary_face(face) {
            let inc = &mesh.face_to_elements[face];
            let element = inc.left;
            let local_edge = inc.left_edge;
            let g = |x: f64, y: f64| problem.g(x, y);
            let traces = trace_project(&g, k, mesh, element)?;
            out[face] = Some(traces[local_edge].clone());
        }
    }
    Ok(out)
}
