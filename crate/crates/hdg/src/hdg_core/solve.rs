//! Global condensed system: assembly over interior faces, the sparse
//! Cholesky solve with a residual check, and recovery of the full solution.

use nalgebra::DVector;

use crate::error::{HdgError, Result};
use crate::fespace::FeSpaceTables;
use crate::mesh::Mesh;

use super::condense::{apply_dirichlet, condense, recover_local, CondensedLocal};
use super::local::{assemble_local, HdgConfig, LocalSystem, ProblemData};
use super::skyline::{factor_skyline, SymmetricCoo};

/// Assembled trace system over the interior faces. `interior_index[face]`
/// gives the face's block number; dof = block * (k+1) + moment.
#[derive(Debug, Clone)]
pub struct CondensedSystem {
    pub k: usize,
    pub n_dofs: usize,
    pub interior_index: Vec<Option<usize>>,
    pub matrix: SymmetricCoo,
    pub rhs: DVector<f64>,
}

/// Discrete solution: trace coefficients per face (orthonormal face basis;
/// boundary faces hold the projected boundary data), and per-element
/// potential and flux coefficients (reference-orthonormal bases, flux stored
/// x-block then y-block).
#[derive(Debug, Clone)]
pub struct HDGSolution {
    pub k: usize,
    pub lambda: Vec<Vec<f64>>,
    pub u: Vec<DVector<f64>>,
    pub sigma: Vec<DVector<f64>>,
}

/// Sums the condensed element blocks into the interior-face system, moving
/// boundary-face columns times the lifted boundary data to the right side.
pub fn assemble_condensed(
    mesh: &Mesh,
    config: &HdgConfig,
    locals: &[LocalSystem],
    condensed: &[CondensedLocal],
    boundary: &[Option<Vec<f64>>],
) -> Result<CondensedSystem> {
    assert_eq!(locals.len(), mesh.n_elements());
    assert_eq!(condensed.len(), mesh.n_elements());
    assert_eq!(boundary.len(), mesh.n_faces());
    let nlam = config.k + 1;
    let mut interior_index = vec![None; mesh.n_faces()];
    let mut next = 0usize;
    for face in 0..mesh.n_faces() {
        if !mesh.is_boundary_face(face) {
            interior_index[face] = Some(next);
            next += 1;
        }
    }
    let n_dofs = next * nlam;
    let mut matrix = SymmetricCoo::new(n_dofs);
    let mut rhs = DVector::zeros(n_dofs);

    for e in 0..mesh.n_elements() {
        let cond = &condensed[e];
        let faces = &mesh.element_to_faces[e];
        for li in 0..3 {
            let fi = faces[li].face;
            let Some(bi) = interior_index[fi] else { continue };
            for r in 0..nlam {
                let gi = bi * nlam + r;
                rhs[gi] += cond.rhs[li * nlam + r];
                for lj in 0..3 {
                    let fj = faces[lj].face;
                    match interior_index[fj] {
                        Some(bj) => {
                            for s in 0..nlam {
                                matrix.add(
                                    gi,
                                    bj * nlam + s,
                                    cond.schur[(li * nlam + r, lj * nlam + s)],
                                );
                            }
                        }
                        None => {
                            let g = boundary[fj].as_ref().ok_or_else(|| {
                                HdgError::InvalidArgument(format!(
                                    "missing boundary data on face {fj}"
                                ))
                            })?;
                            for s in 0..nlam {
                                rhs[gi] -=
                                    cond.schur[(li * nlam + r, lj * nlam + s)] * g[s];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CondensedSystem {
        k: config.k,
        n_dofs,
        interior_index,
        matrix,
        rhs,
    })
}

const RESIDUAL_TOL: f64 = 1e-12;

/// Cholesky solve with one step of iterative refinement and a relative
/// residual check in the max norm.
pub fn solve_condensed(system: &CondensedSystem) -> Result<DVector<f64>> {
    if system.n_dofs == 0 {
        return Ok(DVector::zeros(0));
    }
    if system.rhs.abs().max() == 0.0 {
        return Ok(DVector::zeros(system.n_dofs));
    }
    let chol = factor_skyline(&system.matrix)?;
    let mut x = chol.solve(&system.rhs);
    let r = &system.rhs - system.matrix.mul_vec(&x);
    x += chol.solve(&r);
    let r = &system.rhs - system.matrix.mul_vec(&x);
    let denom = system
        .rhs
        .abs()
        .max()
        .max(system.matrix.max_abs() * x.abs().max());
    let rel = r.abs().max() / denom;
    if rel > RESIDUAL_TOL {
        return Err(HdgError::ResidualTooLarge {
            residual: rel,
            tolerance: RESIDUAL_TOL,
        });
    }
    Ok(x)
}

/// Full pipeline: local assembly, condensation, boundary lifting, global
/// solve, and element-by-element recovery.
pub fn solve_hdg(
    mesh: &Mesh,
    config: &HdgConfig,
    problem: &dyn ProblemData,
) -> Result<HDGSolution> {
    let tables = FeSpaceTables::new(config.k)?;
    let nlam = config.k + 1;
    let mut locals = Vec::with_capacity(mesh.n_elements());
    let mut condensed = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let local = assemble_local(mesh, e, config, problem, &tables)?;
        condensed.push(condense(&local)?);
        locals.push(local);
    }
    let boundary = apply_dirichlet(mesh, problem, config.k)?;
    let system = assemble_condensed(mesh, config, &locals, &condensed, &boundary)?;
    let x = solve_condensed(&system)?;

    let mut lambda = vec![vec![0.0; nlam]; mesh.n_faces()];
    for face in 0..mesh.n_faces() {
        match system.interior_index[face] {
            Some(bi) => {
                for r in 0..nlam {
                    lambda[face][r] = x[bi * nlam + r];
                }
            }
            None => lambda[face].copy_from_slice(boundary[face].as_ref().unwrap()),
        }
    }

    let mut u = Vec::with_capacity(mesh.n_elements());
    let mut sigma = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let mut lam_loc = DVector::zeros(3 * nlam);
        for l in 0..3 {
            let face = mesh.element_to_faces[e][l].face;
            for r in 0..nlam {
                lam_loc[l * nlam + r] = lambda[face][r];
            }
        }
        let (s, ue) = recover_local(&locals[e], &lam_loc)?;
        sigma.push(s);
        u.push(ue);
    }
    Ok(HDGSolution {
        k: config.k,
        lambda,
        u,
        sigma,
    })
}
