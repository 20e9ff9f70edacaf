//! Shared helpers for integration tests: a dense monolithic reference solver
//! and tolerance comparison.

use hdg::fespace::FeSpaceTables;
use hdg::hdg_core::{apply_dirichlet, assemble_local, HdgConfig, ProblemData};
use hdg::mesh::Mesh;
use nalgebra::{DMatrix, DVector};

/// Solution of the full coupled system with no condensation: per-element
/// flux and potential coefficients plus per-face trace coefficients.
pub struct MonolithicSolution {
    pub sigma: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub lambda: Vec<Vec<f64>>,
}

/// Solves the coupled saddle-point system for all unknowns at once with a
/// dense LU factorization. Boundary trace rows pin the face projections of
/// the boundary data. Intended for small meshes only.
pub fn monolithic_solve(
    mesh: &Mesh,
    k: usize,
    problem: &dyn ProblemData,
) -> MonolithicSolution {
    let config = HdgConfig::new(k).unwrap();
    let tables = FeSpaceTables::new(k).unwrap();
    let nel = mesh.n_elements();
    let locals: Vec<_> = (0..nel)
        .map(|e| assemble_local(mesh, e, &config, problem, &tables).unwrap())
        .collect();
    let boundary = apply_dirichlet(mesh, problem, k).unwrap();

    let ns = locals[0].n_flux();
    let nu = locals[0].n_potential();
    let nlam = locals[0].n_trace() / 3;
    let s_off = |e: usize| e * (ns + nu);
    let u_off = |e: usize| e * (ns + nu) + ns;
    let lam_off = |f: usize| nel * (ns + nu) + f * nlam;
    let dim = nel * (ns + nu) + mesh.n_faces() * nlam;

    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for (e, ls) in locals.iter().enumerate() {
        // Flux rows: A s + B u - C lambda = 0.
        for i in 0..ns {
            for j in 0..ns {
                m[(s_off(e) + i, s_off(e) + j)] += ls.a[(i, j)];
            }
            for j in 0..nu {
                m[(s_off(e) + i, u_off(e) + j)] += ls.b[(i, j)];
            }
        }
        // Potential rows: -B^T s + E u - G lambda = F.
        for i in 0..nu {
            for j in 0..ns {
                m[(u_off(e) + i, s_off(e) + j)] -= ls.b[(j, i)];
            }
            for j in 0..nu {
                m[(u_off(e) + i, u_off(e) + j)] += ls.e[(i, j)];
            }
            rhs[u_off(e) + i] += ls.load[i];
        }
        for l in 0..3 {
            let face = mesh.element_to_faces[e][l].face;
            for r in 0..nlam {
                let col = l * nlam + r;
                for i in 0..ns {
                    m[(s_off(e) + i, lam_off(face) + r)] -= ls.c[(i, col)];
                }
                for i in 0..nu {
                    m[(u_off(e) + i, lam_off(face) + r)] -= ls.g[(i, col)];
                }
                if !mesh.is_boundary_face(face) {
                    // Trace rows: C^T s - G^T u + H lambda = 0.
                    let row = lam_off(face) + r;
                    for j in 0..ns {
                        m[(row, s_off(e) + j)] += ls.c[(j, col)];
                    }
                    for j in 0..nu {
                        m[(row, u_off(e) + j)] -= ls.g[(j, col)];
                    }
                    for rp in 0..nlam {
                        m[(row, lam_off(face) + rp)] += ls.h[(col, l * nlam + rp)];
                    }
                }
            }
        }
    }
    for f in 0..mesh.n_faces() {
        if let Some(coeffs) = &boundary[f] {
            for r in 0..nlam {
                m[(lam_off(f) + r, lam_off(f) + r)] = 1.0;
                rhs[lam_off(f) + r] = coeffs[r];
            }
        }
    }

    let x = m.full_piv_lu().solve(&rhs).expect("coupled system solvable");
    MonolithicSolution {
        sigma: (0..nel)
            .map(|e| DVector::from_fn(ns, |i, _| x[s_off(e) + i]))
            .collect(),
        u: (0..nel)
            .map(|e| DVector::from_fn(nu, |i, _| x[u_off(e) + i]))
            .collect(),
        lambda: (0..mesh.n_faces())
            .map(|f| (0..nlam).map(|r| x[lam_off(f) + r]).collect())
            .collect(),
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}
