//! Flux postprocessing: a local lift of the discrete flux into RT_{k+1}
//! whose normal trace equals the numerical flux on every face.
//!
//! On each element, sigma* is defined through the RT_{k+1} degrees of
//! freedom: face moments equal those of the numerical flux
//! sigma_h . n - alpha (P_F u_h - lambda), interior moments equal those of
//! sigma_h. Because both one-sided numerical fluxes are polynomials of
//! degree k on a face and the trace equation matches their moments, the
//! normal trace of sigma* is single-valued pointwise, and div sigma* is the
//! elementwise L2 projection of the load onto P_{k+1}.

use nalgebra::DVector;

use crate::error::{HdgError, Result};
use crate::fespace::{quad_edge, quad_triangle, rt_dof_matrix, FeSpaceTables, RtBasis, TriangleBasis};
use crate::hdg_core::{potential_face_moments, HDGSolution};
use crate::mesh::Mesh;

/// Per-element coefficients of sigma* in the raw (scaled-monomial) RT basis.
#[derive(Debug, Clone)]
pub struct PostprocessedFlux {
    pub k: usize,
    pub coeffs: Vec<DVector<f64>>,
}

impl PostprocessedFlux {
    /// Values and divergences of sigma* at reference points of one element.
    pub fn eval(
        &self,
        mesh: &Mesh,
        element: usize,
        ref_points: &[[f64; 2]],
    ) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
        let geom = mesh.element_geometry(element)?;
        let rt = RtBasis::new(self.k)?;
        let phys: Vec<[f64; 2]> = ref_points.iter().map(|&p| geom.to_physical(p)).collect();
        let vals = rt.eval(geom.centroid(), geom.h_t, &phys);
        let z = &self.coeffs[element];
        let mut v = Vec::with_capacity(ref_points.len());
        let mut d = Vec::with_capacity(ref_points.len());
        for q in 0..ref_points.len() {
            let sx: f64 = (0..rt.dim).map(|j| z[j] * vals.x[(q, j)]).sum();
            let sy: f64 = (0..rt.dim).map(|j| z[j] * vals.y[(q, j)]).sum();
            let dv: f64 = (0..rt.dim).map(|j| z[j] * vals.div[(q, j)]).sum();
            v.push([sx, sy]);
            d.push(dv);
        }
        Ok((v, d))
    }
}

/// RT DOF values of the penalty correction alpha (P_F u_h - lambda) on one
/// element: face moments of a degree-k function (so the top face moment and
/// all interior moments vanish).
fn correction_dofs(
    mesh: &Mesh,
    element: usize,
    tables: &FeSpaceTables,
    rt: &RtBasis,
    u: &DVector<f64>,
    lambda_local: &DVector<f64>,
) -> Result<DVector<f64>> {
    let geom = mesh.element_geometry(element)?;
    let alpha = 1.0 / geom.h_t;
    let nlam = tables.trace_dim();
    assert_eq!(lambda_local.len(), 3 * nlam);
    let qf = potential_face_moments(mesh, element, tables)?;
    let mut d = DVector::zeros(rt.dim);
    let per_face = rt.m + 1;
    for l in 0..3 {
        let face = mesh.element_to_faces[element][l].face;
        let len = mesh.face_length(face);
        for r in 0..nlam {
            let pu: f64 = (0..u.len()).map(|i| qf[l][(r, i)] * u[i]).sum();
            d[l * per_face + r] = alpha * len * (pu - lambda_local[l * nlam + r]);
        }
    }
    Ok(d)
}

/// RT DOF values of the discrete flux sigma_h (given by coefficients in the
/// flux basis, x block then y block).
fn flux_dofs(
    mesh: &Mesh,
    element: usize,
    tables: &FeSpaceTables,
    rt: &RtBasis,
    sigma: &DVector<f64>,
) -> Result<DVector<f64>> {
    let geom = mesh.element_geometry(element)?;
    let nk = tables.flux.dim;
    assert_eq!(sigma.len(), 2 * nk);
    let m = rt.m;
    let edge_basis = crate::fespace::EdgeBasis::new(m);
    let interior_basis = TriangleBasis::new(m - 1);
    let edge_rule = quad_edge(2 * m + 4)?;
    let tri_rule = quad_triangle(2 * m + 4)?;
    let psi = edge_basis.eval(&edge_rule.points);
    let mut d = DVector::zeros(rt.dim);
    let mut row = 0;
    for l in 0..3 {
        let face = mesh.element_to_faces[element][l].face;
        let len = mesh.face_length(face);
        let rpts: Vec<[f64; 2]> = edge_rule
            .points
            .iter()
            .map(|&t| geom.to_reference(mesh.face_point(face, t)))
            .collect();
        let v = tables.flux.eval(&rpts);
        let n = geom.outward_normals[l];
        for r in 0..=m {
            let mut acc = 0.0;
            for q in 0..edge_rule.points.len() {
                let sx: f64 = (0..nk).map(|i| sigma[i] * v[(q, i)]).sum();
                let sy: f64 = (0..nk).map(|i| sigma[nk + i] * v[(q, i)]).sum();
                acc += edge_rule.weights[q] * (sx * n[0] + sy * n[1]) * psi[(q, r)];
            }
            d[row] = len * acc;
            row += 1;
        }
    }
    let v = tables.flux.eval(&tri_rule.points);
    let vq = interior_basis.eval(&tri_rule.points);
    for comp in 0..2 {
        for i in 0..interior_basis.dim {
            let mut acc = 0.0;
            for q in 0..tri_rule.points.len() {
                let sc: f64 = (0..nk).map(|j| sigma[comp * nk + j] * v[(q, j)]).sum();
                acc += tri_rule.weights[q] * sc * vq[(q, i)];
            }
            d[row] = geom.det.abs() * acc;
            row += 1;
        }
    }
    Ok(d)
}

/// Solves the RT DOF system for the penalty-correction field sigma~ on one
/// element: its normal trace on each face is alpha (P_F u_h - lambda)
/// pointwise and its interior moments vanish.
pub fn local_correction(
    mesh: &Mesh,
    element: usize,
    k: usize,
    u: &DVector<f64>,
    lambda_local: &DVector<f64>,
) -> Result<DVector<f64>> {
    let tables = FeSpaceTables::new(k)?;
    let rt = RtBasis::new(k)?;
    let dof = rt_dof_matrix(&rt, mesh, element)?;
    let d = correction_dofs(mesh, element, &tables, &rt, u, lambda_local)?;
    dof.lu().solve(&d).ok_or(HdgError::SingularLocalSystem {
        element,
        context: "postprocessing",
    })
}

/// Postprocesses the whole solution: sigma* = sigma_h - sigma~ in RT DOF
/// terms, one LU solve per element.
pub fn postprocess_flux(mesh: &Mesh, sol: &HDGSolution) -> Result<PostprocessedFlux> {
    let k = sol.k;
    let tables = FeSpaceTables::new(k)?;
    let rt = RtBasis::new(k)?;
    let nlam = tables.trace_dim();
    let mut coeffs = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let mut lam_loc = DVector::zeros(3 * nlam);
        for l in 0..3 {
            let face = mesh.element_to_faces[e][l].face;
            for r in 0..nlam {
                lam_loc[l * nlam + r] = sol.lambda[face][r];
            }
        }
        let dof = rt_dof_matrix(&rt, mesh, e)?;
        let d = flux_dofs(mesh, e, &tables, &rt, &sol.sigma[e])?
            - correction_dofs(mesh, e, &tables, &rt, &sol.u[e], &lam_loc)?;
        let z = dof.lu().solve(&d).ok_or(HdgError::SingularLocalSystem {
            element: e,
            context: "postprocessing",
        })?;
        coeffs.push(z);
    }
    Ok(PostprocessedFlux { k, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::EdgeBasis;
    use crate::hdg_core::{solve_hdg, HdgConfig, ProblemData};
    use crate::mesh::{build_crisscross_mesh, build_structured_mesh};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    struct Linear;

    impl ProblemData for Linear {
        fn c(&self, _: f64, _: f64) -> [[f64; 2]; 2] {
            [[1.0, 0.0], [0.0, 1.0]]
        }
        fn f(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn g(&self, x: f64, y: f64) -> f64 {
            x + y
        }
    }

    #[test]
    fn linear_solution_needs_no_correction() {
        // Exact linear solution: the penalty residual P u_h - lambda vanishes,
        // so sigma~ = 0 and sigma* = sigma_h = (1, 1) pointwise.
        for k in 0..=2 {
            let mesh = build_crisscross_mesh(2).unwrap();
            let config = HdgConfig::new(k).unwrap();
            let sol = solve_hdg(&mesh, &config, &Linear).unwrap();
            let star = postprocess_flux(&mesh, &sol).unwrap();
            let pts = [[0.2, 0.3], [0.5, 0.1], [0.1, 0.7]];
            for e in 0..mesh.n_elements() {
                let (v, d) = star.eval(&mesh, e, &pts).unwrap();
                for q in 0..pts.len() {
                    assert!((v[q][0] - 1.0).abs() < 1e-12, "k={k} e={e}");
                    assert!((v[q][1] - 1.0).abs() < 1e-12, "k={k} e={e}");
                    assert!(d[q].abs() < 1e-11, "k={k} e={e}");
                }
            }
        }
    }

    #[test]
    fn correction_normal_trace_matches_penalty_pointwise() {
        // For random potential and trace coefficients, sigma~ . n on each face
        // equals alpha (P_F u_h - lambda) at arbitrary face points, and the
        // interior moments of sigma~ vanish.
        let mesh = build_structured_mesh(2).unwrap();
        let mut rng = StdRng::seed_from_u64(2718);
        for k in 0..=2 {
            let tables = FeSpaceTables::new(k).unwrap();
            let rt = RtBasis::new(k).unwrap();
            let element = 5;
            let geom = mesh.element_geometry(element).unwrap();
            let alpha = 1.0 / geom.h_t;
            let nlam = k + 1;
            let u = DVector::from_fn(tables.potential.dim, |_, _| rng.gen_range(-1.0..1.0));
            let lam = DVector::from_fn(3 * nlam, |_, _| rng.gen_range(-1.0..1.0));
            let z = local_correction(&mesh, element, k, &u, &lam).unwrap();

            let qf = potential_face_moments(&mesh, element, &tables).unwrap();
            let psi_basis = EdgeBasis::new(k);
            for l in 0..3 {
                let face = mesh.element_to_faces[element][l].face;
                let n = geom.outward_normals[l];
                let ts = [0.15, 0.5, 0.85];
                let psi = psi_basis.eval(&ts);
                let pts: Vec<[f64; 2]> = ts.iter().map(|&t| mesh.face_point(face, t)).collect();
                let vals = rt.eval(geom.centroid(), geom.h_t, &pts);
                for (q, _) in ts.iter().enumerate() {
                    let sn: f64 = (0..rt.dim)
                        .map(|j| z[j] * (vals.x[(q, j)] * n[0] + vals.y[(q, j)] * n[1]))
                        .sum();
                    let want: f64 = (0..nlam)
                        .map(|r| {
                            let pu: f64 = (0..u.len()).map(|i| qf[l][(r, i)] * u[i]).sum();
                            alpha * (pu - lam[l * nlam + r]) * psi[(q, r)]
                        })
                        .sum();
                    assert!((sn - want).abs() < 1e-11, "k={k} l={l} q={q}");
                }
            }

            // Interior moments vanish.
            let tri_rule = quad_triangle(2 * rt.m + 4).unwrap();
            let phys: Vec<[f64; 2]> = tri_rule
                .points
                .iter()
                .map(|&p| geom.to_physical(p))
                .collect();
            let vals = rt.eval(geom.centroid(), geom.h_t, &phys);
            let interior = TriangleBasis::new(rt.m - 1);
            let vq = interior.eval(&tri_rule.points);
            for comp in 0..2 {
                for i in 0..interior.dim {
                    let mut acc = 0.0;
                    for q in 0..phys.len() {
                        let sc: f64 = (0..rt.dim)
                            .map(|j| {
                                z[j] * if comp == 0 { vals.x[(q, j)] } else { vals.y[(q, j)] }
                            })
                            .sum();
                        acc += tri_rule.weights[q] * sc * vq[(q, i)];
                    }
                    assert!(acc.abs() * geom.det.abs() < 1e-11, "k={k}");
                }
            }
        }
    }

    #[test]
    fn discrete_flux_embeds_exactly() {
        // With zero potential and traces the correction vanishes, so sigma*
        // is the RT embedding of sigma_h and reproduces it pointwise.
        let mesh = build_structured_mesh(2).unwrap();
        let mut rng = StdRng::seed_from_u64(515);
        for k in 0..=2 {
            let tables = FeSpaceTables::new(k).unwrap();
            let nlam = k + 1;
            let sol = HDGSolution {
                k,
                lambda: vec![vec![0.0; nlam]; mesh.n_faces()],
                u: (0..mesh.n_elements())
                    .map(|_| DVector::zeros(tables.potential.dim))
                    .collect(),
                sigma: (0..mesh.n_elements())
                    .map(|_| {
                        DVector::from_fn(2 * tables.flux.dim, |_, _| rng.gen_range(-1.0..1.0))
                    })
                    .collect(),
            };
            let star = postprocess_flux(&mesh, &sol).unwrap();
            let pts = [[0.25, 0.25], [0.6, 0.2], [0.15, 0.55]];
            for e in 0..mesh.n_elements() {
                let (v, _) = star.eval(&mesh, e, &pts).unwrap();
                let vs = tables.flux.eval(&pts);
                for q in 0..pts.len() {
                    let nk = tables.flux.dim;
                    let sx: f64 = (0..nk).map(|i| sol.sigma[e][i] * vs[(q, i)]).sum();
                    let sy: f64 = (0..nk).map(|i| sol.sigma[e][nk + i] * vs[(q, i)]).sum();
                    assert!((v[q][0] - sx).abs() < 1e-11, "k={k} e={e}");
                    assert!((v[q][1] - sy).abs() < 1e-11, "k={k} e={e}");
                }
            }
        }
    }
}
