//! Raviart–Thomas space RT_m(T) = { p + q x : p in [P_m]^2, q in P_m } with
//! m = k + 1, used by the flux postprocessing.
//!
//! The raw basis is written in scaled local coordinates xi = (x - x_c)/h_T
//! (an affine similarity, under which the RT space is invariant), which keeps
//! the DOF matrix well conditioned across refinement levels.

use nalgebra::DMatrix;

use crate::error::{HdgError, Result};
use crate::fespace::basis::{monomial_powers, EdgeBasis, TriangleBasis};
use crate::fespace::quad::{quad_edge, quad_triangle};
use crate::fespace::MAX_DEGREE;
use crate::mesh::Mesh;

/// RT_{k+1} basis on one element, dimension (m+1)(m+3).
#[derive(Debug, Clone)]
pub struct RtBasis {
    pub k: usize,
    /// RT degree m = k + 1.
    pub m: usize,
    pub dim: usize,
    monos: Vec<(u32, u32)>,
    homog: Vec<(u32, u32)>,
}

/// Basis values and divergences at a set of points: matrices (n_points, dim).
pub struct RtValues {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub div: DMatrix<f64>,
}

impl RtBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k > MAX_DEGREE {
            return Err(HdgError::UnsupportedDegree(k));
        }
        let m = k + 1;
        let monos = monomial_powers(m);
        let homog: Vec<(u32, u32)> = monos
            .iter()
            .copied()
            .filter(|&(a, b)| (a + b) as usize == m)
            .collect();
        let dim = 2 * monos.len() + homog.len();
        debug_assert_eq!(dim, (m + 1) * (m + 3));
        Ok(RtBasis {
            k,
            m,
            dim,
            monos,
            homog,
        })
    }

    /// Evaluates the raw basis at physical points, given the element's
    /// centroid and diameter (defining the local scaling).
    pub fn eval(&self, center: [f64; 2], h: f64, points: &[[f64; 2]]) -> RtValues {
        let n = points.len();
        let mut vx = DMatrix::zeros(n, self.dim);
        let mut vy = DMatrix::zeros(n, self.dim);
        let mut dv = DMatrix::zeros(n, self.dim);
        let nm = self.monos.len();
        for (q, p) in points.iter().enumerate() {
            let xi = [(p[0] - center[0]) / h, (p[1] - center[1]) / h];
            for (j, &(a, b)) in self.monos.iter().enumerate() {
                let v = xi[0].powi(a as i32) * xi[1].powi(b as i32);
                let dx = if a > 0 {
                    a as f64 * xi[0].powi(a as i32 - 1) * xi[1].powi(b as i32)
                } else {
                    0.0
                };
                let dy = if b > 0 {
                    b as f64 * xi[0].powi(a as i32) * xi[1].powi(b as i32 - 1)
                } else {
                    0.0
                };
                vx[(q, j)] = v;
                dv[(q, j)] = dx / h;
                vy[(q, nm + j)] = v;
                dv[(q, nm + j)] = dy / h;
            }
            for (j, &(a, b)) in self.homog.iter().enumerate() {
                let hv = xi[0].powi(a as i32) * xi[1].powi(b as i32);
                vx[(q, 2 * nm + j)] = xi[0] * hv;
                vy[(q, 2 * nm + j)] = xi[1] * hv;
                // div(xi h) = (2 + m) h by Euler's homogeneous-function relation.
                dv[(q, 2 * nm + j)] = (2 + self.m) as f64 * hv / h;
            }
        }
        RtValues {
            x: vx,
            y: vy,
            div: dv,
        }
    }
}

/// DOF functionals applied to the raw basis on one element. Row order: for
/// each local edge l the moments <tau . n, mu>_F against the P_m(F) basis,
/// then the interior moments (tau, q)_T against both components of the
/// P_{m-1} basis.
pub fn rt_dof_matrix(rt: &RtBasis, mesh: &Mesh, element: usize) -> Result<DMatrix<f64>> {
    let geom = mesh.element_geometry(element)?;
    let center = geom.centroid();
    let m = rt.m;
    let edge_basis = EdgeBasis::new(m);
    let interior_basis = TriangleBasis::new(m - 1);
    let edge_rule = quad_edge(2 * m + 4)?;
    let tri_rule = quad_triangle(2 * m + 4)?;

    let mut d = DMatrix::zeros(rt.dim, rt.dim);
    let psi = edge_basis.eval(&edge_rule.points);
    let mut row = 0;
    for l in 0..3 {
        let face = mesh.element_to_faces[element][l].face;
        let len = mesh.face_length(face);
        let pts: Vec<[f64; 2]> = edge_rule
            .points
            .iter()
            .map(|&t| mesh.face_point(face, t))
            .collect();
        let vals = rt.eval(center, geom.h_t, &pts);
        let n = geom.outward_normals[l];
        for r in 0..=m {
            for j in 0..rt.dim {
                let mut acc = 0.0;
                for q in 0..pts.len() {
                    let tau_n = vals.x[(q, j)] * n[0] + vals.y[(q, j)] * n[1];
                    acc += edge_rule.weights[q] * tau_n * psi[(q, r)];
                }
                d[(row, j)] = len * acc;
            }
            row += 1;
        }
    }
    let phys: Vec<[f64; 2]> = tri_rule
        .points
        .iter()
        .map(|&p| geom.to_physical(p))
        .collect();
    let vals = rt.eval(center, geom.h_t, &phys);
    let vq = interior_basis.eval(&tri_rule.points);
    for comp in 0..2 {
        let vc = if comp == 0 { &vals.x } else { &vals.y };
        for i in 0..interior_basis.dim {
            for j in 0..rt.dim {
                let mut acc = 0.0;
                for q in 0..phys.len() {
                    acc += tri_rule.weights[q] * vc[(q, j)] * vq[(q, i)];
                }
                d[(row, j)] = geom.det.abs() * acc;
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, rt.dim);
    Ok(d)
}
