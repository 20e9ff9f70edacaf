//! Polynomial bases, quadrature, and L2 projection machinery for degrees
//! k = 0..=3.

pub mod basis;
pub mod quad;
pub mod rt;

pub use basis::{EdgeBasis, TriangleBasis};
pub use quad::{quad_edge, quad_triangle, EdgeQuadRule, QuadRule, MAX_EXACTNESS};
pub use rt::{rt_dof_matrix, RtBasis, RtValues};

use crate::error::{HdgError, Result};
use crate::mesh::{ElementGeometry, Mesh};

/// Largest supported trace/flux degree k.
pub const MAX_DEGREE: usize = 3;

/// Shared per-degree tables: bases and quadrature rules sized for assembling
/// the scheme (flux/trace degree k, potential degree k+1) and for error norms.
///
/// Assembly rules carry extra exactness to absorb smooth non-polynomial
/// coefficients; the error rule is finer still so quadrature error stays below
/// discretization error.
#[derive(Debug, Clone)]
pub struct FeSpaceTables {
    pub k: usize,
    /// P_k, one scalar component of the flux space.
    pub flux: TriangleBasis,
    /// P_{k+1}, the potential space.
    pub potential: TriangleBasis,
    /// P_k(F), the trace space in canonical face parametrization.
    pub trace: EdgeBasis,
    pub assembly_rule: QuadRule,
    pub assembly_edge_rule: EdgeQuadRule,
    pub error_rule: QuadRule,
    pub error_edge_rule: EdgeQuadRule,
}

impl FeSpaceTables {
    pub fn new(k: usize) -> Result<Self> {
        if k > MAX_DEGREE {
            return Err(HdgError::UnsupportedDegree(k));
        }
        Ok(FeSpaceTables {
            k,
            flux: TriangleBasis::new(k),
            potential: TriangleBasis::new(k + 1),
            trace: EdgeBasis::new(k),
            assembly_rule: quad_triangle(2 * (k + 1) + 4)?,
            assembly_edge_rule: quad_edge(2 * k + 2)?,
            error_rule: quad_triangle(2 * (k + 2) + 6)?,
            error_edge_rule: quad_edge(2 * (k + 2) + 6)?,
        })
    }

    pub fn flux_dim(&self) -> usize {
        2 * self.flux.dim
    }

    pub fn trace_dim(&self) -> usize {
        self.k + 1
    }
}

/// L2 projection of `f` onto P_degree on one element; returns coefficients in
/// the reference-orthonormal basis. With that basis the element mass matrix is
/// |det J| I, so coefficients are plain weighted sums.
pub fn l2_project_element(
    f: &dyn Fn(f64, f64) -> f64,
    degree: usize,
    geom: &ElementGeometry,
) -> Result<Vec<f64>> {
    if degree > MAX_DEGREE + 3 {
        return Err(HdgError::UnsupportedDegree(degree));
    }
    let basis = TriangleBasis::new(degree);
    let rule = quad_triangle((2 * degree + 10).min(quad::MAX_EXACTNESS))?;
    let v = basis.eval(&rule.points);
    let mut coeffs = vec![0.0; basis.dim];
    for (q, p) in rule.points.iter().enumerate() {
        let x = geom.to_physical(*p);
        let fv = f(x[0], x[1]);
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c += rule.weights[q] * fv * v[(q, i)];
        }
    }
    Ok(coeffs)
}

/// Evaluates a coefficient vector in the reference-orthonormal P_degree basis
/// at reference points.
pub fn eval_scalar(basis: &TriangleBasis, coeffs: &[f64], points: &[[f64; 2]]) -> Vec<f64> {
    let v = basis.eval(points);
    (0..points.len())
        .map(|q| (0..basis.dim).map(|i| coeffs[i] * v[(q, i)]).sum())
        .collect()
}

/// L2(F) projection of a boundary-trace function onto P_k(F) for each face of
/// one element, in canonical face parametrization. Coefficient vectors refer
/// to the orthonormal [`EdgeBasis`].
pub fn trace_project(
    v: &dyn Fn(f64, f64) -> f64,
    k: usize,
    mesh: &Mesh,
    element: usize,
) -> Result<[Vec<f64>; 3]> {
    if k > MAX_DEGREE {
        return Err(HdgError::UnsupportedDegree(k));
    }
    let basis = EdgeBasis::new(k);
    let rule = quad_edge((2 * k + 10).min(quad::MAX_EXACTNESS))?;
    let psi = basis.eval(&rule.points);
    let mut out: [Vec<f64>; 3] = [vec![], vec![], vec![]];
    for l in 0..3 {
        let face = mesh.element_to_faces[element][l].face;
        let mut coeffs = vec![0.0; basis.dim];
        for (q, &t) in rule.points.iter().enumerate() {
            let x = mesh.face_point(face, t);
            let fv = v(x[0], x[1]);
            for (r, c) in coeffs.iter_mut().enumerate() {
                *c += rule.weights[q] * fv * psi[(q, r)];
            }
        }
        out[l] = coeffs;
    }
    Ok(out)
}
