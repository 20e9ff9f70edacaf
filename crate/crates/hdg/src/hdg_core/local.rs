//! Element-local assembly of the hybridized system.
//!
//! Unknown blocks per element: flux coefficients s (2 * dim P_k), potential
//! coefficients u (dim P_{k+1}), and the traces lambda on the three edges
//! (k+1 each). With test rows ordered the same way, the scheme's three
//! equations read
//!
//! ```text
//!   A s + B u - C lam = 0
//!  -B^T s + E u - G lam = F_T
//!   C^T s - G^T u + H lam = 0
//! ```
//!
//! Negating the first row makes the block matrix symmetric, which is the form
//! used for condensation.

use nalgebra::{DMatrix, DVector};

use crate::error::{HdgError, Result};
use crate::fespace::FeSpaceTables;
use crate::mesh::{ElementGeometry, Mesh};

/// Problem data visible to the assembly: diffusion-weight matrix c (the flux
/// law is c sigma = grad u), volume load f, and Dirichlet boundary value g.
pub trait ProblemData {
    fn c(&self, x: f64, y: f64) -> [[f64; 2]; 2];
    fn f(&self, x: f64, y: f64) -> f64;
    fn g(&self, x: f64, y: f64) -> f64;
}

/// Scheme configuration: polynomial degree k of flux and traces (potential
/// uses k+1). The penalty is the fixed rule alpha_T = 1/h_T.
#[derive(Debug, Clone, Copy)]
pub struct HdgConfig {
    pub k: usize,
}

impl HdgConfig {
    pub fn new(k: usize) -> Result<Self> {
        if k > crate::fespace::MAX_DEGREE {
            return Err(HdgError::UnsupportedDegree(k));
        }
        Ok(HdgConfig { k })
    }

    /// Penalty parameter on one element: alpha_T = 1/h_T.
    pub fn penalty(&self, geom: &ElementGeometry) -> f64 {
        1.0 / geom.h_t
    }
}

/// Dense blocks of one element's contribution; see the module docs for the
/// block layout. `trace_q[l]` holds the scaled face moments
/// `Q[r][i] = (1/|F|) <phi_i^u, psi_r>_F`, i.e. the coefficients of the
/// face-trace projection of the potential basis.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub element: usize,
    pub k: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub load: DVector<f64>,
    pub trace_q: [DMatrix<f64>; 3],
    pub alpha: f64,
    pub face_lengths: [f64; 3],
}

impl LocalSystem {
    pub fn n_flux(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_potential(&self) -> usize {
        self.e.nrows()
    }

    pub fn n_trace(&self) -> usize {
        3 * (self.k + 1)
    }

    /// Interior block [[-A, -B], [-B^T, E]] of the symmetrized system.
    pub fn interior_matrix(&self) -> DMatrix<f64> {
        let (ns, nu) = (self.n_flux(), self.n_potential());
        let mut m = DMatrix::zeros(ns + nu, ns + nu);
        m.view_mut((0, 0), (ns, ns)).copy_from(&(-&self.a));
        m.view_mut((0, ns), (ns, nu)).copy_from(&(-&self.b));
        m.view_mut((ns, 0), (nu, ns)).copy_from(&(-self.b.transpose()));
        m.view_mut((ns, ns), (nu, nu)).copy_from(&self.e);
        m
    }

    /// Interior-to-trace coupling [C; -G] of the symmetrized system.
    pub fn coupling(&self) -> DMatrix<f64> {
        let (ns, nu, nl) = (self.n_flux(), self.n_potential(), self.n_trace());
        let mut m = DMatrix::zeros(ns + nu, nl);
        m.view_mut((0, 0), (ns, nl)).copy_from(&self.c);
        m.view_mut((ns, 0), (nu, nl)).copy_from(&(-&self.g));
        m
    }

    /// Interior right-hand side (0; F_T).
    pub fn interior_rhs(&self) -> DVector<f64> {
        let (ns, nu) = (self.n_flux(), self.n_potential());
        let mut r = DVector::zeros(ns + nu);
        r.rows_mut(ns, nu).copy_from(&self.load);
        r
    }

    /// Full symmetric element matrix over (s, u, lam), for oracle tests and
    /// the monolithic reference solve.
    pub fn full_symmetric(&self) -> DMatrix<f64> {
        let (ns, nu, nl) = (self.n_flux(), self.n_potential(), self.n_trace());
        let n = ns + nu + nl;
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (ns + nu, ns + nu))
            .copy_from(&self.interior_matrix());
        m.view_mut((0, ns + nu), (ns + nu, nl)).copy_from(&self.coupling());
        m.view_mut((ns + nu, 0), (nl, ns + nu))
            .copy_from(&self.coupling().transpose());
        m.view_mut((ns + nu, ns + nu), (nl, nl)).copy_from(&self.h);
        m
    }
}

/// Face moments of the potential basis on each local edge: row r of block l
/// holds `(1/|F|) <phi_i^u, psi_r>_F` in the canonical face parametrization.
/// Applying a block to potential coefficients yields the face-trace
/// projection of the potential onto P_k(F) in the orthonormal face basis.
pub fn potential_face_moments(
    mesh: &Mesh,
    element: usize,
    tables: &FeSpaceTables,
) -> Result<[DMatrix<f64>; 3]> {
    let geom = mesh.element_geometry(element)?;
    let nu = tables.potential.dim;
    let nlam = tables.trace_dim();
    let erule = &tables.assembly_edge_rule;
    let psi = tables.trace.eval(&erule.points);
    let mut out: [DMatrix<f64>; 3] = [
        DMatrix::zeros(nlam, nu),
        DMatrix::zeros(nlam, nu),
        DMatrix::zeros(nlam, nu),
    ];
    for l in 0..3 {
        let face = mesh.element_to_faces[element][l].face;
        let rpts: Vec<[f64; 2]> = erule
            .points
            .iter()
            .map(|&t| geom.to_reference(mesh.face_point(face, t)))
            .collect();
        let veu = tables.potential.eval(&rpts);
        for r in 0..nlam {
            for i in 0..nu {
                // Orthonormal psi in the t-measure: the 1/|F| normalization
                // and the face measure cancel.
                out[l][(r, i)] = (0..erule.points.len())
                    .map(|q| erule.weights[q] * veu[(q, i)] * psi[(q, r)])
                    .sum();
            }
        }
    }
    Ok(out)
}

/// Assembles the element blocks with the tables' assembly quadrature.
pub fn assemble_local(
    mesh: &Mesh,
    element: usize,
    config: &HdgConfig,
    problem: &dyn ProblemData,
    tables: &FeSpaceTables,
) -> Result<LocalSystem> {
    debug_assert_eq!(config.k, tables.k);
    let geom = mesh.element_geometry(element)?;
    let alpha = config.penalty(&geom);
    let nk = tables.flux.dim;
    let ns = 2 * nk;
    let nu = tables.potential.dim;
    let nlam = tables.trace_dim();

    let rule = &tables.assembly_rule;
    let nq = rule.points.len();
    let phys: Vec<[f64; 2]> = rule.points.iter().map(|&p| geom.to_physical(p)).collect();
    let weights: Vec<f64> = rule.weights.iter().map(|&w| w * geom.det.abs()).collect();

    let vs = tables.flux.eval(&rule.points);
    let vu = tables.potential.eval(&rule.points);
    let (gsx, gsy) = tables.flux.grad(&rule.points);

    // c at quadrature points, with the SPD precondition checked.
    let mut c00 = vec![0.0; nq];
    let mut c01 = vec![0.0; nq];
    let mut c11 = vec![0.0; nq];
    for (q, p) in phys.iter().enumerate() {
        let c = problem.c(p[0], p[1]);
        let asym = (c[0][1] - c[1][0]).abs();
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        if c[0][0] <= 0.0 || det <= 0.0 || asym > 1e-12 * (1.0 + c[0][0].abs()) {
            return Err(HdgError::NonSpdCoefficient { x: p[0], y: p[1] });
        }
        c00[q] = c[0][0];
        c01[q] = 0.5 * (c[0][1] + c[1][0]);
        c11[q] = c[1][1];
    }

    // A: (c phi_j, phi_i) over the paired scalar basis (x-block then y-block).
    let mut a = DMatrix::zeros(ns, ns);
    for i in 0..nk {
        for j in 0..nk {
            let (mut mxx, mut mxy, mut myy) = (0.0, 0.0, 0.0);
            for q in 0..nq {
                let w = weights[q] * vs[(q, i)] * vs[(q, j)];
                mxx += w * c00[q];
                mxy += w * c01[q];
                myy += w * c11[q];
            }
            a[(i, j)] = mxx;
            a[(i, nk + j)] = mxy;
            a[(nk + i, j)] = mxy;
            a[(nk + i, nk + j)] = myy;
        }
    }

    // B: (phi_j^u, div phi_i^sigma); physical divergence of (phi, 0) is the
    // x-component of J^{-T} grad_ref phi.
    let mut div = DMatrix::zeros(nq, ns);
    for q in 0..nq {
        for i in 0..nk {
            let gp = geom.gradient_to_physical([gsx[(q, i)], gsy[(q, i)]]);
            div[(q, i)] = gp[0];
            div[(q, nk + i)] = gp[1];
        }
    }
    let mut b = DMatrix::zeros(ns, nu);
    for i in 0..ns {
        for j in 0..nu {
            b[(i, j)] = (0..nq).map(|q| weights[q] * vu[(q, j)] * div[(q, i)]).sum();
        }
    }

    // Load vector (f, phi^u).
    let mut load = DVector::zeros(nu);
    for j in 0..nu {
        load[j] = (0..nq)
            .map(|q| weights[q] * problem.f(phys[q][0], phys[q][1]) * vu[(q, j)])
            .sum();
    }

    // Face blocks.
    let erule = &tables.assembly_edge_rule;
    let psi = tables.trace.eval(&erule.points);
    let trace_q = potential_face_moments(mesh, element, tables)?;
    let mut cmat = DMatrix::zeros(ns, 3 * nlam);
    let mut gmat = DMatrix::zeros(nu, 3 * nlam);
    let mut h = DMatrix::zeros(3 * nlam, 3 * nlam);
    let mut e = DMatrix::zeros(nu, nu);
    let mut face_lengths = [0.0; 3];
    for l in 0..3 {
        let face = mesh.element_to_faces[element][l].face;
        let len = mesh.face_length(face);
        face_lengths[l] = len;
        let fpts: Vec<[f64; 2]> = erule.points.iter().map(|&t| mesh.face_point(face, t)).collect();
        let rpts: Vec<[f64; 2]> = fpts.iter().map(|&x| geom.to_reference(x)).collect();
        let ves = tables.flux.eval(&rpts);
        let n = geom.outward_normals[l];
        for i in 0..nk {
            for r in 0..nlam {
                let v: f64 = (0..erule.points.len())
                    .map(|q| erule.weights[q] * ves[(q, i)] * psi[(q, r)])
                    .sum();
                cmat[(i, l * nlam + r)] = len * v * n[0];
                cmat[(nk + i, l * nlam + r)] = len * v * n[1];
            }
        }
        let q_f = &trace_q[l];
        for r in 0..nlam {
            h[(l * nlam + r, l * nlam + r)] = alpha * len;
            for i in 0..nu {
                gmat[(i, l * nlam + r)] = alpha * len * q_f[(r, i)];
            }
        }
        e += alpha * len * q_f.transpose() * q_f;
    }

    Ok(LocalSystem {
        element,
        k: config.k,
        a,
        b,
        c: cmat,
        e,
        g: gmat,
        h,
        load,
        trace_q,
        alpha,
        face_lengths,
    })
}
