//! Analysis-side operators as executable oracles: averaging and
//! interpolation operators onto conforming spaces, face projections, the
//! error triple, and the seminorms used to verify the solver's convergence
//! structure.

use nalgebra::{DMatrix, DVector};

use crate::error::{HdgError, Result};
use crate::fespace::{l2_project_element, quad_edge, quad_triangle, FeSpaceTables, TriangleBasis};
use crate::hdg_core::{potential_face_moments, HDGSolution, ProblemData};
use crate::mesh::Mesh;

/// Barycentric coordinates of a reference point (vertex order 0, 1, 2).
fn bary(r: [f64; 2]) -> [f64; 3] {
    [1.0 - r[0] - r[1], r[0], r[1]]
}

/// Reference gradients of the barycentric coordinates.
const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Piecewise polynomial field evaluated elementwise in reference
/// coordinates; `degree` bounds the polynomial degree for quadrature
/// selection.
pub trait PiecewiseField {
    fn value(&self, mesh: &Mesh, element: usize, r: [f64; 2]) -> f64;
    /// Physical gradient.
    fn gradient(&self, mesh: &Mesh, element: usize, r: [f64; 2]) -> [f64; 2];
    fn degree(&self) -> usize;
}

/// Continuous piecewise-linear field given by vertex values; boundary
/// vertices carry exact zeros.
#[derive(Debug, Clone)]
pub struct ConformingP1Field {
    pub values: Vec<f64>,
}

impl PiecewiseField for ConformingP1Field {
    fn value(&self, mesh: &Mesh, element: usize, r: [f64; 2]) -> f64 {
        let tri = mesh.triangles[element];
        let b = bary(r);
        (0..3).map(|i| self.values[tri[i]] * b[i]).sum()
    }

    fn gradient(&self, mesh: &Mesh, element: usize, r: [f64; 2]) -> [f64; 2] {
        let _ = r;
        let tri = mesh.triangles[element];
        let geom = mesh.element_geometry(element).expect("valid element");
        let mut g = [0.0, 0.0];
        for i in 0..3 {
            g[0] += self.values[tri[i]] * BARY_GRAD[i][0];
            g[1] += self.values[tri[i]] * BARY_GRAD[i][1];
        }
        geom.gradient_to_physical(g)
    }

    fn degree(&self) -> usize {
        1
    }
}

/// Element-local enriched field: for each local face l a combination of the
/// edge-bubble functions lam_l lam_{l+1} lam_l^a (a = 0..k), which vanish on
/// the other two faces, plus an interior-bubble block
/// (lam_0 lam_1 lam_2) P_k(T).
#[derive(Debug, Clone)]
pub struct EnrichedLocalField {
    pub k: usize,
    pub face_coeffs: [Vec<f64>; 3],
    /// Coefficients over the orthonormal P_k basis multiplying the bubble.
    pub bubble_coeffs: Vec<f64>,
}

impl EnrichedLocalField {
    pub fn zero(k: usize) -> Self {
        let dim = (k + 1) * (k + 2) / 2;
        EnrichedLocalField {
            k,
            face_coeffs: [vec![0.0; k + 1], vec![0.0; k + 1], vec![0.0; k + 1]],
            bubble_coeffs: vec![0.0; dim],
        }
    }

    /// Value at a reference point.
    pub fn value_ref(&self, basis: &TriangleBasis, r: [f64; 2]) -> f64 {
        let b = bary(r);
        let mut v = 0.0;
        for l in 0..3 {
            let (bl, bl1) = (b[l], b[(l + 1) % 3]);
            let mut pow = 1.0;
            for a in 0..=self.k {
                v += self.face_coeffs[l][a] * bl * bl1 * pow;
                pow *= bl;
            }
        }
        let phi = basis.eval(&[r]);
        let p: f64 = (0..basis.dim).map(|i| self.bubble_coeffs[i] * phi[(0, i)]).sum();
        v + b[0] * b[1] * b[2] * p
    }

    /// Reference gradient at a reference point.
    pub fn grad_ref(&self, basis: &TriangleBasis, r: [f64; 2]) -> [f64; 2] {
        let b = bary(r);
        let mut g = [0.0, 0.0];
        for l in 0..3 {
            let (bl, bl1) = (b[l], b[(l + 1) % 3]);
            let (gl, gl1) = (BARY_GRAD[l], BARY_GRAD[(l + 1) % 3]);
            for a in 0..=self.k {
                // d/dr [ bl^{a+1} bl1 ]
                let c = self.face_coeffs[l][a];
                let powa = bl.powi(a as i32);
                for d in 0..2 {
                    g[d] += c
                        * ((a as f64 + 1.0) * powa * gl[d] * bl1 + powa * bl * gl1[d]);
                }
            }
        }
        let phi = basis.eval(&[r]);
        let (px, py) = basis.grad(&[r]);
        let p: f64 = (0..basis.dim).map(|i| self.bubble_coeffs[i] * phi[(0, i)]).sum();
        let gp = [
            (0..basis.dim).map(|i| self.bubble_coeffs[i] * px[(0, i)]).sum::<f64>(),
            (0..basis.dim).map(|i| self.bubble_coeffs[i] * py[(0, i)]).sum::<f64>(),
        ];
        let bub = b[0] * b[1] * b[2];
        let gbub = [
            BARY_GRAD[0][0] * b[1] * b[2] + b[0] * BARY_GRAD[1][0] * b[2]
                + b[0] * b[1] * BARY_GRAD[2][0],
            BARY_GRAD[0][1] * b[1] * b[2] + b[0] * BARY_GRAD[1][1] * b[2]
                + b[0] * b[1] * BARY_GRAD[2][1],
        ];
        [g[0] + gbub[0] * p + bub * gp[0], g[1] + gbub[1] * p + bub * gp[1]]
    }
}

/// Global interpolant: the conforming P1 part plus one enriched local field
/// per element. Piecewise polynomial of degree k + 3.
pub struct PiField {
    pub k: usize,
    pub p1: ConformingP1Field,
    pub local: Vec<EnrichedLocalField>,
    basis: TriangleBasis,
}

impl PiecewiseField for PiField {
    fn value(&self, mesh: &Mesh, element: usize, r: [f64; 2]) -> f64 {
        self.p1.value(mesh, element, r) + self.local[element].value_ref(&self.basis, r)
    }

    fn gradient(&self, mesh: &Mesh, element: usize, r: [f64; 2]) -> [f64; 2] {
        let geom = mesh.element_geometry(element).expect("valid element");
        let ge = geom.gradient_to_physical(self.local[element].grad_ref(&self.basis, r));
        let gp = self.p1.gradient(mesh, element, r);
        [gp[0] + ge[0], gp[1] + ge[1]]
    }

    fn degree(&self) -> usize {
        self.k + 3
    }
}

/// Edge quadrature used when integrating caller-supplied face data.
const FACE_DATA_EXACTNESS: usize = 16;

/// Element average of face means: (1/3) sum over the three faces of
/// (1/|F|) int_F mu.
pub fn m_t<M>(mesh: &Mesh, element: usize, mu: &M) -> Result<f64>
where
    M: Fn(usize, f64) -> f64 + ?Sized,
{
    assert!(element < mesh.n_elements());
    let rule = quad_edge(FACE_DATA_EXACTNESS)?;
    let mut acc = 0.0;
    for l in 0..3 {
        let face = mesh.element_to_faces[element][l].face;
        // In the canonical parametrization the face mean is the plain
        // t-integral; the face measure cancels.
        for (q, &t) in rule.points.iter().enumerate() {
            acc += rule.weights[q] * mu(face, t);
        }
    }
    Ok(acc / 3.0)
}

/// Conforming P1 averaging: each interior vertex takes the average of m_T
/// over its incident elements; boundary vertices are exactly zero.
pub fn pi0<M>(mesh: &Mesh, mu: &M) -> Result<ConformingP1Field>
where
    M: Fn(usize, f64) -> f64 + ?Sized,
{
    let mut boundary = vec![false; mesh.n_vertices()];
    for face in 0..mesh.n_faces() {
        if mesh.is_boundary_face(face) {
            for &v in &mesh.faces[face] {
                boundary[v] = true;
            }
        }
    }
    let mut sums = vec![0.0; mesh.n_vertices()];
    let mut counts = vec![0usize; mesh.n_vertices()];
    for e in 0..mesh.n_elements() {
        let avg = m_t(mesh, e, mu)?;
        for &v in &mesh.triangles[e] {
            sums[v] += avg;
            counts[v] += 1;
        }
    }
    let values = (0..mesh.n_vertices())
        .map(|v| {
            if boundary[v] || counts[v] == 0 {
                0.0
            } else {
                sums[v] / counts[v] as f64
            }
        })
        .collect();
    Ok(ConformingP1Field { values })
}

/// Face-bubble coefficients on one face: solves the (k+1) x (k+1) moment
/// system so that the face moments of the edge-bubble combination against
/// P_k(F) match those of mu.
fn face_block<M>(
    mesh: &Mesh,
    element: usize,
    k: usize,
    l: usize,
    mu: &M,
) -> Result<Vec<f64>>
where
    M: Fn(usize, f64) -> f64 + ?Sized,
{
    let geom = mesh.element_geometry(element)?;
    let face = mesh.element_to_faces[element][l].face;
    let rule = quad_edge((2 * k + 10).min(crate::fespace::MAX_EXACTNESS))?;
    let psi = crate::fespace::EdgeBasis::new(k).eval(&rule.points);
    let mut m = DMatrix::zeros(k + 1, k + 1);
    let mut d = DVector::zeros(k + 1);
    for (q, &t) in rule.points.iter().enumerate() {
        let r = geom.to_reference(mesh.face_point(face, t));
        let b = bary(r);
        let (bl, bl1) = (b[l], b[(l + 1) % 3]);
        let mut pow = 1.0;
        let mut bvals = Vec::with_capacity(k + 1);
        for _ in 0..=k {
            bvals.push(bl * bl1 * pow);
            pow *= bl;
        }
        let w = rule.weights[q];
        for rr in 0..=k {
            d[rr] += w * mu(face, t) * psi[(q, rr)];
            for a in 0..=k {
                m[(rr, a)] += w * bvals[a] * psi[(q, rr)];
            }
        }
    }
    let c = m.lu().solve(&d).ok_or(HdgError::SingularLocalSystem {
        element,
        context: "face moment block",
    })?;
    Ok(c.iter().copied().collect())
}

/// Local interpolation: w_1 from the face-bubble blocks matches mu's face
/// moments against P_k(F); w_2 from the interior-bubble block matches the
/// element moments of v - w_1 against P_k(T). Returns w_1 + w_2.
pub fn pi1<V, M>(
    mesh: &Mesh,
    element: usize,
    k: usize,
    v: &V,
    mu: &M,
) -> Result<EnrichedLocalField>
where
    V: Fn([f64; 2]) -> f64 + ?Sized,
    M: Fn(usize, f64) -> f64 + ?Sized,
{
    let geom = mesh.element_geometry(element)?;
    let basis = TriangleBasis::new(k);
    let mut out = EnrichedLocalField::zero(k);
    for l in 0..3 {
        out.face_coeffs[l] = face_block(mesh, element, k, l, mu)?;
    }

    // Interior block: (bubble p, q)_T = (v - w_1, q)_T for q in P_k(T);
    // reference-coordinate integrals, the Jacobian cancels on both sides.
    let rule = quad_triangle((2 * k + 10).min(crate::fespace::MAX_EXACTNESS))?;
    let phi = basis.eval(&rule.points);
    let mut w = DMatrix::zeros(basis.dim, basis.dim);
    let mut r = DVector::zeros(basis.dim);
    for (q, &p) in rule.points.iter().enumerate() {
        let b = bary(p);
        let bub = b[0] * b[1] * b[2];
        let w1 = out.value_ref(&basis, p); // bubble block still zero
        let vval = v(geom.to_physical(p));
        let wq = rule.weights[q];
        for i in 0..basis.dim {
            r[i] += wq * (vval - w1) * phi[(q, i)];
            for j in 0..basis.dim {
                w[(i, j)] += wq * bub * phi[(q, j)] * phi[(q, i)];
            }
        }
    }
    let c = w.lu().solve(&r).ok_or(HdgError::SingularLocalSystem {
        element,
        context: "interior moment block",
    })?;
    out.bubble_coeffs = c.iter().copied().collect();
    Ok(out)
}

/// Global interpolation: the P1 average plus the local correction,
/// pi0(mu) + pi1(v - pi0, mu - pi0) per element. Reproduces v's element
/// moments against P_k(T) and mu's face moments against P_k(F); continuous
/// whenever mu is single-valued.
pub fn pi_h<V, M>(mesh: &Mesh, k: usize, v: &V, mu: &M) -> Result<PiField>
where
    V: Fn(usize, [f64; 2]) -> f64 + ?Sized,
    M: Fn(usize, f64) -> f64 + ?Sized,
{
    let p1 = pi0(mesh, mu)?;
    let mut local = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let geom = mesh.element_geometry(e)?;
        let p_phys = {
            let p1 = &p1;
            move |x: [f64; 2]| -> f64 {
                p1.value(mesh, e, geom.to_reference(x))
            }
        };
        let v_shift = |x: [f64; 2]| v(e, x) - p_phys(x);
        let mu_shift = |face: usize, t: f64| mu(face, t) - p_phys(mesh.face_point(face, t));
        local.push(pi1(mesh, e, k, &v_shift, &mu_shift)?);
    }
    Ok(PiField {
        k,
        p1,
        local,
        basis: TriangleBasis::new(k),
    })
}

/// L2(F) projection of a function of physical coordinates onto P_k(F), in
/// the orthonormal face basis of the canonical parametrization.
pub fn p_m<W>(mesh: &Mesh, face: usize, k: usize, w: &W) -> Result<Vec<f64>>
where
    W: Fn(f64, f64) -> f64 + ?Sized,
{
    assert!(face < mesh.n_faces());
    let rule = quad_edge((2 * k + 10).min(crate::fespace::MAX_EXACTNESS))?;
    let psi = crate::fespace::EdgeBasis::new(k).eval(&rule.points);
    let mut c = vec![0.0; k + 1];
    for (q, &t) in rule.points.iter().enumerate() {
        let x = mesh.face_point(face, t);
        for (r, cr) in c.iter_mut().enumerate() {
            *cr += rule.weights[q] * w(x[0], x[1]) * psi[(q, r)];
        }
    }
    Ok(c)
}

/// Discretization-error components relative to elementwise projections of
/// the exact solution: e_u = u_h - P^{k+1} u (potential basis), e_sigma =
/// sigma_h - P^k sigma (flux basis), e_lambda = lambda_h - P_M u (face
/// basis).
#[derive(Debug, Clone)]
pub struct ErrorTriple {
    pub k: usize,
    pub e_u: Vec<DVector<f64>>,
    pub e_sigma: Vec<DVector<f64>>,
    pub e_lambda: Vec<Vec<f64>>,
}

pub fn error_triple<U, S>(
    mesh: &Mesh,
    sol: &HDGSolution,
    exact_u: &U,
    exact_sigma: &S,
) -> Result<ErrorTriple>
where
    U: Fn(f64, f64) -> f64 + ?Sized,
    S: Fn(f64, f64) -> [f64; 2] + ?Sized,
{
    let k = sol.k;
    let tables = FeSpaceTables::new(k)?;
    let nk = tables.flux.dim;
    let mut e_u = Vec::with_capacity(mesh.n_elements());
    let mut e_sigma = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let geom = mesh.element_geometry(e)?;
        let pu = l2_project_element(&|x, y| exact_u(x, y), k + 1, &geom)?;
        let psx = l2_project_element(&|x, y| exact_sigma(x, y)[0], k, &geom)?;
        let psy = l2_project_element(&|x, y| exact_sigma(x, y)[1], k, &geom)?;
        let mut du = sol.u[e].clone();
        for (i, p) in pu.iter().enumerate() {
            du[i] -= p;
        }
        let mut ds = sol.sigma[e].clone();
        for i in 0..nk {
            ds[i] -= psx[i];
            ds[nk + i] -= psy[i];
        }
        e_u.push(du);
        e_sigma.push(ds);
    }
    let mut e_lambda = Vec::with_capacity(mesh.n_faces());
    for face in 0..mesh.n_faces() {
        let proj = p_m(mesh, face, k, &|x, y| exact_u(x, y))?;
        let d: Vec<f64> = sol.lambda[face]
            .iter()
            .zip(proj.iter())
            .map(|(a, b)| a - b)
            .collect();
        e_lambda.push(d);
    }
    Ok(ErrorTriple {
        k,
        e_u,
        e_sigma,
        e_lambda,
    })
}

/// Discrete energy seminorm of an error triple:
/// ( ||e_sigma||_c^2 + sum_T alpha_T sum_F |F| || P_F e_u - e_lambda ||_F^2 )^{1/2}
/// with the face norm taken in the orthonormal-moment coordinates.
pub fn triple_norm(
    err: &ErrorTriple,
    mesh: &Mesh,
    problem: &dyn ProblemData,
    k: usize,
) -> Result<f64> {
    assert_eq!(err.k, k);
    let tables = FeSpaceTables::new(k)?;
    let nk = tables.flux.dim;
    let nlam = tables.trace_dim();
    let rule = &tables.error_rule;
    let vs = tables.flux.eval(&rule.points);
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let geom = mesh.element_geometry(e)?;
        // Weighted flux norm.
        for (q, p) in rule.points.iter().enumerate() {
            let x = geom.to_physical(*p);
            let c = problem.c(x[0], x[1]);
            let sx: f64 = (0..nk).map(|i| err.e_sigma[e][i] * vs[(q, i)]).sum();
            let sy: f64 = (0..nk).map(|i| err.e_sigma[e][nk + i] * vs[(q, i)]).sum();
            let cs = [c[0][0] * sx + c[0][1] * sy, c[1][0] * sx + c[1][1] * sy];
            total += rule.weights[q] * geom.det.abs() * (cs[0] * sx + cs[1] * sy);
        }
        // Penalty jump terms.
        let alpha = 1.0 / geom.h_t;
        let qf = potential_face_moments(mesh, e, &tables)?;
        for l in 0..3 {
            let face = mesh.element_to_faces[e][l].face;
            let len = mesh.face_length(face);
            for r in 0..nlam {
                let pu: f64 = (0..err.e_u[e].len())
                    .map(|i| qf[l][(r, i)] * err.e_u[e][i])
                    .sum();
                let d = pu - err.e_lambda[face][r];
                total += alpha * len * d * d;
            }
        }
    }
    Ok(total.sqrt())
}

/// Broken H1 seminorm: (sum_T int_T |grad w|^2)^{1/2} by quadrature.
pub fn broken_h1_seminorm(field: &dyn PiecewiseField, mesh: &Mesh) -> Result<f64> {
    let exactness = (2 * field.degree().saturating_sub(1)).min(crate::fespace::MAX_EXACTNESS);
    let rule = quad_triangle(exactness.max(1))?;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let geom = mesh.element_geometry(e)?;
        for (q, &p) in rule.points.iter().enumerate() {
            let g = field.gradient(mesh, e, p);
            total += rule.weights[q] * geom.det.abs() * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    Ok(total.sqrt())
}
