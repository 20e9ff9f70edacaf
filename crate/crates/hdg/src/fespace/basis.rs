//! Orthonormalized polynomial bases on the reference triangle and edge.
//!
//! Both bases start from monomials and are orthonormalized against the exact
//! reference Gram matrix (iterated Cholesky). Orthonormality is near machine
//! precision through degree 4 and degrades with the monomial conditioning
//! (roughly 4^m) beyond that, which covers every degree the solver uses. An
//! L2 projection onto the mapped basis then needs no mass-matrix solve: on an
//! affine element the physical Gram is |det J| * I.

use nalgebra::DMatrix;

use super::quad::reference_monomial_integral;

/// Monomial exponent pairs of total degree <= m, graded order.
pub fn monomial_powers(m: usize) -> Vec<(u32, u32)> {
    let mut p = Vec::with_capacity((m + 1) * (m + 2) / 2);
    for d in 0..=m as u32 {
        for a in (0..=d).rev() {
            p.push((a, d - a));
        }
    }
    p
}

/// Orthonormalizes row space: given the exact Gram `g` of raw functions,
/// returns `c` with `c g c^T = I`; rows of `c` are the orthonormal basis in
/// raw-function coordinates. Repeated Cholesky passes on the recomputed Gram
/// remove the conditioning loss of a single factorization.
fn orthonormal_coefficients(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut c = DMatrix::identity(n, n);
    for _ in 0..3 {
        let gc = &c * g * c.transpose();
        let defect = (&gc - DMatrix::identity(n, n)).abs().max();
        if defect < 1e-15 {
            break;
        }
        let chol = gc.cholesky().expect("reference Gram is SPD");
        let step = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular solve");
        c = step * c;
    }
    c
}

/// Scalar basis of P_m on the reference triangle, orthonormal in L2.
#[derive(Debug, Clone)]
pub struct TriangleBasis {
    pub degree: usize,
    pub dim: usize,
    powers: Vec<(u32, u32)>,
    /// Rows: basis functions in monomial coordinates.
    coeff: DMatrix<f64>,
}

impl TriangleBasis {
    pub fn new(degree: usize) -> Self {
        let powers = monomial_powers(degree);
        let dim = powers.len();
        let mut gram = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                gram[(i, j)] = reference_monomial_integral(
                    powers[i].0 + powers[j].0,
                    powers[i].1 + powers[j].1,
                );
            }
        }
        let coeff = orthonormal_coefficients(&gram);
        TriangleBasis {
            degree,
            dim,
            powers,
            coeff,
        }
    }

    /// Values at reference points: (n_points, dim).
    pub fn eval(&self, points: &[[f64; 2]]) -> DMatrix<f64> {
        let mut mono = DMatrix::zeros(points.len(), self.dim);
        for (q, p) in points.iter().enumerate() {
            for (j, &(a, b)) in self.powers.iter().enumerate() {
                mono[(q, j)] = p[0].powi(a as i32) * p[1].powi(b as i32);
            }
        }
        mono * self.coeff.transpose()
    }

    /// Reference-coordinate gradients at reference points: (d/dx, d/dy), each
    /// (n_points, dim).
    pub fn grad(&self, points: &[[f64; 2]]) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = points.len();
        let mut gx = DMatrix::zeros(n, self.dim);
        let mut gy = DMatrix::zeros(n, self.dim);
        for (q, p) in points.iter().enumerate() {
            for (j, &(a, b)) in self.powers.iter().enumerate() {
                gx[(q, j)] = if a > 0 {
                    a as f64 * p[0].powi(a as i32 - 1) * p[1].powi(b as i32)
                } else {
                    0.0
                };
                gy[(q, j)] = if b > 0 {
                    b as f64 * p[0].powi(a as i32) * p[1].powi(b as i32 - 1)
                } else {
                    0.0
                };
            }
        }
        (gx * self.coeff.transpose(), gy * self.coeff.transpose())
    }
}

/// Basis of P_m on the reference edge [0,1], orthonormal in L2(0,1)
/// (shifted Legendre, normalized).
#[derive(Debug, Clone)]
pub struct EdgeBasis {
    pub degree: usize,
    pub dim: usize,
    coeff: DMatrix<f64>,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        let dim = degree + 1;
        let mut gram = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                gram[(i, j)] = 1.0 / (i + j + 1) as f64;
            }
        }
        let coeff = orthonormal_coefficients(&gram);
        EdgeBasis { degree, dim, coeff }
    }

    /// Values at parameters in [0,1]: (n_points, dim).
    pub fn eval(&self, points: &[f64]) -> DMatrix<f64> {
        let mut mono = DMatrix::zeros(points.len(), self.dim);
        for (q, &t) in points.iter().enumerate() {
            for j in 0..self.dim {
                mono[(q, j)] = t.powi(j as i32);
            }
        }
        mono * self.coeff.transpose()
    }
}
