//! Gauss–Legendre edge rules and conical-product triangle rules with
//! prescribed polynomial exactness.

use crate::error::{HdgError, Result};

pub const MAX_EXACTNESS: usize = 20;

/// Quadrature on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Quadrature on the reference edge [0,1]; weights sum to 1.
#[derive(Debug, Clone)]
pub struct EdgeQuadRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Legendre polynomial value and derivative at `x` by three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// n-point Gauss–Legendre nodes and weights on [0,1], ascending.
fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        // cos ordering is descending in x; store ascending.
        pts[n - 1 - i] = (x + 1.0) / 2.0;
        wts[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (pts, wts)
}

/// Gauss–Legendre rule on [0,1] exact for polynomials up to `exactness`.
pub fn quad_edge(exactness: usize) -> Result<EdgeQuadRule> {
    if exactness > MAX_EXACTNESS {
        return Err(HdgError::UnsupportedQuadrature(exactness));
    }
    let n = ((exactness + 2) / 2).max(1);
    let (points, weights) = gauss_legendre_01(n);
    Ok(EdgeQuadRule {
        points,
        weights,
        exactness,
    })
}

/// Conical-product rule on the reference triangle, exact for total degree up
/// to `exactness`; all weights positive.
///
/// Uses the collapsed coordinates x = xi (1 - eta), y = eta; the extra factor
/// (1 - eta) raises the eta-direction degree by one.
pub fn quad_triangle(exactness: usize) -> Result<QuadRule> {
    if exactness > MAX_EXACTNESS {
        return Err(HdgError::UnsupportedQuadrature(exactness));
    }
    let n_xi = ((exactness + 2) / 2).max(1);
    let n_eta = ((exactness + 3) / 2).max(1);
    let (xi, wxi) = gauss_legendre_01(n_xi);
    let (eta, weta) = gauss_legendre_01(n_eta);
    let mut points = Vec::with_capacity(n_xi * n_eta);
    let mut weights = Vec::with_capacity(n_xi * n_eta);
    for (j, &e) in eta.iter().enumerate() {
        for (i, &x) in xi.iter().enumerate() {
            points.push([x * (1.0 - e), e]);
            weights.push(wxi[i] * weta[j] * (1.0 - e));
        }
    }
    Ok(QuadRule {
        points,
        weights,
        exactness,
    })
}

/// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
pub fn reference_monomial_integral(a: u32, b: u32) -> f64 {
    // a!b!/(a+b+2)! = prod_{i=1..b} i/(a+i) / ((a+b+1)(a+b+2))
    let mut v = 1.0;
    for i in 1..=b {
        v *= i as f64 / (a + i) as f64;
    }
    v / ((a + b + 1) as f64 * (a + b + 2) as f64)
}
