//! Symmetric sparse assembly map and a profile (skyline) Cholesky
//! factorization for the condensed trace system.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{HdgError, Result};

/// Coordinate-format accumulator holding the full (not just triangular)
/// matrix, so the symmetry of the assembled system can be measured rather
/// than assumed.
#[derive(Debug, Clone)]
pub struct SymmetricCoo {
    pub n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SymmetricCoo {
    pub fn new(n: usize) -> Self {
        SymmetricCoo {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n);
        *self.entries.entry((i, j)).or_insert(0.0) += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |K_ij - K_ji| over all stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for (&(i, j), &v) in &self.entries {
            if i < j {
                defect = defect.max((v - self.get(j, i)).abs());
            }
        }
        defect
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = DVector::zeros(self.n);
        for (&(i, j), &v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }
}

/// Lower-triangular Cholesky factor in skyline storage: row i holds columns
/// `start[i]..=i` contiguously.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    start: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

/// Factors the assembled matrix as L L^T. Fails with the offending pivot row
/// if a non-positive pivot shows up, i.e. the matrix is not positive
/// definite.
pub fn factor_skyline(coo: &SymmetricCoo) -> Result<SkylineCholesky> {
    let n = coo.n;
    let mut start: Vec<usize> = (0..n).collect();
    for (i, j, _) in coo.iter() {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if c < start[r] {
            start[r] = c;
        }
    }
    let mut offset = vec![0usize; n + 1];
    for i in 0..n {
        offset[i + 1] = offset[i] + (i - start[i] + 1);
    }
    let mut data = vec![0.0f64; offset[n]];
    // Initialize with the lower triangle of K, averaging the two stored
    // halves so tiny assembly asymmetry cannot bias the factor.
    for (i, j, v) in coo.iter() {
        if i == j {
            data[offset[i] + (i - start[i])] += v;
        } else if i > j {
            if j >= start[i] {
                data[offset[i] + (j - start[i])] += 0.5 * v;
            }
        } else if i >= start[j] {
            data[offset[j] + (i - start[j])] += 0.5 * v;
        }
    }

    let at = |offs: &Vec<usize>, st: &Vec<usize>, d: &Vec<f64>, i: usize, j: usize| -> f64 {
        if j < st[i] {
            0.0
        } else {
            d[offs[i] + (j - st[i])]
        }
    };
    for i in 0..n {
        for j in start[i]..i {
            let lo = start[i].max(start[j]);
            let mut sum = at(&offset, &start, &data, i, j);
            for t in lo..j {
                sum -= at(&offset, &start, &data, i, t) * at(&offset, &start, &data, j, t);
            }
            let piv = at(&offset, &start, &data, j, j);
            data[offset[i] + (j - start[i])] = sum / piv;
        }
        let mut sum = at(&offset, &start, &data, i, i);
        for t in start[i]..i {
            let l = at(&offset, &start, &data, i, t);
            sum -= l * l;
        }
        if sum <= 0.0 || !sum.is_finite() {
            return Err(HdgError::NotPositiveDefinite(i));
        }
        data[offset[i] + (i - start[i])] = sum.sqrt();
    }
    Ok(SkylineCholesky {
        n,
        start,
        offset,
        data,
    })
}

impl SkylineCholesky {
    fn l(&self, i: usize, j: usize) -> f64 {
        if j < self.start[i] {
            0.0
        } else {
            self.data[self.offset[i] + (j - self.start[i])]
        }
    }

    /// Solves L L^T x = b.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.n);
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut s = b[i];
            for t in self.start[i]..i {
                s -= self.l(i, t) * y[t];
            }
            y[i] = s / self.l(i, i);
        }
        let mut x = y;
        for i in (0..self.n).rev() {
            x[i] /= self.l(i, i);
            let xi = x[i];
            for t in self.start[i]..i {
                x[t] -= self.l(i, t) * xi;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_banded_spd(n: usize, band: usize, rng: &mut StdRng) -> SymmetricCoo {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(band)..=(i + band).min(n - 1) {
                if j <= i {
                    let v = rng.gen_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        // Diagonal dominance makes it SPD.
        for i in 0..n {
            let row: f64 = (0..n).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] = row + 1.0;
        }
        let mut coo = SymmetricCoo::new(n);
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    coo.add(i, j, m[(i, j)]);
                }
            }
        }
        coo
    }

    #[test]
    fn factor_and_solve_banded() {
        let mut rng = StdRng::seed_from_u64(42);
        for &(n, band) in &[(1usize, 0usize), (5, 2), (40, 7), (120, 11)] {
            let coo = random_banded_spd(n, band, &mut rng);
            let chol = factor_skyline(&coo).unwrap();
            let x_true = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
            let b = coo.mul_vec(&x_true);
            let x = chol.solve(&b);
            let err = (&x - &x_true).abs().max();
            assert!(err < 1e-10, "n={n} band={band}: {err}");
        }
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let mut rng = StdRng::seed_from_u64(5);
        let coo = random_banded_spd(20, 4, &mut rng);
        let chol = factor_skyline(&coo).unwrap();
        let x = chol.solve(&DVector::zeros(20));
        assert!(x.abs().max() == 0.0);
    }

    #[test]
    fn indefinite_matrix_rejected_with_pivot_row() {
        let mut coo = SymmetricCoo::new(3);
        coo.add(0, 0, 4.0);
        coo.add(1, 1, -1.0);
        coo.add(2, 2, 2.0);
        match factor_skyline(&coo) {
            Err(HdgError::NotPositiveDefinite(row)) => assert_eq!(row, 1),
            other => panic!("expected indefinite failure, got {other:?}"),
        }
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        let mut coo = SymmetricCoo::new(2);
        coo.add(0, 1, 1.0);
        coo.add(1, 0, 1.0 + 1e-6);
        assert!((coo.symmetry_defect() - 1e-6).abs() < 1e-15);
        coo.add(1, 0, -1e-6);
        assert!(coo.symmetry_defect() < 1e-15);
    }

    #[test]
    fn solve_matches_dense_cholesky() {
        let mut rng = StdRng::seed_from_u64(31);
        let n = 30;
        let coo = random_banded_spd(n, 5, &mut rng);
        let mut dense = DMatrix::zeros(n, n);
        for (i, j, v) in coo.iter() {
            dense[(i, j)] += v;
        }
        let chol = factor_skyline(&coo).unwrap();
        let b = DVector::from_fn(n, |i, _| (i as f64).cos());
        let x = chol.solve(&b);
        let xd = dense.cholesky().unwrap().solve(&b);
        assert!((x - xd).abs().max() < 1e-11);
    }
}
