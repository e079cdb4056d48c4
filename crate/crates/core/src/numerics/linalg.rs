//! Dense linear algebra for the small systems that show up pointwise:
//! metrics and shape operators are at most 8 x 8, so everything here is
//! written for clarity and exact reproducibility rather than throughput.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMat {
    n: usize,
    data: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        SquareMat { n, data: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SquareMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter {
                name: "rows",
                detail: "matrix is not square".to_string(),
            });
        }
        Ok(SquareMat::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    fn check_symmetric(&self) -> Result<()> {
        let scale = 1.0_f64.max(self.data.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let delta = (self.get(i, j) - self.get(j, i)).abs();
                if delta > 1e-12 * scale {
                    return Err(Error::NotSymmetric { i, j, delta });
                }
            }
        }
        Ok(())
    }

    /// Cholesky factorization A = L Lᵀ; pivots must stay above 1e-14.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 1e-14 {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(Cholesky { n, l })
    }
}

impl std::ops::Index<(usize, usize)> for SquareMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    /// Square root of the determinant of the factored matrix.
    pub fn sqrt_det(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i]).product()
    }
}

/// Solves A x = rhs for symmetric positive definite A.
pub fn spd_solve(a: &SquareMat, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != a.n() {
        return Err(Error::InvalidParameter {
            name: "rhs",
            detail: format!("length {} does not match matrix size {}", rhs.len(), a.n()),
        });
    }
    a.check_symmetric()?;
    Ok(a.cholesky()?.solve(rhs))
}

/// Orthonormalizes `vectors` in index order (modified Gram-Schmidt with a
/// re-orthogonalization pass).  The first output keeps the direction of the
/// first input.  A projected norm at or below 1e-10 means the inputs are
/// numerically dependent and is reported as rank deficiency.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &basis {
                let c = dot(&w, e);
                for (wi, ei) in w.iter_mut().zip(e) {
                    *wi -= c * ei;
                }
            }
        }
        let nm = norm(&w);
        if nm <= 1e-10 {
            return Err(Error::RankDeficient { index, norm: nm });
        }
        for wi in &mut w {
            *wi /= nm;
        }
        basis.push(w);
    }
    Ok(basis)
}
