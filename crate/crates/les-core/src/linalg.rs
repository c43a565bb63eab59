//! Small dense linear algebra kernels.
//!
//! Everything here is sized for desk-scale problems (p up to a few hundred),
//! so plain column-major storage and textbook algorithms are used throughout.

use crate::error::{Error, Result};

/// Dense column-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Mat {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from row-major data (the natural order of a CSV file).
    pub fn from_rows(nrows: usize, ncols: usize, row_major: &[f64]) -> Self {
        assert_eq!(row_major.len(), nrows * ncols, "row data length mismatch");
        let mut m = Mat::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m.set(i, j, row_major[i * ncols + j]);
            }
        }
        m
    }

    pub fn from_columns(nrows: usize, cols: &[Vec<f64>]) -> Self {
        let ncols = cols.len();
        let mut m = Mat::zeros(nrows, ncols);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), nrows, "column length mismatch");
            m.col_mut(j).copy_from_slice(col);
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    /// `X b`
    pub fn matvec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.ncols);
        let mut out = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let bj = b[j];
            if bj == 0.0 {
                continue;
            }
            for (oi, xij) in out.iter_mut().zip(self.col(j)) {
                *oi += xij * bj;
            }
        }
        out
    }

    /// `Xᵀ v`
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.nrows);
        (0..self.ncols).map(|j| dot(self.col(j), v)).collect()
    }

    /// `XᵀX / n` — the scaled Gram matrix used throughout the solver.
    pub fn gram_over_n(&self) -> Mat {
        let n = self.nrows as f64;
        let p = self.ncols;
        let mut g = Mat::zeros(p, p);
        for j in 0..p {
            for i in j..p {
                let v = dot(self.col(i), self.col(j)) / n;
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn chol_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l.get(i, k) * y[k];
        }
        y[i] = sum / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l.get(k, i) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}

/// Solves the symmetric positive-definite system `A x = b`.
pub fn solve_spd(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    Ok(chol_solve(&l, b))
}

/// Ordinary least squares via the normal equations; fine for the small,
/// well-conditioned systems used here.
pub fn ols_solve(x: &Mat, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "ols: y has length {}, X has {} rows",
            y.len(),
            x.nrows()
        )));
    }
    let n = x.nrows() as f64;
    let g = x.gram_over_n();
    let xty: Vec<f64> = x.t_matvec(y).iter().map(|v| v / n).collect();
    solve_spd(&g, &xty)
}

/// Orthonormalizes the columns of `m` in place with modified Gram-Schmidt
/// (run twice for numerical safety). Returns an error if a column is
/// linearly dependent on the previous ones.
pub fn orthonormalize_columns(m: &mut Mat) -> Result<()> {
    let p = m.ncols();
    for _pass in 0..2 {
        for j in 0..p {
            for k in 0..j {
                let proj = dot(m.col(j), m.col(k));
                let qk = m.col(k).to_vec();
                for (v, q) in m.col_mut(j).iter_mut().zip(&qk) {
                    *v -= proj * q;
                }
            }
            let nrm = norm2(m.col(j));
            if nrm < 1e-10 {
                return Err(Error::Degenerate(format!(
                    "column {j} is linearly dependent; cannot orthonormalize"
                )));
            }
            for v in m.col_mut(j) {
                *v /= nrm;
            }
        }
    }
    Ok(())
}
