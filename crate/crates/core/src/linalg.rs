//! Small linear-algebra kernels used by the solvers: a banded Cholesky for
//! the structured graph meshes, a Jacobi-preconditioned CG for the
//! unstructured disc meshes, and a dense Cholesky for the projection QP.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric positive-definite band matrix, lower band stored row-major.
/// `band[i * (bw + 1) + (j - i + bw)]` holds `A[i][j]` for `i - bw <= j <= i`.
#[derive(Clone)]
pub struct BandMatrix<T> {
    pub n: usize,
    pub bw: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![T::zero(); n * (bw + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return T::zero();
        }
        self.data[self.idx(r, c)]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bw, "entry outside band");
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] = v;
    }

    /// Zero row and column `i` within the band and put 1 on the diagonal.
    /// Standard Dirichlet elimination for an increment system.
    pub fn dirichlet_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.bw);
        for j in lo..i {
            self.set(i, j, T::zero());
        }
        let hi = (i + self.bw).min(self.n - 1);
        for j in (i + 1)..=hi {
            self.set(j, i, T::zero());
        }
        self.set(i, i, T::one());
    }

    /// In-place Cholesky factorization A = L L^T. Fails if a pivot is not
    /// strictly positive.
    pub fn cholesky(mut self) -> Result<BandCholesky<T>> {
        let n = self.n;
        let bw = self.bw;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut s = self.data[self.idx(i, j)];
                let kmin = lo.max(j.saturating_sub(bw));
                for k in kmin..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let d = self.data[self.idx(j, j)];
                let at = self.idx(i, j);
                self.data[at] = s / d;
            }
            let mut d = self.data[self.idx(i, i)];
            for k in lo..i {
                let v = self.data[self.idx(i, k)];
                d -= v * v;
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "band Cholesky pivot {i} not positive: {d:?}"
                )));
            }
            let at = self.idx(i, i);
            self.data[at] = d.sqrt();
        }
        Ok(BandCholesky { m: self })
    }
}

pub struct BandCholesky<T> {
    m: BandMatrix<T>,
}

impl<T: Real> BandCholesky<T> {
    /// Solve L L^T x = b.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.m.n;
        let bw = self.m.bw;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.m.data[self.m.idx(i, k)] * x[k];
            }
            x[i] = s / self.m.data[self.m.idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = x[i];
            for k in (i + 1)..=hi {
                s -= self.m.data[self.m.idx(k, i)] * x[k];
            }
            x[i] = s / self.m.data[self.m.idx(i, i)];
        }
        x
    }
}

/// Compressed sparse row matrix, symmetric storage not assumed.
pub struct CsrMatrix<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Build from per-row maps of column -> value (rows already deduplicated).
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn matvec(&self, x: &[T], out: &mut [T]) {
        for i in 0..self.n {
            let mut s = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            out[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }
}

/// Jacobi-preconditioned conjugate gradient for SPD systems.
/// Returns the iterate when the residual norm falls below
/// `tol * max(1, |b|)` or after `max_iter` steps.
pub fn pcg<T: Real>(a: &CsrMatrix<T>, b: &[T], x0: &[T], tol: T, max_iter: usize) -> Vec<T> {
    let n = a.n;
    let mut x = x0.to_vec();
    let mut r = vec![T::zero(); n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let diag = a.diagonal();
    let inv_d: Vec<T> =
        diag.iter().map(|&d| if d.abs() > T::zero() { T::one() / d } else { T::one() }).collect();

    let bnorm = b.iter().map(|&v| v * v).sum::<T>().sqrt().max(T::one());
    let mut z: Vec<T> = r.iter().zip(&inv_d).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = r.iter().zip(&z).map(|(&a, &b)| a * b).sum::<T>();
    let mut ap = vec![T::zero(); n];

    for _ in 0..max_iter {
        let rnorm = r.iter().map(|&v| v * v).sum::<T>().sqrt();
        if rnorm <= tol * bnorm {
            break;
        }
        a.matvec(&p, &mut ap);
        let pap = p.iter().zip(&ap).map(|(&a, &b)| a * b).sum::<T>();
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_d[i];
        }
        let rz_new = r.iter().zip(&z).map(|(&a, &b)| a * b).sum::<T>();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Dense Cholesky solve for the small KKT systems of the projection QP.
pub fn dense_cholesky_solve<T: Real>(a: &mut [T], n: usize, b: &mut [T]) -> Result<()> {
    // a is n x n row-major, overwritten by L.
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(Error::InvalidProfile(format!(
                        "dense Cholesky pivot {i} not positive"
                    )));
                }
                a[i * n + i] = s.sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_solves_tridiagonal() {
        // -u'' = 1 on a 5-point grid, u = 0 at ends.
        let n = 5;
        let mut a = BandMatrix::<f64>::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
        }
        let chol = a.cholesky().unwrap();
        let b = vec![1.0; n];
        let x = chol.solve(&b);
        // verify residual
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            let r = 2.0 * x[i] - left - right - 1.0;
            assert!(r.abs() < 1e-12, "row {i} residual {r}");
        }
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        let mut a = BandMatrix::<f64>::zeros(2, 1);
        a.set(0, 0, 1.0);
        a.set(1, 0, 3.0);
        a.set(1, 1, 1.0); // 1 - 9 < 0
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn pcg_matches_direct() {
        let n = 20;
        let mut rows = Vec::new();
        for i in 0..n {
            let mut row = vec![(i, 4.0)];
            if i > 0 {
                row.push((i - 1, -1.0));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0));
            }
            rows.push(row);
        }
        let a = CsrMatrix::from_rows(rows);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = pcg(&a, &b, &vec![0.0; n], 1e-14, 1000);
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_cholesky_2x2() {
        let mut a = vec![4.0, 1.0, 1.0, 3.0];
        let mut b = vec![1.0f64, 2.0];
        dense_cholesky_solve(&mut a, 2, &mut b).unwrap();
        // exact solution of [4 1; 1 3] x = [1; 2]
        assert!((b[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((b[1] - 7.0 / 11.0).abs() < 1e-14);
    }
}
