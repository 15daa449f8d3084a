//! Dense row-major matrices and a cyclic Jacobi eigenvalue solver for the
//! symmetric case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest order accepted by [`symmetric_eigenvalues`].
pub const JACOBI_MAX_ORDER: usize = 500;
/// Convergence threshold on the off-diagonal Frobenius norm.
pub const JACOBI_OFF_DIAGONAL_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
                context: "matrix buffer length",
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Largest |a_ij - a_ji|; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// Eigenvalues of a symmetric matrix, sorted in descending order.
///
/// Cyclic Jacobi: sweeps over every (p, q) pair with p < q, annihilating each
/// off-diagonal entry by a plane rotation, until the off-diagonal Frobenius
/// norm drops below [`JACOBI_OFF_DIAGONAL_TOL`]. Only the lower-left copy is
/// read, so mild asymmetry is ignored; callers that care check it first.
pub fn symmetric_eigenvalues(matrix: &DenseMatrix) -> Result<Vec<f64>> {
    if !matrix.is_square() {
        return Err(Error::validation(format!(
            "eigenvalues need a square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let n = matrix.rows();
    if n > JACOBI_MAX_ORDER {
        return Err(Error::validation(format!(
            "matrix order {n} exceeds the Jacobi solver cap of {JACOBI_MAX_ORDER}"
        )));
    }
    let mut a = DenseMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            matrix.get(i, j)
        } else {
            matrix.get(j, i)
        }
    });

    let off_norm = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a.get(i, j) * a.get(i, j);
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > JACOBI_OFF_DIAGONAL_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::validation(format!(
                "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                if t == 0.0 {
                    // |theta| overflowed: apq is negligible next to the diagonal gap
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a.set(k, p, new_kp);
                    a.set(p, k, new_kp);
                    a.set(k, q, new_kq);
                    a.set(q, k, new_kq);
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_spectrum() {
        let eig = symmetric_eigenvalues(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(eig, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[a, b], [b, d]] has eigenvalues (a+d)/2 ± sqrt(((a-d)/2)^2 + b^2)
        let (a, b, d) = (2.0, 1.5, -0.5);
        let m = DenseMatrix::from_vec(2, 2, vec![a, b, b, d]).unwrap();
        let eig = symmetric_eigenvalues(&m).unwrap();
        let mid = (a + d) / 2.0;
        let rad = (((a - d) / 2.0_f64).powi(2) + b * b).sqrt();
        assert!((eig[0] - (mid + rad)).abs() < 1e-14);
        assert!((eig[1] - (mid - rad)).abs() < 1e-14);
    }

    #[test]
    fn rank_one_all_equal_entries() {
        let n = 7;
        let m = DenseMatrix::from_fn(n, n, |_, _| 1.0 / n as f64);
        let eig = symmetric_eigenvalues(&m).unwrap();
        assert!((eig[0] - 1.0).abs() < 1e-13);
        assert!(eig[1..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn rejects_non_square_and_oversized() {
        assert!(symmetric_eigenvalues(&DenseMatrix::zeros(2, 3)).is_err());
        assert!(symmetric_eigenvalues(&DenseMatrix::zeros(501, 501)).is_err());
    }

    #[test]
    fn asymmetry_of_non_square_is_infinite() {
        assert!(DenseMatrix::zeros(2, 3).max_asymmetry().is_infinite());
    }

    fn symmetric_strategy() -> impl Strategy<Value = DenseMatrix> {
        (1usize..12).prop_flat_map(|n| {
            proptest::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| {
                DenseMatrix::from_fn(n, n, |i, j| {
                    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                    v[lo * n + hi]
                })
            })
        })
    }

    proptest! {
        #[test]
        fn trace_and_frobenius_preserved(m in symmetric_strategy()) {
            let eig = symmetric_eigenvalues(&m).unwrap();
            let trace: f64 = (0..m.rows()).map(|i| m.get(i, i)).sum();
            let sum: f64 = eig.iter().sum();
            let sq: f64 = eig.iter().map(|v| v * v).sum();
            prop_assert!((trace - sum).abs() < 1e-9);
            prop_assert!((m.frobenius_sq() - sq).abs() < 1e-9 * m.frobenius_sq().max(1.0));
            prop_assert!(eig.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
