use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::{LssError, Result};

/// Symmetric block-tridiagonal matrix with `m` diagonal blocks of size
/// `n × n`. Only the diagonal and sub-diagonal blocks are stored; block
/// `(i, i+1)` is the transpose of block `(i+1, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalMatrix {
    n: usize,
    diag: Vec<Mat>,
    sub: Vec<Mat>,
}

impl BlockTridiagonalMatrix {
    /// `sub[i]` is block `(i+1, i)`.
    pub fn new(diag: Vec<Mat>, sub: Vec<Mat>) -> Result<Self> {
        let m = diag.len();
        if m == 0 {
            return Err(LssError::InvalidArgument(
                "block matrix needs at least one block",
            ));
        }
        let n = diag[0].rows();
        if sub.len() + 1 != m {
            return Err(LssError::DimensionMismatch {
                expected: m - 1,
                found: sub.len(),
            });
        }
        for b in diag.iter().chain(&sub) {
            if b.rows() != n || b.cols() != n {
                return Err(LssError::DimensionMismatch {
                    expected: n,
                    found: b.rows().max(b.cols()),
                });
            }
            if !b.is_finite() {
                return Err(LssError::NonFinite("matrix block"));
            }
        }
        Ok(Self { n, diag, sub })
    }

    /// Block size.
    #[inline]
    pub fn block_size(&self) -> usize {
        self.n
    }

    /// Number of diagonal blocks.
    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.diag.len()
    }

    /// Total dimension `m·n`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n * self.diag.len()
    }

    pub fn diag(&self) -> &[Mat] {
        &self.diag
    }

    /// Sub-diagonal blocks; `sub()[i]` is block `(i+1, i)`.
    pub fn sub(&self) -> &[Mat] {
        &self.sub
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.sub)
            .fold(0.0, |m, b| m.max(b.max_abs()))
    }

    /// `max |D_i − D_iᵀ|` over the diagonal blocks, relative to
    /// [`max_abs`](Self::max_abs).
    pub fn diagonal_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for d in &self.diag {
            for i in 0..self.n {
                for j in 0..i {
                    worst = worst.max((d[(i, j)] - d[(j, i)]).abs());
                }
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    /// `y = M x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "vector length does not match matrix");
        let n = self.n;
        let mut y = vec![0.0; x.len()];
        for (i, d) in self.diag.iter().enumerate() {
            d.mul_vec_add(&x[i * n..(i + 1) * n], &mut y[i * n..(i + 1) * n]);
        }
        for (i, e) in self.sub.iter().enumerate() {
            // row i+1 gets E x_i, row i gets Eᵀ x_{i+1}
            let (head, tail) = y.split_at_mut((i + 1) * n);
            e.mul_vec_add(&x[i * n..(i + 1) * n], &mut tail[..n]);
            e.tr_mul_vec_add(&x[(i + 1) * n..(i + 2) * n], &mut head[i * n..]);
        }
        y
    }

    /// Dense row-major copy, for small oracles and debugging.
    pub fn to_dense(&self) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(self.dim(), self.dim());
        for (b, d) in self.diag.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[(b * n + i, b * n + j)] = d[(i, j)];
                }
            }
        }
        for (b, e) in self.sub.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[((b + 1) * n + i, b * n + j)] = e[(i, j)];
                    out[(b * n + j, (b + 1) * n + i)] = e[(i, j)];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_vec_matches_dense() {
        let d = |s: f64| Mat::from_row_slice(2, 2, &[4.0 + s, 1.0, 1.0, 3.0]);
        let e = |s: f64| Mat::from_row_slice(2, 2, &[0.5, -s, 0.25, 1.0]);
        let m = BlockTridiagonalMatrix::new(vec![d(0.0), d(1.0), d(2.0)], vec![e(1.0), e(2.0)])
            .unwrap();
        let x = [1.0, -1.0, 2.0, 0.5, -0.25, 3.0];
        let dense = m.to_dense();
        assert_eq!(dense, dense.transpose());
        let a = m.mul_vec(&x);
        let b = dense.mul_vec(&x);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let d = Mat::identity(2);
        assert!(BlockTridiagonalMatrix::new(vec![d.clone(), d.clone()], vec![]).is_err());
        assert!(BlockTridiagonalMatrix::new(vec![d.clone()], vec![]).is_ok());
        assert!(
            BlockTridiagonalMatrix::new(vec![d, Mat::identity(3)], vec![Mat::identity(2)]).is_err()
        );
    }
}
