use alloc::vec::Vec;

use super::BlockTridiagonalMatrix;
use crate::linalg::{norm2, Mat};
use crate::{LssError, Result};

/// Block Cholesky factorization `M = L Lᵀ` of a block-tridiagonal SPD
/// matrix. `L` is block lower-bidiagonal with lower-triangular diagonal
/// blocks `L_i` and full sub-diagonal blocks `W_i`:
///
/// ```text
/// W_i = E_i L_{i−1}^{−T},   L_i L_iᵀ = D_i − W_i W_iᵀ
/// ```
#[derive(Debug, Clone)]
pub struct BlockCholesky {
    n: usize,
    diag: Vec<Mat>,
    sub: Vec<Mat>,
}

impl BlockCholesky {
    pub fn factor(m: &BlockTridiagonalMatrix) -> Result<Self> {
        let n = m.block_size();
        let blocks = m.num_blocks();
        let mut diag: Vec<Mat> = Vec::with_capacity(blocks);
        let mut sub: Vec<Mat> = Vec::with_capacity(blocks.saturating_sub(1));
        for i in 0..blocks {
            let mut s = m.diag()[i].clone();
            if i > 0 {
                // W = E L^{-T}  ⇔  L Wᵀ = Eᵀ, solved row by row of W
                let e = &m.sub()[i - 1];
                let l_prev = &diag[i - 1];
                let mut w = Mat::zeros(n, n);
                let mut row = alloc::vec![0.0; n];
                for r in 0..n {
                    row.copy_from_slice(&e.as_slice()[r * n..(r + 1) * n]);
                    l_prev.lower_solve_in_place(&mut row);
                    w.as_mut_slice()[r * n..(r + 1) * n].copy_from_slice(&row);
                }
                s.sub_assign(&w.matmul(&w.transpose()));
                sub.push(w);
            }
            // the strict upper triangle is ignored
            for r in 0..n {
                for c in r + 1..n {
                    s[(r, c)] = s[(c, r)];
                }
            }
            if !s.cholesky_in_place() {
                return Err(LssError::NotPositiveDefinite { block: i });
            }
            diag.push(s);
        }
        Ok(Self { n, diag, sub })
    }

    pub fn dim(&self) -> usize {
        self.n * self.diag.len()
    }

    /// Solves `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.dim(), "rhs length does not match matrix");
        let n = self.n;
        // L y = b
        for i in 0..self.diag.len() {
            if i > 0 {
                let (prev, cur) = b.split_at_mut(i * n);
                let y_prev = &prev[(i - 1) * n..];
                let w = &self.sub[i - 1];
                for r in 0..n {
                    let row = &w.as_slice()[r * n..(r + 1) * n];
                    cur[r] -= crate::linalg::dot(row, y_prev);
                }
            }
            self.diag[i].lower_solve_in_place(&mut b[i * n..(i + 1) * n]);
        }
        // Lᵀ x = y
        for i in (0..self.diag.len()).rev() {
            if i + 1 < self.diag.len() {
                let (cur, next) = b.split_at_mut((i + 1) * n);
                let x_next = &next[..n];
                let w = &self.sub[i];
                let cur = &mut cur[i * n..];
                for (r, &x) in x_next.iter().enumerate() {
                    let row = &w.as_slice()[r * n..(r + 1) * n];
                    for (c, &a) in cur.iter_mut().zip(row) {
                        *c -= a * x;
                    }
                }
            }
            self.diag[i].lower_tr_solve_in_place(&mut b[i * n..(i + 1) * n]);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Direct solve of `M x = b` by block Cholesky with one step of iterative
/// refinement. Fails with [`LssError::NotPositiveDefinite`] on a pivot
/// breakdown.
pub fn cholesky_solve(m: &BlockTridiagonalMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.dim() {
        return Err(LssError::DimensionMismatch {
            expected: m.dim(),
            found: rhs.len(),
        });
    }
    let factor = BlockCholesky::factor(m)?;
    let mut x = factor.solve(rhs);
    let mut r: Vec<f64> = m.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    if norm2(&r) > 0.0 {
        let dx = factor.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
    }
    Ok(x)
}
