use alloc::vec;
use alloc::vec::Vec;

use super::BlockTridiagonalMatrix;
use crate::linalg::{axpy, dot, norm2, Mat};
use crate::{LssError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    /// Inverse of each diagonal block (via its Cholesky factor).
    #[default]
    BlockJacobi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `‖M x − b‖ / ‖b‖`.
    pub residual: f64,
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn cg_solve(
    m: &BlockTridiagonalMatrix,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    precond: Preconditioner,
) -> Result<CgOutcome> {
    let dim = m.dim();
    if rhs.len() != dim {
        return Err(LssError::DimensionMismatch {
            expected: dim,
            found: rhs.len(),
        });
    }
    let bnorm = norm2(rhs);
    let mut x = vec![0.0; dim];
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }

    let n = m.block_size();
    let jacobi: Option<Vec<Mat>> = match precond {
        Preconditioner::None => None,
        Preconditioner::BlockJacobi => Some(
            m.diag()
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let mut l = d.clone();
                    if l.cholesky_in_place() {
                        Ok(l)
                    } else {
                        Err(LssError::NotPositiveDefinite { block: i })
                    }
                })
                .collect::<Result<_>>()?,
        ),
    };
    let apply = |r: &[f64], z: &mut [f64]| {
        z.copy_from_slice(r);
        if let Some(blocks) = &jacobi {
            for (i, l) in blocks.iter().enumerate() {
                let zi = &mut z[i * n..(i + 1) * n];
                l.lower_solve_in_place(zi);
                l.lower_tr_solve_in_place(zi);
            }
        }
    };

    let mut r = rhs.to_vec();
    let mut z = vec![0.0; dim];
    apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let q = m.mul_vec(&p);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(LssError::NotPositiveDefinite { block: 0 });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        let res = norm2(&r) / bnorm;
        if res < tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: res,
            });
        }
        apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(LssError::NoConvergence {
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_matrix(values: &[f64]) -> BlockTridiagonalMatrix {
        let diag = values
            .iter()
            .map(|&v| Mat::from_row_slice(1, 1, &[v]))
            .collect::<Vec<_>>();
        let sub = vec![Mat::zeros(1, 1); values.len() - 1];
        BlockTridiagonalMatrix::new(diag, sub).unwrap()
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let m = diag_matrix(&[1.0, 2.0, 3.0]);
        let out = cg_solve(&m, &[0.0; 3], 1e-12, 10, Preconditioner::None).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, [0.0; 3]);
    }

    #[test]
    fn diagonal_converges_in_distinct_eigenvalue_count() {
        let values = [1.0, 2.0, 2.0, 5.0, 1.0, 5.0, 2.0];
        let m = diag_matrix(&values);
        let b = [1.0, -1.0, 2.0, 0.5, 3.0, -2.0, 1.0];
        let out = cg_solve(&m, &b, 1e-12, 100, Preconditioner::None).unwrap();
        assert!(out.iterations <= 3, "{} iterations", out.iterations);
        for (xi, (bi, vi)) in out.x.iter().zip(b.iter().zip(&values)) {
            assert!((xi - bi / vi).abs() < 1e-12);
        }
        let pre = cg_solve(&m, &b, 1e-12, 100, Preconditioner::BlockJacobi).unwrap();
        assert_eq!(pre.iterations, 1);
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let values: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let m = diag_matrix(&values);
        let b = vec![1.0; 20];
        assert!(matches!(
            cg_solve(&m, &b, 1e-14, 3, Preconditioner::None),
            Err(LssError::NoConvergence { iterations: 3, .. })
        ));
    }
}
