use alloc::vec;
use alloc::vec::Vec;

use super::{BlockCholesky, BlockTridiagonalMatrix};
use crate::linalg::{axpy, dot, norm2, Mat};
use crate::{LssError, Result};

/// Cap on operator applications (solves or products) shared by both
/// eigenvalue estimators.
pub const MAX_EIGEN_ITERATIONS: usize = 10_000;

/// Krylov steps per Lanczos cycle before restarting from the Ritz vector.
const CYCLE: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    /// Rayleigh quotient of the final iterate.
    pub lambda: f64,
    /// Operator applications used.
    pub iterations: usize,
    /// `‖M v − λ v‖` for the unit-norm final iterate `v`.
    pub residual: f64,
    pub vector: Vec<f64>,
}

fn start_vector(dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim)
        .map(|j| 1.0 + 0.5 * libm::sin(1.618_033_988_749_895 * (j as f64 + 1.0)))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

fn rayleigh(m: &BlockTridiagonalMatrix, v: &[f64]) -> (f64, f64) {
    let mv = m.mul_vec(v);
    let lambda = dot(v, &mv);
    let res = mv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
        .sum::<f64>();
    (lambda, libm::sqrt(res))
}

/// Eigenvector of the largest eigenvalue of a small symmetric matrix, by
/// cyclic Jacobi rotations.
fn top_eigenvector(mut a: Mat) -> Vec<f64> {
    let k = a.rows();
    let mut q = Mat::identity(k);
    for _ in 0..100 {
        let mut off = 0.0;
        for r in 0..k {
            for c in r + 1..k {
                off += a[(r, c)] * a[(r, c)];
            }
        }
        if off <= 1e-30 * a.max_abs() * a.max_abs() {
            break;
        }
        for p in 0..k {
            for r in p + 1..k {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t =
                    libm::copysign(1.0, theta) / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for i in 0..k {
                    let (aip, air) = (a[(i, p)], a[(i, r)]);
                    a[(i, p)] = c * aip - s * air;
                    a[(i, r)] = s * aip + c * air;
                }
                for i in 0..k {
                    let (api, ari) = (a[(p, i)], a[(r, i)]);
                    a[(p, i)] = c * api - s * ari;
                    a[(r, i)] = s * api + c * ari;
                }
                for i in 0..k {
                    let (qip, qir) = (q[(i, p)], q[(i, r)]);
                    q[(i, p)] = c * qip - s * qir;
                    q[(i, r)] = s * qip + c * qir;
                }
            }
        }
    }
    let top = (0..k)
        .max_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]))
        .unwrap_or(0);
    (0..k).map(|i| q[(i, top)]).collect()
}

/// One Lanczos cycle with full reorthogonalization from the unit vector
/// `v`. Returns the Ritz vector of the largest Ritz value and the number of
/// operator applications.
fn lanczos_cycle(v: &[f64], apply: &mut dyn FnMut(&mut [f64])) -> (Vec<f64>, usize) {
    let dim = v.len();
    let steps = CYCLE.min(dim);
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    // projection Qᵀ A Q, tridiagonal up to rounding
    let mut h = Mat::zeros(steps, steps);
    for j in 0..steps {
        let mut w = basis[j].clone();
        apply(&mut w);
        let scale = norm2(&w);
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
                h[(i, j)] += c;
            }
        }
        let beta = norm2(&w);
        if j + 1 == steps || !(beta > 1e-12 * scale) {
            let k = j + 1;
            let small = Mat::from_fn(k, k, |r, c| 0.5 * (h[(r, c)] + h[(c, r)]));
            let s = top_eigenvector(small);
            let mut y = vec![0.0; dim];
            for (q, &c) in basis.iter().zip(&s) {
                axpy(c, q, &mut y);
            }
            let ny = norm2(&y);
            y.iter_mut().for_each(|x| *x /= ny);
            return (y, k);
        }
        w.iter_mut().for_each(|x| *x /= beta);
        h[(j + 1, j)] = beta;
        basis.push(w);
    }
    unreachable!("a cycle always returns on its last step")
}

/// Restarted Lanczos for the top of the spectrum of `apply`, judged by the
/// Rayleigh quotient of `m`. Each cycle restarts from the previous Ritz
/// vector. Stops once the quotient changes by less than `tol · λ` between
/// cycles and the eigen-residual of `m` is below `√tol · λ`.
fn restarted_lanczos(
    m: &BlockTridiagonalMatrix,
    tol: f64,
    apply: &mut dyn FnMut(&mut [f64]),
) -> Result<EigenEstimate> {
    let mut v = start_vector(m.dim());
    let mut prev = f64::NAN;
    let mut used = 0;
    let mut residual = f64::INFINITY;
    while used < MAX_EIGEN_ITERATIONS {
        let (y, n) = lanczos_cycle(&v, apply);
        used += n;
        if !y.iter().all(|x| x.is_finite()) {
            return Err(LssError::NonFinite("Lanczos vector"));
        }
        let (lambda, res) = rayleigh(m, &y);
        residual = res;
        v = y;
        if (lambda - prev).abs() <= tol * lambda.abs() && res <= libm::sqrt(tol) * lambda.abs() {
            return Ok(EigenEstimate {
                lambda,
                iterations: used,
                residual: res,
                vector: v,
            });
        }
        prev = lambda;
    }
    Err(LssError::NoConvergence {
        iterations: used,
        residual,
    })
}

/// Smallest eigenvalue of an SPD block-tridiagonal matrix by restarted
/// Lanczos on `M⁻¹`, applied through the block Cholesky factor.
pub fn min_eigenvalue(m: &BlockTridiagonalMatrix, tol: f64) -> Result<EigenEstimate> {
    let factor = BlockCholesky::factor(m)?;
    restarted_lanczos(m, tol, &mut |x| factor.solve_in_place(x))
}

/// Largest eigenvalue by restarted Lanczos on `M`.
pub fn max_eigenvalue(m: &BlockTridiagonalMatrix, tol: f64) -> Result<EigenEstimate> {
    restarted_lanczos(m, tol, &mut |x| {
        let y = m.mul_vec(x);
        x.copy_from_slice(&y);
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_spectrum() {
        let diag = (1..=6)
            .map(|k| Mat::from_row_slice(1, 1, &[k as f64]))
            .collect::<Vec<_>>();
        let m = BlockTridiagonalMatrix::new(diag, vec![Mat::zeros(1, 1); 5]).unwrap();
        let lo = min_eigenvalue(&m, 1e-10).unwrap();
        assert!((lo.lambda - 1.0).abs() < 1e-9);
        assert!(lo.residual < 1e-4);
        let hi = max_eigenvalue(&m, 1e-12).unwrap();
        assert!((hi.lambda - 6.0).abs() < 1e-5);
    }

    #[test]
    fn laplacian_smallest_eigenvalue() {
        // tridiag(-1, 2, -1) of size k: λ_min = 2 − 2 cos(π/(k+1))
        let k = 40;
        let m = BlockTridiagonalMatrix::new(
            vec![Mat::from_row_slice(1, 1, &[2.0]); k],
            vec![Mat::from_row_slice(1, 1, &[-1.0]); k - 1],
        )
        .unwrap();
        let exact = 2.0 - 2.0 * libm::cos(core::f64::consts::PI / (k as f64 + 1.0));
        let est = min_eigenvalue(&m, 1e-12).unwrap();
        assert!((est.lambda - exact).abs() < 1e-10 * exact.max(1.0));
    }
}
