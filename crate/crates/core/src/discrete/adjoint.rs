use alloc::vec;
use alloc::vec::Vec;

use super::{shifted, shifted_transpose, LocalData, LssConfig, SchemeOrder};
use crate::dynamics::DynamicalSystem;
use crate::linalg::{dot, norm_inf, Mat};
use crate::solver::{cholesky_solve, BlockTridiagonalMatrix};
use crate::trajectory::Trajectory;
use crate::{LssError, Result};

/// Assembled adjoint LSS system after eliminating `r`.
///
/// First equation, rows `k = 0..N−1`: `r_k = P_k ψ_k + Q_k ψ_{k+1} + J_{u,k}`.
///
/// | scheme | `P_k`              | `Q_k`              |
/// |--------|--------------------|--------------------|
/// | second | `−I/dt + F_kᵀ/2`   | `I/dt + F_kᵀ/2`    |
/// | first  | `−I/dt + F_kᵀ`     | `I/dt`             |
///
/// Second equation, nodes `i = 1..N−1`:
/// `B_i⁻ r_{i−1} + B_i⁺ r_i − f_i f_iᵀ ψ_i / α² = (J_i − J̄) f_i / α²`.
///
/// Substituting the first into the second gives `L_H ψ = g` with
/// `L_H = −B·A + diag(f_i f_iᵀ)/α²`, which equals `AᵀA + diag(f fᵀ)/α²`.
#[derive(Debug, Clone)]
pub struct LssSystem {
    matrix: BlockTridiagonalMatrix,
    rhs: Vec<f64>,
    rhs_homogeneous: Vec<f64>,
    config: LssConfig,
    data: LocalData,
    jbar: f64,
    p: Vec<Mat>,
    q: Vec<Mat>,
    b_prev: Vec<Mat>,
    b_cur: Vec<Mat>,
    asymmetry: f64,
}

/// Node values `ψ_0..ψ_N` and the eliminated multiplier `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    /// `(N + 1) × n`, boundary values included.
    pub psi: Vec<f64>,
    /// `N × n` at midpoints (second order) or `(N + 1) × n` at nodes (first order).
    pub r: Vec<f64>,
    pub config: LssConfig,
    pub dim: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub jbar: f64,
    /// Max-norm residual of the un-eliminated second equation, relative to
    /// the size of its terms.
    pub residual: f64,
}

impl AdjointSolution {
    pub fn psi_at(&self, i: usize) -> &[f64] {
        &self.psi[i * self.dim..(i + 1) * self.dim]
    }

    pub fn r_at(&self, k: usize) -> &[f64] {
        &self.r[k * self.dim..(k + 1) * self.dim]
    }
}

/// Builds the reduced adjoint system for `traj` at the trajectory's
/// parameter value. `jbar` is the window average of `J`.
pub fn assemble_adjoint(
    traj: &Trajectory,
    sys: &dyn DynamicalSystem,
    cfg: &LssConfig,
    jbar: f64,
) -> Result<LssSystem> {
    cfg.validate(sys.dim())?;
    if !jbar.is_finite() {
        return Err(LssError::NonFinite("jbar"));
    }
    let data = LocalData::build(traj, sys, cfg.scheme)?;
    let (n, n_steps, dt) = (data.n, data.n_steps, data.dt);
    let inv_dt = 1.0 / dt;
    let inv_a2 = 1.0 / cfg.alpha2;

    let (p, q): (Vec<Mat>, Vec<Mat>) = (0..n_steps)
        .map(|k| {
            let fk = &data.jac[k];
            match cfg.scheme {
                SchemeOrder::SecondOrder => (
                    shifted_transpose(fk, -inv_dt, 0.5),
                    shifted_transpose(fk, inv_dt, 0.5),
                ),
                SchemeOrder::FirstOrder => (
                    shifted_transpose(fk, -inv_dt, 1.0),
                    Mat::identity(n).scaled(inv_dt),
                ),
            }
        })
        .unzip();

    // B_i⁻, B_i⁺ for interior nodes; index i − 1
    let (b_prev, b_cur): (Vec<Mat>, Vec<Mat>) = (1..n_steps)
        .map(|i| match cfg.scheme {
            SchemeOrder::SecondOrder => (
                shifted(&data.jac[i - 1], -inv_dt, -0.5),
                shifted(&data.jac[i], inv_dt, -0.5),
            ),
            SchemeOrder::FirstOrder => (
                Mat::identity(n).scaled(-inv_dt),
                shifted(&data.jac[i], inv_dt, -1.0),
            ),
        })
        .unzip();

    let m = n_steps - 1;
    let mut diag = Vec::with_capacity(m);
    let mut sub = Vec::with_capacity(m.saturating_sub(1));
    let mut asym: f64 = 0.0;
    for idx in 0..m {
        let i = idx + 1;
        let mut d = Mat::outer(data.f(i), data.f(i)).scaled(inv_a2);
        d.sub_assign(&b_prev[idx].matmul(&q[i - 1]));
        d.sub_assign(&b_cur[idx].matmul(&p[i]));
        diag.push(d);
        if idx + 1 < m {
            // (i+1, i) from row i+1 acting on r_i; (i, i+1) from row i acting on r_i
            let mut lower = b_prev[idx + 1].matmul(&p[i]);
            lower.scale(-1.0);
            let mut upper = b_cur[idx].matmul(&q[i]);
            upper.scale(-1.0);
            for a in 0..n {
                for b in 0..n {
                    asym = asym.max((lower[(a, b)] - upper[(b, a)]).abs());
                }
            }
            sub.push(lower);
        }
    }
    let matrix = BlockTridiagonalMatrix::new(diag, sub)?;
    let scale = matrix.max_abs();
    let asymmetry = matrix
        .diagonal_asymmetry()
        .max(if scale > 0.0 { asym / scale } else { asym });

    let mut rhs_homogeneous = vec![0.0; m * n];
    for idx in 0..m {
        let i = idx + 1;
        let g = &mut rhs_homogeneous[idx * n..(i) * n];
        b_prev[idx].mul_vec_add(data.j_u(i - 1), g);
        b_cur[idx].mul_vec_add(data.j_u(i), g);
        let c = (data.j_node[i] - jbar) * inv_a2;
        for (gi, fi) in g.iter_mut().zip(data.f(i)) {
            *gi -= c * fi;
        }
    }

    let mut system = LssSystem {
        matrix,
        rhs: Vec::new(),
        rhs_homogeneous,
        config: cfg.clone(),
        data,
        jbar,
        p,
        q,
        b_prev,
        b_cur,
        asymmetry,
    };
    system.rhs = apply_bc(&system, &system.rhs_homogeneous, &cfg.bc0, &cfg.bc_t)?;
    Ok(system)
}

/// Adds the contribution of the boundary values `ψ(0) = bc0`,
/// `ψ(T) = bc_t` to a right-hand side of `system`. The matrix is unaffected.
pub fn apply_bc(system: &LssSystem, rhs: &[f64], bc0: &[f64], bc_t: &[f64]) -> Result<Vec<f64>> {
    let n = system.data.n;
    for bc in [bc0, bc_t] {
        if bc.len() != n {
            return Err(LssError::DimensionMismatch {
                expected: n,
                found: bc.len(),
            });
        }
    }
    if rhs.len() != system.matrix.dim() {
        return Err(LssError::DimensionMismatch {
            expected: system.matrix.dim(),
            found: rhs.len(),
        });
    }
    let mut out = rhs.to_vec();
    let last = system.b_cur.len() - 1;
    // r_0 picks up P_0 ψ_0, r_{N−1} picks up Q_{N−1} ψ_N
    let c0 = system.p[0].mul_vec(bc0);
    system.b_prev[0].mul_vec_add(&c0, &mut out[..n]);
    let ct = system.q[system.data.n_steps - 1].mul_vec(bc_t);
    system.b_cur[last].mul_vec_add(&ct, &mut out[last * n..]);
    Ok(out)
}

impl LssSystem {
    /// The reduced operator `L_H`.
    pub fn matrix(&self) -> &BlockTridiagonalMatrix {
        &self.matrix
    }

    /// Right-hand side including the configured boundary values.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Right-hand side for `ψ(0) = ψ(T) = 0`.
    pub fn rhs_homogeneous(&self) -> &[f64] {
        &self.rhs_homogeneous
    }

    pub fn config(&self) -> &LssConfig {
        &self.config
    }

    pub fn jbar(&self) -> f64 {
        self.jbar
    }

    pub fn dim(&self) -> usize {
        self.data.n
    }

    pub fn n_steps(&self) -> usize {
        self.data.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.data.dt
    }

    /// Relative max-norm asymmetry of `L_H` as assembled from the two
    /// stencils (diagonal blocks and the two off-diagonal bands).
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// Replaces the boundary values; the matrix is reused.
    pub fn set_boundary(&mut self, bc0: &[f64], bc_t: &[f64]) -> Result<()> {
        self.rhs = apply_bc(self, &self.rhs_homogeneous, bc0, bc_t)?;
        self.config.bc0 = bc0.to_vec();
        self.config.bc_t = bc_t.to_vec();
        Ok(())
    }

    /// Solves for the interior `ψ` by block Cholesky and reconstructs `r`.
    pub fn solve(&self) -> Result<AdjointSolution> {
        let interior = cholesky_solve(&self.matrix, &self.rhs)?;
        self.reconstruct(&interior)
    }

    /// Completes an interior solution `ψ_1..ψ_{N−1}` with boundary values
    /// and `r`, and evaluates the residual of the un-eliminated equations.
    pub fn reconstruct(&self, interior: &[f64]) -> Result<AdjointSolution> {
        let (n, n_steps, dt) = (self.data.n, self.data.n_steps, self.data.dt);
        if interior.len() != (n_steps - 1) * n {
            return Err(LssError::DimensionMismatch {
                expected: (n_steps - 1) * n,
                found: interior.len(),
            });
        }
        let mut psi = Vec::with_capacity((n_steps + 1) * n);
        psi.extend_from_slice(&self.config.bc0);
        psi.extend_from_slice(interior);
        psi.extend_from_slice(&self.config.bc_t);

        let r_rows = match self.config.scheme {
            SchemeOrder::SecondOrder => n_steps,
            SchemeOrder::FirstOrder => n_steps + 1,
        };
        let mut r = vec![0.0; r_rows * n];
        for k in 0..n_steps {
            let rk = &mut r[k * n..(k + 1) * n];
            rk.copy_from_slice(self.data.j_u(k));
            self.p[k].mul_vec_add(&psi[k * n..(k + 1) * n], rk);
            self.q[k].mul_vec_add(&psi[(k + 1) * n..(k + 2) * n], rk);
        }
        let inv_a2 = 1.0 / self.config.alpha2;
        if self.config.scheme == SchemeOrder::FirstOrder {
            // node N: (I/dt − F_N) r_N = r_{N−1}/dt + (ψ_Nᵀ f_N + J_N − J̄) f_N / α²
            let f_n = self.data.f(n_steps);
            let psi_n = &psi[n_steps * n..];
            let c = (dot(psi_n, f_n) + self.data.j_node[n_steps] - self.jbar) * inv_a2;
            let lhs = shifted(&self.data.jac[n_steps], 1.0 / dt, -1.0);
            let b: Vec<f64> = r[(n_steps - 1) * n..n_steps * n]
                .iter()
                .zip(f_n)
                .map(|(rp, fi)| rp / dt + c * fi)
                .collect();
            let r_n = lhs
                .lu_solve(&b)
                .ok_or(LssError::SingularBlock { block: n_steps })?;
            r[n_steps * n..].copy_from_slice(&r_n);
        }

        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        for idx in 0..n_steps - 1 {
            let i = idx + 1;
            let mut lhs = vec![0.0; n];
            self.b_prev[idx].mul_vec_add(&r[(i - 1) * n..i * n], &mut lhs);
            self.b_cur[idx].mul_vec_add(&r[i * n..(i + 1) * n], &mut lhs);
            let f = self.data.f(i);
            let c = (dot(&psi[i * n..(i + 1) * n], f) + self.data.j_node[i] - self.jbar) * inv_a2;
            size = size.max(norm_inf(&lhs)).max(c.abs() * norm_inf(f));
            for (l, fi) in lhs.iter().zip(f) {
                worst = worst.max((l - c * fi).abs());
            }
        }
        let residual = if size > 0.0 { worst / size } else { worst };
        Ok(AdjointSolution {
            psi,
            r,
            config: self.config.clone(),
            dim: n,
            n_steps,
            dt,
            jbar: self.jbar,
            residual,
        })
    }
}
