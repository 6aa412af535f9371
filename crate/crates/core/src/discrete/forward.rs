use alloc::vec;
use alloc::vec::Vec;

use super::{shifted, shifted_transpose, LocalData, LssConfig, SchemeOrder};
use crate::dynamics::DynamicalSystem;
use crate::linalg::{dot, norm_inf, Mat};
use crate::trajectory::Trajectory;
use crate::{LssError, Result};

/// Discrete forward LSS optimality (KKT) system in `(v, η, w)`:
///
/// ```text
/// w-equation, rows k = 0..N−1:   G_k⁻ w_k + G_k⁺ w_{k+1} + v_k = 0,   w_0 = w_N = 0
/// η-equation, nodes i = 1..N−1:  f_iᵀ w_i + α² η_i = 0
/// v-equation, nodes i = 1..N−1:  V_i⁻ v_{i−1} + V_i⁺ v_i − η_i f_i = b_i
/// ```
///
/// `G` discretizes `dw/dt + f_uᵀ w`, `V` discretizes `dv/dt − f_u v` and
/// `b_i` is the nodal weight of `f_s` in the sensitivity quadrature. `v`
/// lives where the scheme stores `r`.
#[derive(Debug, Clone)]
pub struct ForwardKkt {
    alpha2: f64,
    scheme: SchemeOrder,
    n: usize,
    n_steps: usize,
    dt: f64,
    g_prev: Vec<Mat>,
    g_next: Vec<Mat>,
    v_prev: Vec<Mat>,
    v_cur: Vec<Mat>,
    f_node: Vec<f64>,
    source: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSolution {
    /// `N × n`, one per row of the w-equation.
    pub v: Vec<f64>,
    /// `N + 1` node values, `η_0 = η_N = 0`.
    pub eta: Vec<f64>,
    /// `(N + 1) × n` node values, `w_0 = w_N = 0`.
    pub w: Vec<f64>,
    pub scheme: SchemeOrder,
    pub alpha2: f64,
    pub dim: usize,
    pub n_steps: usize,
    pub dt: f64,
    /// Max-norm residual of the v-equation relative to its terms.
    pub residual: f64,
}

/// Builds the forward KKT system matching `cfg.scheme`. Boundary values in
/// `cfg` are ignored: the forward problem always has `w(0) = w(T) = 0`.
pub fn assemble_forward(
    traj: &Trajectory,
    sys: &dyn DynamicalSystem,
    cfg: &LssConfig,
) -> Result<ForwardKkt> {
    cfg.validate(sys.dim())?;
    let data = LocalData::build(traj, sys, cfg.scheme)?;
    let (n, n_steps, dt) = (data.n, data.n_steps, data.dt);
    let inv_dt = 1.0 / dt;
    let s = traj.param();

    let mut g_prev = Vec::with_capacity(n_steps);
    let mut g_next = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let fk = &data.jac[k];
        match cfg.scheme {
            SchemeOrder::SecondOrder => {
                // (w_{k+1} − w_k)/dt + F_{k+1/2}ᵀ (w_{k+1} + w_k)/2
                g_prev.push(shifted_transpose(fk, -inv_dt, 0.5));
                g_next.push(shifted_transpose(fk, inv_dt, 0.5));
            }
            SchemeOrder::FirstOrder => {
                // (w_{k+1} − w_k)/dt + F_kᵀ w_k
                g_prev.push(shifted_transpose(fk, -inv_dt, 1.0));
                g_next.push(Mat::identity(n).scaled(inv_dt));
            }
        }
    }

    let mut v_prev = Vec::with_capacity(n_steps - 1);
    let mut v_cur = Vec::with_capacity(n_steps - 1);
    for i in 1..n_steps {
        match cfg.scheme {
            SchemeOrder::SecondOrder => {
                // (v_{i+1/2} − v_{i−1/2})/dt − (F_{i+1/2} v_{i+1/2} + F_{i−1/2} v_{i−1/2})/2
                v_prev.push(shifted(&data.jac[i - 1], -inv_dt, -0.5));
                v_cur.push(shifted(&data.jac[i], inv_dt, -0.5));
            }
            SchemeOrder::FirstOrder => {
                // (v_i − v_{i−1})/dt − F_i v_i
                v_prev.push(Mat::identity(n).scaled(-inv_dt));
                v_cur.push(shifted(&data.jac[i], inv_dt, -1.0));
            }
        }
    }

    // b_i = (f_s(u_{i−1/2}) + f_s(u_{i+1/2}))/2
    let mut fs_mid = vec![0.0; n_steps * n];
    for k in 0..n_steps {
        sys.rhs_param(
            traj.midpoint(k as isize),
            s,
            &mut fs_mid[k * n..(k + 1) * n],
        );
    }
    let mut source = vec![0.0; (n_steps - 1) * n];
    for i in 1..n_steps {
        for c in 0..n {
            source[(i - 1) * n + c] = 0.5 * (fs_mid[(i - 1) * n + c] + fs_mid[i * n + c]);
        }
    }
    if !source.iter().all(|x| x.is_finite()) {
        return Err(LssError::NonFinite("parameter derivative"));
    }

    Ok(ForwardKkt {
        alpha2: cfg.alpha2,
        scheme: cfg.scheme,
        n,
        n_steps,
        dt,
        g_prev,
        g_next,
        v_prev,
        v_cur,
        f_node: data.f_node,
        source,
    })
}

impl ForwardKkt {
    pub fn scheme(&self) -> SchemeOrder {
        self.scheme
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    fn f(&self, i: usize) -> &[f64] {
        &self.f_node[i * self.n..(i + 1) * self.n]
    }

    /// Number of unknowns `N·n + (N−1) + (N−1)·n`.
    pub fn num_unknowns(&self) -> usize {
        self.n_steps * self.n + (self.n_steps - 1) * (1 + self.n)
    }

    /// Dense KKT matrix. Unknowns are ordered `(v_0..v_{N−1}, η_1..η_{N−1},
    /// w_1..w_{N−1})`, equations `(w-rows, η-rows, v-rows)`.
    pub fn to_dense(&self) -> Mat {
        let (n, ns) = (self.n, self.n_steps);
        let size = self.num_unknowns();
        let v_off = 0;
        let eta_off = ns * n;
        let w_off = eta_off + (ns - 1);
        let w_col = |i: usize| w_off + (i - 1) * n;
        let mut m = Mat::zeros(size, size);
        let put = |m: &mut Mat, r0: usize, c0: usize, b: &Mat| {
            for a in 0..n {
                for c in 0..n {
                    m[(r0 + a, c0 + c)] += b[(a, c)];
                }
            }
        };
        for k in 0..ns {
            let row = v_off + k * n;
            put(&mut m, row, v_off + k * n, &Mat::identity(n));
            if k >= 1 {
                put(&mut m, row, w_col(k), &self.g_prev[k]);
            }
            if k + 1 < ns {
                put(&mut m, row, w_col(k + 1), &self.g_next[k]);
            }
        }
        for i in 1..ns {
            let row = eta_off + i - 1;
            m[(row, eta_off + i - 1)] = self.alpha2;
            for (c, fc) in self.f(i).iter().enumerate() {
                m[(row, w_col(i) + c)] = *fc;
            }
        }
        for i in 1..ns {
            let row = w_off + (i - 1) * n;
            put(&mut m, row, v_off + (i - 1) * n, &self.v_prev[i - 1]);
            put(&mut m, row, v_off + i * n, &self.v_cur[i - 1]);
            for (c, fc) in self.f(i).iter().enumerate() {
                m[(row + c, eta_off + i - 1)] = -fc;
            }
        }
        m
    }

    /// Dense right-hand side matching [`to_dense`](Self::to_dense).
    pub fn dense_rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.num_unknowns()];
        let w_off = self.n_steps * self.n + self.n_steps - 1;
        b[w_off..].copy_from_slice(&self.source);
        b
    }

    /// Eliminates `v` and `η`, solves the block-tridiagonal system for the
    /// interior `w` by block LU (no symmetry assumed), and back-substitutes.
    pub fn solve(&self) -> Result<ForwardSolution> {
        let (n, ns) = (self.n, self.n_steps);
        let m = ns - 1;
        let inv_a2 = 1.0 / self.alpha2;

        // v_k = −(G_k⁻ w_k + G_k⁺ w_{k+1}) and η_i = −f_iᵀ w_i / α² turn the
        // v-equation into (−V·G + diag(f fᵀ)/α²) w = b
        let mut diag = Vec::with_capacity(m);
        let mut lower = Vec::with_capacity(m.saturating_sub(1));
        let mut upper = Vec::with_capacity(m.saturating_sub(1));
        for idx in 0..m {
            let i = idx + 1;
            let mut d = Mat::outer(self.f(i), self.f(i)).scaled(inv_a2);
            d.sub_assign(&self.v_prev[idx].matmul(&self.g_next[i - 1]));
            d.sub_assign(&self.v_cur[idx].matmul(&self.g_prev[i]));
            diag.push(d);
            if idx + 1 < m {
                lower.push(self.v_prev[idx + 1].matmul(&self.g_prev[i]).scaled(-1.0));
                upper.push(self.v_cur[idx].matmul(&self.g_next[i]).scaled(-1.0));
            }
        }
        let interior = block_thomas(diag, &lower, &upper, &self.source, n)?;

        let mut w = vec![0.0; (ns + 1) * n];
        w[n..ns * n].copy_from_slice(&interior);
        let mut v = vec![0.0; ns * n];
        for k in 0..ns {
            let vk = &mut v[k * n..(k + 1) * n];
            self.g_prev[k].mul_vec_add(&w[k * n..(k + 1) * n], vk);
            self.g_next[k].mul_vec_add(&w[(k + 1) * n..(k + 2) * n], vk);
            vk.iter_mut().for_each(|x| *x = -*x);
        }
        let mut eta = vec![0.0; ns + 1];
        for i in 1..ns {
            eta[i] = -dot(self.f(i), &w[i * n..(i + 1) * n]) * inv_a2;
        }

        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        for idx in 0..m {
            let i = idx + 1;
            let mut lhs = vec![0.0; n];
            self.v_prev[idx].mul_vec_add(&v[(i - 1) * n..i * n], &mut lhs);
            self.v_cur[idx].mul_vec_add(&v[i * n..(i + 1) * n], &mut lhs);
            size = size.max(norm_inf(&lhs));
            let b = &self.source[idx * n..(idx + 1) * n];
            for ((l, fi), bi) in lhs.iter().zip(self.f(i)).zip(b) {
                worst = worst.max((l - eta[i] * fi - bi).abs());
            }
        }
        let residual = if size > 0.0 { worst / size } else { worst };
        Ok(ForwardSolution {
            v,
            eta,
            w,
            scheme: self.scheme,
            alpha2: self.alpha2,
            dim: n,
            n_steps: ns,
            dt: self.dt,
            residual,
        })
    }
}

/// Block LU (Thomas) solve of a general block-tridiagonal system.
fn block_thomas(
    mut diag: Vec<Mat>,
    lower: &[Mat],
    upper: &[Mat],
    rhs: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut b = rhs.to_vec();
    // forward sweep: keep X_i = D'_i⁻¹ U_i and y_i = D'_i⁻¹ b'_i
    let mut x_blocks: Vec<Mat> = Vec::with_capacity(m);
    for i in 0..m {
        if i > 0 {
            let l = &lower[i - 1];
            diag[i].sub_assign(&l.matmul(&x_blocks[i - 1]));
            let (prev, cur) = b.split_at_mut(i * n);
            let y_prev = &prev[(i - 1) * n..];
            let ly = l.mul_vec(y_prev);
            for (c, d) in cur[..n].iter_mut().zip(&ly) {
                *c -= d;
            }
        }
        let y = diag[i]
            .lu_solve(&b[i * n..(i + 1) * n])
            .ok_or(LssError::SingularBlock { block: i })?;
        b[i * n..(i + 1) * n].copy_from_slice(&y);
        if i + 1 < m {
            let x = diag[i]
                .lu_solve_mat(&upper[i])
                .ok_or(LssError::SingularBlock { block: i })?;
            x_blocks.push(x);
        }
    }
    for i in (0..m.saturating_sub(1)).rev() {
        let (cur, next) = b.split_at_mut((i + 1) * n);
        let corr = x_blocks[i].mul_vec(&next[..n]);
        for (c, d) in cur[i * n..].iter_mut().zip(&corr) {
            *c -= d;
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_thomas_matches_dense_lu() {
        let n = 2;
        let d = |s: f64| Mat::from_row_slice(2, 2, &[4.0 + s, 1.0, -0.5, 3.0]);
        let l = Mat::from_row_slice(2, 2, &[0.3, -1.0, 0.2, 0.1]);
        let u = Mat::from_row_slice(2, 2, &[-0.7, 0.4, 1.0, 0.2]);
        let diag = vec![d(0.0), d(1.0), d(-1.0)];
        let lower = vec![l.clone(), l.clone()];
        let upper = vec![u.clone(), u.clone()];
        let mut dense = Mat::zeros(6, 6);
        for b in 0..3 {
            for i in 0..n {
                for j in 0..n {
                    dense[(b * n + i, b * n + j)] = diag[b][(i, j)];
                    if b + 1 < 3 {
                        dense[((b + 1) * n + i, b * n + j)] = l[(i, j)];
                        dense[(b * n + i, (b + 1) * n + j)] = u[(i, j)];
                    }
                }
            }
        }
        let rhs = [1.0, 2.0, -1.0, 0.5, 0.0, 3.0];
        let x = block_thomas(diag, &lower, &upper, &rhs, n).unwrap();
        let y = dense.lu_solve(&rhs).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
