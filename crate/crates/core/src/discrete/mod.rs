//! Space-time discretizations of the LSS optimality system.
//!
//! The adjoint problem on `[0, T]` is
//!
//! ```text
//! dψ/dt + f_uᵀ ψ + J_u = r,                    ψ(0) = ψ₀, ψ(T) = ψ_T
//! dr/dt − f_u r       = (ψᵀ f + J − J̄) f / α²
//! ```
//!
//! Both stencils write the first equation as `r = A ψ + c` row by row, so
//! `r` is eliminated and the second equation turns into a block-tridiagonal
//! SPD system in the interior `ψ_1, …, ψ_{N−1}` (see [`assemble_adjoint`]).
//! [`assemble_forward`] discretizes the primal KKT system in `(v, η, w)` so
//! that it is the exact transpose of the adjoint discretization.

mod adjoint;
mod forward;

use alloc::vec;
use alloc::vec::Vec;

pub use adjoint::{apply_bc, assemble_adjoint, AdjointSolution, LssSystem};
pub use forward::{assemble_forward, ForwardKkt, ForwardSolution};

use crate::dynamics::DynamicalSystem;
use crate::linalg::Mat;
use crate::trajectory::Trajectory;
use crate::{LssError, Result};

/// Finite-difference scheme for the adjoint boundary-value problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeOrder {
    /// One-sided stencil with `r` at nodes.
    FirstOrder,
    /// Box stencil with `r` at midpoints.
    SecondOrder,
}

impl SchemeOrder {
    pub fn order(self) -> u32 {
        match self {
            SchemeOrder::FirstOrder => 1,
            SchemeOrder::SecondOrder => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeOrder::FirstOrder => "first",
            SchemeOrder::SecondOrder => "second",
        }
    }
}

/// Time-dilation weight, scheme and adjoint boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct LssConfig {
    pub alpha2: f64,
    pub scheme: SchemeOrder,
    /// `ψ(0)`
    pub bc0: Vec<f64>,
    /// `ψ(T)`
    pub bc_t: Vec<f64>,
}

impl LssConfig {
    /// `ψ(0) = ψ(T) = 0`.
    pub fn homogeneous(dim: usize, alpha2: f64, scheme: SchemeOrder) -> Self {
        Self::constant_bc(dim, alpha2, scheme, 0.0)
    }

    /// `ψ(0) = ψ(T) = c·𝟙`.
    pub fn constant_bc(dim: usize, alpha2: f64, scheme: SchemeOrder, c: f64) -> Self {
        Self {
            alpha2,
            scheme,
            bc0: vec![c; dim],
            bc_t: vec![c; dim],
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.bc0.iter().chain(&self.bc_t).all(|&x| x == 0.0)
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if !(self.alpha2 > 0.0) || !self.alpha2.is_finite() {
            return Err(LssError::InvalidAlpha2(self.alpha2));
        }
        for bc in [&self.bc0, &self.bc_t] {
            if bc.len() != dim {
                return Err(LssError::DimensionMismatch {
                    expected: dim,
                    found: bc.len(),
                });
            }
            if !bc.iter().all(|x| x.is_finite()) {
                return Err(LssError::NonFinite("boundary values"));
            }
        }
        Ok(())
    }
}

/// Trajectory quantities sampled where a scheme needs them.
///
/// Rows `k = 0..N−1` carry the first-equation data (`f_u`, `J_u`) at
/// midpoints `k + 1/2` (second order) or nodes `k` (first order). Node data
/// (`f_i`, `J_i`) cover `i = 0..=N`.
#[derive(Debug, Clone)]
pub(crate) struct LocalData {
    pub n: usize,
    pub n_steps: usize,
    pub dt: f64,
    /// `f_u` per row; the first-order scheme has one extra entry at node `N`.
    pub jac: Vec<Mat>,
    pub j_u: Vec<f64>,
    pub f_node: Vec<f64>,
    pub j_node: Vec<f64>,
}

impl LocalData {
    pub fn build(
        traj: &Trajectory,
        sys: &dyn DynamicalSystem,
        scheme: SchemeOrder,
    ) -> Result<Self> {
        let n = sys.dim();
        if traj.dim() != n {
            return Err(LssError::DimensionMismatch {
                expected: n,
                found: traj.dim(),
            });
        }
        let n_steps = traj.n_steps();
        if n_steps < 2 {
            return Err(LssError::InvalidGrid {
                dt: traj.dt(),
                n_steps,
            });
        }
        let s = traj.param();
        let mut f_node = Vec::with_capacity((n_steps + 1) * n);
        for i in 0..=n_steps {
            f_node.extend(traj.node_velocity_unchecked(i));
        }

        let rows = match scheme {
            SchemeOrder::SecondOrder => n_steps,
            SchemeOrder::FirstOrder => n_steps + 1,
        };
        let mut jac = Vec::with_capacity(rows);
        let mut j_u = vec![0.0; n_steps * n];
        let mut j_node = Vec::with_capacity(n_steps + 1);
        match scheme {
            SchemeOrder::SecondOrder => {
                for k in 0..n_steps {
                    let u = traj.midpoint(k as isize);
                    let mut m = Mat::zeros(n, n);
                    sys.jacobian(u, s, &mut m);
                    jac.push(m);
                    sys.functional_grad(u, s, &mut j_u[k * n..(k + 1) * n]);
                }
                for i in 0..=n_steps {
                    let a = sys.functional(traj.midpoint(i as isize - 1), s);
                    let b = sys.functional(traj.midpoint(i as isize), s);
                    j_node.push(0.5 * (a + b));
                }
            }
            SchemeOrder::FirstOrder => {
                for i in 0..=n_steps {
                    let u = traj.node_state(i);
                    let mut m = Mat::zeros(n, n);
                    sys.jacobian(&u, s, &mut m);
                    jac.push(m);
                    if i < n_steps {
                        sys.functional_grad(&u, s, &mut j_u[i * n..(i + 1) * n]);
                    }
                    j_node.push(sys.functional(&u, s));
                }
            }
        }
        let finite = jac.iter().all(Mat::is_finite)
            && j_u
                .iter()
                .chain(&f_node)
                .chain(&j_node)
                .all(|x| x.is_finite());
        if !finite {
            return Err(LssError::NonFinite("trajectory derivative data"));
        }
        Ok(Self {
            n,
            n_steps,
            dt: traj.dt(),
            jac,
            j_u,
            f_node,
            j_node,
        })
    }

    #[inline]
    pub fn f(&self, i: usize) -> &[f64] {
        &self.f_node[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn j_u(&self, k: usize) -> &[f64] {
        &self.j_u[k * self.n..(k + 1) * self.n]
    }
}

/// `c·I + w·Fᵀ`
pub(crate) fn shifted_transpose(f: &Mat, c: f64, w: f64) -> Mat {
    let n = f.rows();
    Mat::from_fn(n, n, |i, j| w * f[(j, i)] + if i == j { c } else { 0.0 })
}

/// `c·I + w·F`
pub(crate) fn shifted(f: &Mat, c: f64, w: f64) -> Mat {
    let n = f.rows();
    Mat::from_fn(n, n, |i, j| w * f[(i, j)] + if i == j { c } else { 0.0 })
}
