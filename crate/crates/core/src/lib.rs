//! Adjoint least-squares shadowing (LSS) for long-time-averaged outputs of
//! chaotic ODEs.
//!
//! The crate is `no_std` and only needs an allocator. It provides
//!
//! - [`dynamics`]: the [`DynamicalSystem`] interface plus the Lorenz 63 and
//!   Kuznetsov–Pikovsky coupled-oscillator benchmarks,
//! - [`trajectory`]: a fixed-step RK4 integrator writing states on the
//!   staggered (half-step) grid the LSS stencils use,
//! - [`discrete`]: first- and second-order assembly of the adjoint LSS
//!   boundary-value problem, reduced to a block-tridiagonal SPD system, and of
//!   the matching forward LSS KKT system,
//! - [`solver`]: block Cholesky, CG and inverse-power eigenvalue estimation,
//! - [`sensitivity`]: time averages and the adjoint/forward sensitivity sums.
//!
//! ```
//! use lss_core::{Lorenz63, TimeGrid, SchemeOrder, LssConfig};
//!
//! let sys = Lorenz63::default();
//! let grid = TimeGrid::new(0.02, 500).unwrap();
//! let traj = lss_core::integrate(&sys, &[1.0, 2.0, 20.0], grid, 20.0, 0).unwrap();
//! let cfg = LssConfig::homogeneous(3, 100.0, SchemeOrder::SecondOrder);
//! let result = lss_core::lss_sensitivity(&traj, &sys, &cfg).unwrap();
//! assert!(result.djds.is_finite());
//! ```
#![no_std]

extern crate alloc;

pub mod discrete;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod sensitivity;
pub mod solver;
pub mod trajectory;

pub use discrete::{
    apply_bc, assemble_adjoint, assemble_forward, AdjointSolution, ForwardKkt, ForwardSolution,
    LssConfig, LssSystem, SchemeOrder,
};
pub use dynamics::{
    eval_f, eval_f_s, eval_j, eval_j_s, eval_j_u, eval_jacobian, CoupledOscillator,
    DynamicalSystem, FiniteDifferenceSystem, Lorenz63,
};
pub use error::{LssError, Result};
pub use linalg::Mat;
pub use sensitivity::{
    adjoint_sensitivity, forward_sensitivity, lss_sensitivity, time_average, SensitivityResult,
};
pub use solver::{
    cg_solve, cholesky_solve, max_eigenvalue, min_eigenvalue, BlockCholesky,
    BlockTridiagonalMatrix, CgOutcome, EigenEstimate, Preconditioner,
};
pub use trajectory::{
    integrate, member_seed, random_initial_state, restrict_to_coarse, NodeVelocity, TimeGrid,
    Trajectory,
};
