//! Window averages and LSS sensitivity quadratures.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::discrete::{
    assemble_adjoint, AdjointSolution, ForwardSolution, LocalData, LssConfig, SchemeOrder,
};
use crate::dynamics::DynamicalSystem;
use crate::linalg::dot;
use crate::trajectory::Trajectory;
use crate::{LssError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Adjoint,
    Forward,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Adjoint => "adjoint",
            Method::Forward => "forward",
        }
    }
}

/// `dJ̄/ds` with everything needed to reproduce the run.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    pub djds: f64,
    pub jbar: f64,
    pub system: String,
    pub method: Method,
    pub horizon: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub alpha2: f64,
    pub scheme: SchemeOrder,
    pub bc0: Vec<f64>,
    pub bc_t: Vec<f64>,
    pub seed: u64,
    pub lambda_min: Option<f64>,
}

/// Trapezoidal average of `J` over `[0, T]`. Node values are the means of
/// the two neighbouring midpoint values.
pub fn time_average(traj: &Trajectory, sys: &dyn DynamicalSystem) -> Result<f64> {
    if traj.dim() != sys.dim() {
        return Err(LssError::DimensionMismatch {
            expected: sys.dim(),
            found: traj.dim(),
        });
    }
    let n_steps = traj.n_steps();
    if n_steps == 0 {
        return Err(LssError::EmptyTrajectory);
    }
    let s = traj.param();
    let mid: Vec<f64> = (-1..=n_steps as isize)
        .map(|k| sys.functional(traj.midpoint(k), s))
        .collect();
    let node = |i: usize| 0.5 * (mid[i] + mid[i + 1]);
    let mut sum = 0.5 * (node(0) + node(n_steps));
    for i in 1..n_steps {
        sum += node(i);
    }
    let avg = sum / n_steps as f64;
    if !avg.is_finite() {
        return Err(LssError::NonFinite("time average"));
    }
    Ok(avg)
}

fn check_grid(traj: &Trajectory, dim: usize, n_steps: usize, dt: f64) -> Result<()> {
    if traj.dim() != dim || traj.n_steps() != n_steps || traj.dt() != dt {
        return Err(LssError::GridMismatch);
    }
    Ok(())
}

/// `dJ̄/ds = (1/N) Σ_k [ ((ψ_{k+1} + ψ_k)/2)ᵀ f_s(u_{k+1/2}) + J_s(u_{k+1/2}) ]`
pub fn adjoint_sensitivity(
    psi: &AdjointSolution,
    traj: &Trajectory,
    sys: &dyn DynamicalSystem,
) -> Result<SensitivityResult> {
    check_grid(traj, psi.dim, psi.n_steps, psi.dt)?;
    if sys.dim() != psi.dim {
        return Err(LssError::DimensionMismatch {
            expected: psi.dim,
            found: sys.dim(),
        });
    }
    let (n, n_steps, s) = (psi.dim, psi.n_steps, traj.param());
    let mut fs = vec![0.0; n];
    let mut avg = vec![0.0; n];
    let mut sum = 0.0;
    for k in 0..n_steps {
        let u = traj.midpoint(k as isize);
        sys.rhs_param(u, s, &mut fs);
        for ((a, p0), p1) in avg.iter_mut().zip(psi.psi_at(k)).zip(psi.psi_at(k + 1)) {
            *a = 0.5 * (p0 + p1);
        }
        sum += dot(&avg, &fs) + sys.functional_param(u, s);
    }
    let djds = sum / n_steps as f64;
    if !djds.is_finite() {
        return Err(LssError::NonFinite("sensitivity"));
    }
    Ok(SensitivityResult {
        djds,
        jbar: psi.jbar,
        system: traj.system_name().into(),
        method: Method::Adjoint,
        horizon: traj.grid().horizon(),
        dt: traj.dt(),
        n_steps,
        alpha2: psi.config.alpha2,
        scheme: psi.config.scheme,
        bc0: psi.config.bc0.clone(),
        bc_t: psi.config.bc_t.clone(),
        seed: traj.seed(),
        lambda_min: None,
    })
}

/// Forward quadrature of `(1/T) ∫ J_u v + J_s + η (J − J̄) dt` on the same
/// stencil positions as the adjoint sum, so the two agree to round-off for
/// homogeneous adjoint boundary values.
pub fn forward_sensitivity(
    sol: &ForwardSolution,
    traj: &Trajectory,
    sys: &dyn DynamicalSystem,
    jbar: f64,
) -> Result<SensitivityResult> {
    check_grid(traj, sol.dim, sol.n_steps, sol.dt)?;
    let data = LocalData::build(traj, sys, sol.scheme)?;
    let (n, n_steps, s) = (sol.dim, sol.n_steps, traj.param());
    let mut sum = 0.0;
    for k in 0..n_steps {
        sum += dot(data.j_u(k), &sol.v[k * n..(k + 1) * n]);
        sum += sys.functional_param(traj.midpoint(k as isize), s);
    }
    for i in 1..n_steps {
        sum += sol.eta[i] * (data.j_node[i] - jbar);
    }
    let djds = sum / n_steps as f64;
    if !djds.is_finite() {
        return Err(LssError::NonFinite("sensitivity"));
    }
    Ok(SensitivityResult {
        djds,
        jbar,
        system: traj.system_name().into(),
        method: Method::Forward,
        horizon: traj.grid().horizon(),
        dt: traj.dt(),
        n_steps,
        alpha2: sol.alpha2,
        scheme: sol.scheme,
        bc0: vec![0.0; n],
        bc_t: vec![0.0; n],
        seed: traj.seed(),
        lambda_min: None,
    })
}

/// Window average, adjoint assembly, direct solve and quadrature in one call.
pub fn lss_sensitivity(
    traj: &Trajectory,
    sys: &dyn DynamicalSystem,
    cfg: &LssConfig,
) -> Result<SensitivityResult> {
    let jbar = time_average(traj, sys)?;
    let system = assemble_adjoint(traj, sys, cfg, jbar)?;
    let psi = system.solve()?;
    adjoint_sensitivity(&psi, traj, sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FiniteDifferenceSystem;
    use crate::trajectory::TimeGrid;

    fn clock(n_steps: usize, horizon: f64) -> Trajectory {
        let grid = TimeGrid::new(horizon / n_steps as f64, n_steps).unwrap();
        let states = (-1..=n_steps as isize)
            .map(|k| grid.midpoint_time(k))
            .collect();
        Trajectory::from_midpoints("clock", 0.0, 3, grid, 1, states).unwrap()
    }

    #[test]
    fn averages_of_constant_and_linear_outputs() {
        let traj = clock(10, 1.0);
        let rhs = |_u: &[f64], _s: f64, out: &mut [f64]| out[0] = 1.0;
        let constant = FiniteDifferenceSystem::new("c", 1, 0.0, rhs, |_u: &[f64], _s: f64| 2.5);
        assert!((time_average(&traj, &constant).unwrap() - 2.5).abs() < 1e-15);
        let linear = FiniteDifferenceSystem::new("t", 1, 0.0, rhs, |u: &[f64], _s: f64| u[0]);
        assert!((time_average(&traj, &linear).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_adjoint_and_no_explicit_dependence_give_zero() {
        let traj = clock(4, 1.0);
        let sys = FiniteDifferenceSystem::new(
            "c",
            1,
            0.0,
            |_u: &[f64], s: f64, out: &mut [f64]| out[0] = 1.0 + s,
            |u: &[f64], _s: f64| u[0],
        );
        let psi = AdjointSolution {
            psi: vec![0.0; 5],
            r: vec![0.0; 4],
            config: LssConfig::homogeneous(1, 1.0, SchemeOrder::SecondOrder),
            dim: 1,
            n_steps: 4,
            dt: 0.25,
            jbar: 0.5,
            residual: 0.0,
        };
        let res = adjoint_sensitivity(&psi, &traj, &sys).unwrap();
        assert_eq!(res.djds, 0.0);
        assert_eq!(res.seed, 3);

        let other = clock(5, 1.0);
        assert_eq!(
            adjoint_sensitivity(&psi, &other, &sys),
            Err(LssError::GridMismatch)
        );
    }
}
