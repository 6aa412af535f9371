//! Primal trajectories on the staggered LSS grid.
//!
//! The window `[0, T]` is split into `N` steps of size `dt`. States are
//! stored at the half steps `t_{k+1/2} = (k + 1/2)·dt` for `k = -1..=N`,
//! i.e. one extra midpoint before and after the window, so node velocities
//! `f_i = (u_{i+1/2} − u_{i−1/2})/dt` exist at every node `i = 0..=N`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::DynamicalSystem;
use crate::{LssError, Result};

/// Magnitude beyond which an integration is declared divergent.
pub const BLOW_UP_LIMIT: f64 = 1e8;

/// Uniform time grid `t_i = i·dt`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || n_steps < 2 {
            return Err(LssError::InvalidGrid { dt, n_steps });
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid with `N = round(T / dt)` steps.
    pub fn from_horizon(dt: f64, horizon: f64) -> Result<Self> {
        let n = libm::round(horizon / dt);
        if !(n >= 0.0) {
            return Err(LssError::InvalidGrid { dt, n_steps: 0 });
        }
        Self::new(dt, n as usize)
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Window length `T = N·dt`.
    #[inline]
    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    #[inline]
    pub fn node_time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    #[inline]
    pub fn midpoint_time(&self, k: isize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }
}

/// Finite-difference velocity at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVelocity {
    pub index: usize,
    pub f: Vec<f64>,
}

/// Immutable primal trajectory on the staggered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    system: String,
    param: f64,
    seed: u64,
    /// `(N + 2) × dim` row-major; row `k + 1` holds `u_{k+1/2}`.
    states: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from `N + 2` midpoint states `u_{-1/2}, …, u_{N+1/2}`.
    pub fn from_midpoints(
        system: impl Into<String>,
        param: f64,
        seed: u64,
        grid: TimeGrid,
        dim: usize,
        states: Vec<f64>,
    ) -> Result<Self> {
        let expected = (grid.n_steps + 2) * dim;
        if dim == 0 || states.len() != expected {
            return Err(LssError::DimensionMismatch {
                expected,
                found: states.len(),
            });
        }
        if !states.iter().all(|x| x.is_finite()) || !param.is_finite() {
            return Err(LssError::NonFinite("trajectory states"));
        }
        Ok(Self {
            grid,
            dim,
            system: system.into(),
            param,
            seed,
            states,
        })
    }

    #[inline]
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    pub fn system_name(&self) -> &str {
        &self.system
    }

    /// Parameter value the trajectory was integrated at.
    #[inline]
    pub fn param(&self) -> f64 {
        self.param
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// All stored midpoint states, row-major, starting at `u_{-1/2}`.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// `u_{k+1/2}` for `k = -1..=N`.
    ///
    /// Panics when `k` is out of range.
    #[inline]
    pub fn midpoint(&self, k: isize) -> &[f64] {
        let row = (k + 1) as usize;
        assert!(
            k >= -1 && row <= self.grid.n_steps + 1,
            "midpoint index {k} out of range"
        );
        &self.states[row * self.dim..(row + 1) * self.dim]
    }

    /// Node state `u_i ≈ (u_{i−1/2} + u_{i+1/2}) / 2` for `i = 0..=N`.
    pub fn node_state(&self, i: usize) -> Vec<f64> {
        let a = self.midpoint(i as isize - 1);
        let b = self.midpoint(i as isize);
        a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
    }

    /// `f_i = (u_{i+1/2} − u_{i−1/2}) / dt` for `i = 0..=N`.
    pub fn node_velocity(&self, i: usize) -> Result<NodeVelocity> {
        if i > self.grid.n_steps {
            return Err(LssError::IndexOutOfRange {
                index: i as isize,
                lo: 0,
                hi: self.grid.n_steps as isize,
            });
        }
        Ok(NodeVelocity {
            index: i,
            f: self.node_velocity_unchecked(i),
        })
    }

    pub(crate) fn node_velocity_unchecked(&self, i: usize) -> Vec<f64> {
        let a = self.midpoint(i as isize - 1);
        let b = self.midpoint(i as isize);
        let dt = self.grid.dt;
        a.iter().zip(b).map(|(x, y)| (y - x) / dt).collect()
    }
}

/// Classical RK4 stepper with preallocated stages.
struct Rk4<'a> {
    sys: &'a dyn DynamicalSystem,
    s: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    fn new(sys: &'a dyn DynamicalSystem, s: f64) -> Self {
        let n = sys.dim();
        Self {
            sys,
            s,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, u: &mut [f64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        self.sys.rhs(u, self.s, k1);
        for ((t, x), k) in self.tmp.iter_mut().zip(u.iter()).zip(k1.iter()) {
            *t = x + 0.5 * h * k;
        }
        self.sys.rhs(&self.tmp, self.s, k2);
        for ((t, x), k) in self.tmp.iter_mut().zip(u.iter()).zip(k2.iter()) {
            *t = x + 0.5 * h * k;
        }
        self.sys.rhs(&self.tmp, self.s, k3);
        for ((t, x), k) in self.tmp.iter_mut().zip(u.iter()).zip(k3.iter()) {
            *t = x + h * k;
        }
        self.sys.rhs(&self.tmp, self.s, k4);
        for (i, x) in u.iter_mut().enumerate() {
            *x += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Advances by `duration` in `substeps` equal steps; `time` is the
    /// start time used for blow-up reports.
    fn advance(&mut self, u: &mut [f64], duration: f64, substeps: usize, time: f64) -> Result<()> {
        let h = duration / substeps as f64;
        for j in 0..substeps {
            self.step(u, h);
            if u.iter().any(|x| !(x.abs() <= BLOW_UP_LIMIT)) {
                return Err(LssError::BlowUp {
                    time: time + (j + 1) as f64 * h,
                });
            }
        }
        Ok(())
    }
}

/// Integrates `sys` at its nominal parameter from `u0`.
///
/// The first `spin_up` time units are discarded; `t = 0` is the spun-up
/// state. Every interval of length `dt` is covered by two RK4 substeps, and
/// `u_{-1/2}` is obtained by a half step backwards from `t = 0`. `seed` is
/// recorded in the trajectory (it identifies how `u0` was drawn).
pub fn integrate(
    sys: &dyn DynamicalSystem,
    u0: &[f64],
    grid: TimeGrid,
    spin_up: f64,
    seed: u64,
) -> Result<Trajectory> {
    integrate_at(sys, sys.param(), u0, grid, spin_up, seed)
}

/// As [`integrate`] with an explicit parameter value.
pub fn integrate_at(
    sys: &dyn DynamicalSystem,
    s: f64,
    u0: &[f64],
    grid: TimeGrid,
    spin_up: f64,
    seed: u64,
) -> Result<Trajectory> {
    let n = sys.dim();
    if u0.len() != n {
        return Err(LssError::DimensionMismatch {
            expected: n,
            found: u0.len(),
        });
    }
    if !u0.iter().all(|x| x.is_finite()) {
        return Err(LssError::NonFinite("initial state"));
    }
    if !(spin_up >= 0.0) || !spin_up.is_finite() {
        return Err(LssError::InvalidArgument(
            "spin-up must be a finite, non-negative time",
        ));
    }
    let dt = grid.dt;
    let h_half = 0.5 * dt;
    let mut rk = Rk4::new(sys, s);

    let mut u = u0.to_vec();
    if spin_up > 0.0 {
        let substeps = libm::ceil(spin_up / h_half).max(1.0) as usize;
        rk.advance(&mut u, spin_up, substeps, -spin_up)?;
    }

    let rows = grid.n_steps + 2;
    let mut states = vec![0.0; rows * n];

    let mut back = u.clone();
    rk.advance(&mut back, -h_half, 1, 0.0)?;
    states[..n].copy_from_slice(&back);

    rk.advance(&mut u, h_half, 1, 0.0)?;
    states[n..2 * n].copy_from_slice(&u);
    for row in 2..rows {
        let t = grid.midpoint_time(row as isize - 2);
        rk.advance(&mut u, dt, 2, t)?;
        states[row * n..(row + 1) * n].copy_from_slice(&u);
    }
    Trajectory::from_midpoints(sys.name(), s, seed, grid, n, states)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of ensemble member `index` derived from a root seed:
/// `splitmix64(splitmix64(root) ⊕ index)`. Mixing the root first keeps the
/// member seeds of different roots unrelated.
pub fn member_seed(root: u64, index: u64) -> u64 {
    splitmix64(splitmix64(root) ^ index)
}

/// Uniform random state inside the system's bounding box (ChaCha8 stream
/// seeded with `seed`).
pub fn random_initial_state(sys: &dyn DynamicalSystem, seed: u64) -> Result<Vec<f64>> {
    let bbox = sys
        .bounding_box()
        .ok_or(LssError::InvalidArgument("system declares no bounding box"))?;
    if bbox.len() != sys.dim() {
        return Err(LssError::DimensionMismatch {
            expected: sys.dim(),
            found: bbox.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(bbox
        .iter()
        .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect())
}

/// Restricts a fine trajectory to a grid `factor` times coarser.
///
/// Coarse midpoint states are linear interpolants of the fine midpoint
/// states at the coarse midpoint times. The coarse `u_{-1/2}` and
/// `u_{N+1/2}` fall outside the fine data for `factor > 1` and are linearly
/// extrapolated from the two outermost fine midpoints.
pub fn restrict_to_coarse(traj: &Trajectory, factor: usize) -> Result<Trajectory> {
    let n_fine = traj.n_steps();
    if factor == 0 || !n_fine.is_multiple_of(factor) {
        return Err(LssError::NotDivisible {
            n_steps: n_fine,
            factor,
        });
    }
    if factor == 1 {
        return Ok(traj.clone());
    }
    let grid = TimeGrid::new(traj.dt() * factor as f64, n_fine / factor)?;
    let n = traj.dim();
    let mut states = Vec::with_capacity((grid.n_steps + 2) * n);
    let m = factor as f64;
    for kc in -1..=grid.n_steps as isize {
        // fine midpoint coordinate: t / dt − 1/2
        let pos = (kc as f64 + 0.5) * m - 0.5;
        let lo = libm::floor(pos).clamp(-1.0, n_fine as f64 - 1.0) as isize;
        let w = pos - lo as f64;
        let a = traj.midpoint(lo);
        let b = traj.midpoint(lo + 1);
        states.extend(a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y));
    }
    Trajectory::from_midpoints(
        traj.system_name(),
        traj.param(),
        traj.seed(),
        grid,
        n,
        states,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Lorenz63;

    fn linear(a: &[f64], dt: f64, n_steps: usize) -> Trajectory {
        let grid = TimeGrid::new(dt, n_steps).unwrap();
        let mut states = Vec::new();
        for k in -1..=n_steps as isize {
            let t = grid.midpoint_time(k);
            states.extend(a.iter().map(|ai| 1.0 + ai * t));
        }
        Trajectory::from_midpoints("linear", 0.0, 0, grid, a.len(), states).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(0.1, 1).is_err());
        let g = TimeGrid::from_horizon(0.02, 10.0).unwrap();
        assert_eq!(g.n_steps(), 500);
        assert!((g.horizon() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn constant_trajectory_has_zero_velocity() {
        let traj = linear(&[0.0, 0.0], 0.1, 4);
        for i in 0..=4 {
            assert_eq!(traj.node_velocity(i).unwrap().f, [0.0, 0.0]);
        }
    }

    #[test]
    fn linear_trajectory_velocity_is_exact() {
        let a = [2.0, -0.5, 3.0];
        let traj = linear(&a, 0.25, 8);
        for i in 0..=8 {
            let f = traj.node_velocity(i).unwrap().f;
            for (x, y) in f.iter().zip(&a) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(matches!(
            traj.node_velocity(9),
            Err(LssError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn restriction_is_exact_on_linear_data() {
        let a = [1.0, -2.0];
        let fine = linear(&a, 0.1, 12);
        assert_eq!(restrict_to_coarse(&fine, 1).unwrap(), fine);
        for factor in [2, 3, 4, 6] {
            let coarse = restrict_to_coarse(&fine, factor).unwrap();
            let expected = linear(&a, 0.1 * factor as f64, 12 / factor);
            for (x, y) in coarse.states().iter().zip(expected.states()) {
                assert!((x - y).abs() < 1e-12, "factor {factor}");
            }
        }
        assert!(matches!(
            restrict_to_coarse(&fine, 5),
            Err(LssError::NotDivisible { .. })
        ));
    }

    #[test]
    fn first_midpoint_is_half_step_after_spin_up() {
        let sys = Lorenz63::default();
        let grid = TimeGrid::new(0.02, 2).unwrap();
        let u0 = [1.0, 2.0, 20.0];
        let traj = integrate(&sys, &u0, grid, 1.0, 7).unwrap();
        let mut rk = Rk4::new(&sys, 0.0);
        let mut u = u0.to_vec();
        rk.advance(&mut u, 1.0, 100, 0.0).unwrap();
        rk.advance(&mut u, 0.01, 1, 0.0).unwrap();
        assert_eq!(traj.midpoint(0), &u[..]);
        assert_eq!(traj.seed(), 7);
    }

    #[test]
    fn blow_up_is_reported() {
        struct Explosive;
        impl DynamicalSystem for Explosive {
            fn name(&self) -> &str {
                "explosive"
            }
            fn dim(&self) -> usize {
                1
            }
            fn param(&self) -> f64 {
                0.0
            }
            fn rhs(&self, u: &[f64], _: f64, out: &mut [f64]) {
                out[0] = u[0] * u[0];
            }
            fn jacobian(&self, u: &[f64], _: f64, out: &mut crate::Mat) {
                out[(0, 0)] = 2.0 * u[0];
            }
            fn rhs_param(&self, _: &[f64], _: f64, out: &mut [f64]) {
                out[0] = 0.0;
            }
            fn functional(&self, u: &[f64], _: f64) -> f64 {
                u[0]
            }
            fn functional_grad(&self, _: &[f64], _: f64, out: &mut [f64]) {
                out[0] = 1.0;
            }
            fn functional_param(&self, _: &[f64], _: f64) -> f64 {
                0.0
            }
        }
        let grid = TimeGrid::new(0.01, 400).unwrap();
        match integrate(&Explosive, &[1.0], grid, 0.0, 0) {
            Err(LssError::BlowUp { time }) => assert!(time > 0.9 && time < 1.1, "{time}"),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn random_states_are_in_box_and_reproducible() {
        let sys = Lorenz63::default();
        let a = random_initial_state(&sys, 42).unwrap();
        assert_eq!(a, random_initial_state(&sys, 42).unwrap());
        assert_ne!(a, random_initial_state(&sys, 43).unwrap());
        for (x, (lo, hi)) in a.iter().zip(sys.bounding_box().unwrap()) {
            assert!(x >= lo && x <= hi);
        }
        assert_ne!(member_seed(1, 0), member_seed(1, 1));
    }
}
