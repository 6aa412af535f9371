#![allow(dead_code)]

pub mod dense;
pub mod fd;

use lss_core::{DynamicalSystem, Mat, TimeGrid, Trajectory};
use proptest::prelude::*;

/// `f = A u + s b`, `J = wᵀu + γ u₀² + s κ u₁` (with `u₁ = u₀` when n = 1).
#[derive(Debug, Clone)]
pub struct AffineSystem {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub gamma: f64,
    pub kappa: f64,
}

impl AffineSystem {
    fn k(&self) -> usize {
        if self.n > 1 {
            1
        } else {
            0
        }
    }
}

impl DynamicalSystem for AffineSystem {
    fn name(&self) -> &str {
        "affine"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn param(&self) -> f64 {
        0.0
    }
    fn rhs(&self, u: &[f64], s: f64, out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = s * self.b[i]
                + (0..self.n)
                    .map(|j| self.a[i * self.n + j] * u[j])
                    .sum::<f64>();
        }
    }
    fn jacobian(&self, _u: &[f64], _s: f64, out: &mut Mat) {
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self.a[i * self.n + j];
            }
        }
    }
    fn rhs_param(&self, _u: &[f64], _s: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.b);
    }
    fn functional(&self, u: &[f64], s: f64) -> f64 {
        let lin: f64 = self.w.iter().zip(u).map(|(a, b)| a * b).sum();
        lin + self.gamma * u[0] * u[0] + s * self.kappa * u[self.k()]
    }
    fn functional_grad(&self, u: &[f64], s: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.w);
        out[0] += 2.0 * self.gamma * u[0];
        out[self.k()] += s * self.kappa;
    }
    fn functional_param(&self, u: &[f64], _s: f64) -> f64 {
        self.kappa * u[self.k()]
    }
}

/// A random affine system together with arbitrary midpoint states; the LSS
/// algebra does not require the states to solve the ODE.
#[derive(Debug, Clone)]
pub struct Case {
    pub sys: AffineSystem,
    pub traj: Trajectory,
    pub alpha2: f64,
    pub bc0: Vec<f64>,
    pub bc_t: Vec<f64>,
}

pub fn case(
    max_dim: usize,
    n_steps: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Case> {
    (1..=max_dim, n_steps, 0.05f64..0.5, 0.3f64..20.0).prop_flat_map(|(n, n_steps, dt, alpha2)| {
        let rows = n_steps + 2;
        (
            prop::collection::vec(-1.5f64..1.5, n * n),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
            -0.5f64..0.5,
            -1.0f64..1.0,
            prop::collection::vec(-2.0f64..2.0, rows * n),
            prop::collection::vec(-1.0f64..1.0, 2 * n),
        )
            .prop_map(move |(a, b, w, gamma, kappa, states, bc)| {
                let sys = AffineSystem {
                    n,
                    a,
                    b,
                    w,
                    gamma,
                    kappa,
                };
                let grid = TimeGrid::new(dt, n_steps).unwrap();
                let traj = Trajectory::from_midpoints("affine", 0.0, 0, grid, n, states).unwrap();
                Case {
                    sys,
                    traj,
                    alpha2,
                    bc0: bc[..n].to_vec(),
                    bc_t: bc[n..].to_vec(),
                }
            })
    })
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
