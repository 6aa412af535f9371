//! Autonomous ODE systems `du/dt = f(u, s)` with a scalar design parameter `s`
//! and an instantaneous output `J(u, s)` whose long-time average is the
//! quantity of interest.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::Mat;
use crate::{LssError, Result};

/// Right-hand side, output and their analytic derivatives at a fixed
/// parameter value.
///
/// Implementations must be pure functions of `(u, s)`; the methods may be
/// called concurrently from several threads. The unchecked methods assume
/// `u.len() == self.dim()` and correctly sized outputs; use the `eval_*`
/// functions for checked access.
pub trait DynamicalSystem: Sync {
    /// Short identifier used in file headers and tables.
    fn name(&self) -> &str;

    /// Phase-space dimension `n`.
    fn dim(&self) -> usize;

    /// Nominal value of the design parameter `s`.
    fn param(&self) -> f64;

    /// `f(u, s)`
    fn rhs(&self, u: &[f64], s: f64, out: &mut [f64]);

    /// `∂f/∂u`, entry `(i, j) = ∂f_i/∂u_j`.
    fn jacobian(&self, u: &[f64], s: f64, out: &mut Mat);

    /// `∂f/∂s`
    fn rhs_param(&self, u: &[f64], s: f64, out: &mut [f64]);

    /// `J(u, s)`
    fn functional(&self, u: &[f64], s: f64) -> f64;

    /// `∂J/∂u`
    fn functional_grad(&self, u: &[f64], s: f64, out: &mut [f64]);

    /// `∂J/∂s`
    fn functional_param(&self, u: &[f64], s: f64) -> f64;

    /// Box `[lo, hi]` per coordinate enclosing the attractor; random initial
    /// states are drawn from it.
    fn bounding_box(&self) -> Option<&[(f64, f64)]> {
        None
    }

    /// Spin-up time discarded before the averaging window.
    fn default_spin_up(&self) -> f64 {
        0.0
    }

    /// Exact `dJ̄/ds`, when it is known analytically.
    fn true_sensitivity(&self) -> Option<f64> {
        None
    }
}

fn check_dim(sys: &dyn DynamicalSystem, u: &[f64]) -> Result<()> {
    if u.len() != sys.dim() {
        return Err(LssError::DimensionMismatch {
            expected: sys.dim(),
            found: u.len(),
        });
    }
    Ok(())
}

pub fn eval_f(sys: &dyn DynamicalSystem, u: &[f64], s: f64) -> Result<Vec<f64>> {
    check_dim(sys, u)?;
    let mut out = vec![0.0; sys.dim()];
    sys.rhs(u, s, &mut out);
    Ok(out)
}

pub fn eval_jacobian(sys: &dyn DynamicalSystem, u: &[f64], s: f64) -> Result<Mat> {
    check_dim(sys, u)?;
    let mut out = Mat::zeros(sys.dim(), sys.dim());
    sys.jacobian(u, s, &mut out);
    Ok(out)
}

pub fn eval_f_s(sys: &dyn DynamicalSystem, u: &[f64], s: f64) -> Result<Vec<f64>> {
    check_dim(sys, u)?;
    let mut out = vec![0.0; sys.dim()];
    sys.rhs_param(u, s, &mut out);
    Ok(out)
}

pub fn eval_j(sys: &dyn DynamicalSystem, u: &[f64], s: f64) -> Result<f64> {
    check_dim(sys, u)?;
    Ok(sys.functional(u, s))
}

pub fn eval_j_u(sys: &dyn DynamicalSystem, u: &[f64], s: f64) -> Result<Vec<f64>> {
    check_dim(sys, u)?;
    let mut out = vec![0.0; sys.dim()];
    sys.functional_grad(u, s, &mut out);
    Ok(out)
}

pub fn eval_j_s(sys: &dyn DynamicalSystem, u: &[f64], s: f64) -> Result<f64> {
    check_dim(sys, u)?;
    Ok(sys.functional_param(u, s))
}

const LORENZ_BOX: [(f64, f64); 3] = [(-20.0, 20.0), (-25.0, 25.0), (-5.0, 45.0)];

/// Lorenz 63 with the attractor shifted by `z0` along the z-axis:
///
/// ```text
/// ẋ = σ (y − x)
/// ẏ = x (ρ − (z − z0)) − y
/// ż = x y − β (z − z0)
/// ```
///
/// The design parameter is `z0` and the output is `J = z`. Shifting `z0`
/// translates the whole attractor, so `dJ̄/dz0 = 1` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz63 {
    pub sigma: f64,
    pub beta: f64,
    pub rho: f64,
    pub z0: f64,
}

impl Default for Lorenz63 {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            beta: 8.0 / 3.0,
            rho: 25.0,
            z0: 0.0,
        }
    }
}

impl DynamicalSystem for Lorenz63 {
    fn name(&self) -> &str {
        "lorenz63"
    }

    fn dim(&self) -> usize {
        3
    }

    fn param(&self) -> f64 {
        self.z0
    }

    fn rhs(&self, u: &[f64], z0: f64, out: &mut [f64]) {
        let (x, y, z) = (u[0], u[1], u[2] - z0);
        out[0] = self.sigma * (y - x);
        out[1] = x * (self.rho - z) - y;
        out[2] = x * y - self.beta * z;
    }

    fn jacobian(&self, u: &[f64], z0: f64, out: &mut Mat) {
        let (x, y, z) = (u[0], u[1], u[2] - z0);
        let rows = [
            [-self.sigma, self.sigma, 0.0],
            [self.rho - z, -1.0, -x],
            [y, x, -self.beta],
        ];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
    }

    fn rhs_param(&self, u: &[f64], _z0: f64, out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = u[0];
        out[2] = self.beta;
    }

    fn functional(&self, u: &[f64], _z0: f64) -> f64 {
        u[2]
    }

    fn functional_grad(&self, _u: &[f64], _z0: f64, out: &mut [f64]) {
        out.copy_from_slice(&[0.0, 0.0, 1.0]);
    }

    fn functional_param(&self, _u: &[f64], _z0: f64) -> f64 {
        0.0
    }

    fn bounding_box(&self) -> Option<&[(f64, f64)]> {
        Some(&LORENZ_BOX)
    }

    fn default_spin_up(&self) -> f64 {
        50.0
    }

    fn true_sensitivity(&self) -> Option<f64> {
        Some(1.0)
    }
}

const OSCILLATOR_BOX: [(f64, f64); 4] = [(-2.0, 2.0); 4];

/// Kuznetsov–Pikovsky "model A" pair of coupled van der Pol-type
/// oscillators, a numerically hyperbolic flow on `(x₁, y₁, x₂, y₂)`:
///
/// ```text
/// ẋ₁ =  ω₀ y₁ + (1 − a₂ + a₁/2 − a₁²/50) x₁ + ε (x₂ − s) y₂
/// ẏ₁ = −ω₀ x₁ + (1 − a₂ + a₁/2 − a₁²/50) y₁
/// ẋ₂ =  ω₀ y₂ + (a₁ − 1)(x₂ − s) + ε x₁
/// ẏ₂ = −ω₀ (x₂ − s) + (a₁ − 1) y₂
/// ```
///
/// with `a₁ = x₁² + y₁²`, `a₂ = (x₂ − s)² + y₂²`. The output is `J = x₂`;
/// `s` shifts the attractor along `x₂`, so `dJ̄/ds = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledOscillator {
    pub omega0: f64,
    pub eps: f64,
    pub s: f64,
}

impl Default for CoupledOscillator {
    fn default() -> Self {
        Self {
            omega0: 2.0 * PI,
            eps: 0.3,
            s: 0.0,
        }
    }
}

impl DynamicalSystem for CoupledOscillator {
    fn name(&self) -> &str {
        "oscillator"
    }

    fn dim(&self) -> usize {
        4
    }

    fn param(&self) -> f64 {
        self.s
    }

    fn rhs(&self, u: &[f64], s: f64, out: &mut [f64]) {
        let (x1, y1, x2, y2) = (u[0], u[1], u[2] - s, u[3]);
        let a1 = x1 * x1 + y1 * y1;
        let a2 = x2 * x2 + y2 * y2;
        let g1 = 1.0 - a2 + 0.5 * a1 - a1 * a1 / 50.0;
        let g2 = a1 - 1.0;
        let w = self.omega0;
        out[0] = w * y1 + g1 * x1 + self.eps * x2 * y2;
        out[1] = -w * x1 + g1 * y1;
        out[2] = w * y2 + g2 * x2 + self.eps * x1;
        out[3] = -w * x2 + g2 * y2;
    }

    fn jacobian(&self, u: &[f64], s: f64, out: &mut Mat) {
        let (x1, y1, x2, y2) = (u[0], u[1], u[2] - s, u[3]);
        let a1 = x1 * x1 + y1 * y1;
        let a2 = x2 * x2 + y2 * y2;
        let g1 = 1.0 - a2 + 0.5 * a1 - a1 * a1 / 50.0;
        let g2 = a1 - 1.0;
        // ∂g1/∂(x1, y1) and ∂g1/∂(x2, y2)
        let dg1_da1 = 0.5 - a1 / 25.0;
        let (g1_x1, g1_y1) = (2.0 * x1 * dg1_da1, 2.0 * y1 * dg1_da1);
        let (g1_x2, g1_y2) = (-2.0 * x2, -2.0 * y2);
        let (g2_x1, g2_y1) = (2.0 * x1, 2.0 * y1);
        let (w, e) = (self.omega0, self.eps);
        let rows = [
            [
                g1 + g1_x1 * x1,
                w + g1_y1 * x1,
                g1_x2 * x1 + e * y2,
                g1_y2 * x1 + e * x2,
            ],
            [-w + g1_x1 * y1, g1 + g1_y1 * y1, g1_x2 * y1, g1_y2 * y1],
            [g2_x1 * x2 + e, g2_y1 * x2, g2, w],
            [g2_x1 * y2, g2_y1 * y2, -w, g2],
        ];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
    }

    fn rhs_param(&self, u: &[f64], s: f64, out: &mut [f64]) {
        let (x1, y1, x2, y2) = (u[0], u[1], u[2] - s, u[3]);
        let a1 = x1 * x1 + y1 * y1;
        // d/ds of every (x2 - s) occurrence, including through a2
        out[0] = 2.0 * x2 * x1 - self.eps * y2;
        out[1] = 2.0 * x2 * y1;
        out[2] = -(a1 - 1.0);
        out[3] = self.omega0;
    }

    fn functional(&self, u: &[f64], _s: f64) -> f64 {
        u[2]
    }

    fn functional_grad(&self, _u: &[f64], _s: f64, out: &mut [f64]) {
        out.copy_from_slice(&[0.0, 0.0, 1.0, 0.0]);
    }

    fn functional_param(&self, _u: &[f64], _s: f64) -> f64 {
        0.0
    }

    fn bounding_box(&self) -> Option<&[(f64, f64)]> {
        Some(&OSCILLATOR_BOX)
    }

    fn default_spin_up(&self) -> f64 {
        100.0
    }

    fn true_sensitivity(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Wraps user-supplied `f` and `J` and differentiates them with central
/// differences (`h = 1e-5 · max(1, |x|)` per coordinate). Meant for
/// prototyping; derivative accuracy caps the sensitivity accuracy.
pub struct FiniteDifferenceSystem<F, G> {
    name: String,
    dim: usize,
    param: f64,
    f: F,
    j: G,
    bounding_box: Option<Vec<(f64, f64)>>,
    spin_up: f64,
    true_sensitivity: Option<f64>,
}

impl<F, G> FiniteDifferenceSystem<F, G>
where
    F: Fn(&[f64], f64, &mut [f64]) + Sync,
    G: Fn(&[f64], f64) -> f64 + Sync,
{
    pub fn new(name: impl Into<String>, dim: usize, param: f64, f: F, j: G) -> Self {
        Self {
            name: name.into(),
            dim,
            param,
            f,
            j,
            bounding_box: None,
            spin_up: 0.0,
            true_sensitivity: None,
        }
    }

    pub fn with_bounding_box(mut self, bbox: Vec<(f64, f64)>) -> Self {
        self.bounding_box = Some(bbox);
        self
    }

    pub fn with_spin_up(mut self, spin_up: f64) -> Self {
        self.spin_up = spin_up;
        self
    }

    pub fn with_true_sensitivity(mut self, value: f64) -> Self {
        self.true_sensitivity = Some(value);
        self
    }
}

#[inline]
fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

impl<F, G> DynamicalSystem for FiniteDifferenceSystem<F, G>
where
    F: Fn(&[f64], f64, &mut [f64]) + Sync,
    G: Fn(&[f64], f64) -> f64 + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn param(&self) -> f64 {
        self.param
    }

    fn rhs(&self, u: &[f64], s: f64, out: &mut [f64]) {
        (self.f)(u, s, out)
    }

    fn jacobian(&self, u: &[f64], s: f64, out: &mut Mat) {
        let n = self.dim;
        let mut up = u.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for j in 0..n {
            let h = fd_step(u[j]);
            up[j] = u[j] + h;
            (self.f)(&up, s, &mut fp);
            up[j] = u[j] - h;
            (self.f)(&up, s, &mut fm);
            up[j] = u[j];
            for i in 0..n {
                out[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
    }

    fn rhs_param(&self, u: &[f64], s: f64, out: &mut [f64]) {
        let h = fd_step(s);
        let mut fm = vec![0.0; self.dim];
        (self.f)(u, s + h, out);
        (self.f)(u, s - h, &mut fm);
        for (o, m) in out.iter_mut().zip(&fm) {
            *o = (*o - m) / (2.0 * h);
        }
    }

    fn functional(&self, u: &[f64], s: f64) -> f64 {
        (self.j)(u, s)
    }

    fn functional_grad(&self, u: &[f64], s: f64, out: &mut [f64]) {
        let mut up = u.to_vec();
        for j in 0..self.dim {
            let h = fd_step(u[j]);
            up[j] = u[j] + h;
            let jp = (self.j)(&up, s);
            up[j] = u[j] - h;
            let jm = (self.j)(&up, s);
            up[j] = u[j];
            out[j] = (jp - jm) / (2.0 * h);
        }
    }

    fn functional_param(&self, u: &[f64], s: f64) -> f64 {
        let h = fd_step(s);
        ((self.j)(u, s + h) - (self.j)(u, s - h)) / (2.0 * h)
    }

    fn bounding_box(&self) -> Option<&[(f64, f64)]> {
        self.bounding_box.as_deref()
    }

    fn default_spin_up(&self) -> f64 {
        self.spin_up
    }

    fn true_sensitivity(&self) -> Option<f64> {
        self.true_sensitivity
    }
}
