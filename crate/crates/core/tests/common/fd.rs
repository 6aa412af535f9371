//! Central-difference checks of the analytic derivatives.

use lss_core::{eval_f, eval_f_s, eval_j, eval_j_s, eval_j_u, eval_jacobian, DynamicalSystem};
use proptest::prelude::*;

pub const REL_TOL: f64 = 1e-6;

fn rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = analytic.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let diff = analytic
        .iter()
        .zip(fd)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}

fn step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

pub fn box_state(sys: &dyn DynamicalSystem, unit: &[f64]) -> Vec<f64> {
    sys.bounding_box()
        .expect("built-in systems declare a box")
        .iter()
        .zip(unit)
        .map(|(&(lo, hi), t)| lo + (hi - lo) * t)
        .collect()
}

/// Checks f_u, f_s, J_u and J_s at `u` against central differences.
pub fn check_derivatives(sys: &dyn DynamicalSystem, u: &[f64]) -> Result<(), TestCaseError> {
    let n = sys.dim();
    let s = sys.param();

    let jac = eval_jacobian(sys, u, s).unwrap();
    let j_u = eval_j_u(sys, u, s).unwrap();
    let mut fd_jac = vec![0.0; n * n];
    let mut fd_ju = vec![0.0; n];
    for c in 0..n {
        let h = step(u[c]);
        let (mut up, mut dn) = (u.to_vec(), u.to_vec());
        up[c] += h;
        dn[c] -= h;
        let (fp, fm) = (eval_f(sys, &up, s).unwrap(), eval_f(sys, &dn, s).unwrap());
        for r in 0..n {
            fd_jac[r * n + c] = (fp[r] - fm[r]) / (2.0 * h);
        }
        fd_ju[c] = (eval_j(sys, &up, s).unwrap() - eval_j(sys, &dn, s).unwrap()) / (2.0 * h);
    }
    let e = rel_err(jac.as_slice(), &fd_jac);
    prop_assert!(e < REL_TOL, "{} f_u rel err {e:e} at {u:?}", sys.name());
    let e = rel_err(&j_u, &fd_ju);
    prop_assert!(e < REL_TOL, "{} J_u rel err {e:e} at {u:?}", sys.name());

    let h = step(s);
    let fp = eval_f(sys, u, s + h).unwrap();
    let fm = eval_f(sys, u, s - h).unwrap();
    let fd_fs: Vec<f64> = fp
        .iter()
        .zip(&fm)
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    let e = rel_err(&eval_f_s(sys, u, s).unwrap(), &fd_fs);
    prop_assert!(e < REL_TOL, "{} f_s rel err {e:e} at {u:?}", sys.name());

    let fd_js = (eval_j(sys, u, s + h).unwrap() - eval_j(sys, u, s - h).unwrap()) / (2.0 * h);
    let e = rel_err(&[eval_j_s(sys, u, s).unwrap()], &[fd_js]);
    prop_assert!(e < REL_TOL, "{} J_s rel err {e:e} at {u:?}", sys.name());
    Ok(())
}
