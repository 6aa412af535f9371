//! Dense solve of the full, un-eliminated adjoint equations built directly
//! from the difference stencils.

use lss_core::{eval_f_s, eval_j, eval_j_s, eval_j_u, eval_jacobian, Mat, SchemeOrder};
use nalgebra::{DMatrix, DVector};

use super::Case;

pub struct Dense {
    pub psi: Vec<f64>,
    pub r: Vec<f64>,
    pub djds: f64,
}

pub fn to_na(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn dense_adjoint(c: &Case, scheme: SchemeOrder) -> Dense {
    let (sys, traj) = (&c.sys, &c.traj);
    let (n, big_n, dt, s) = (sys.n, traj.n_steps(), traj.dt(), traj.param());
    let mid = |k: usize| traj.midpoint(k as isize).to_vec();
    // midpoint k + 1/2 for k = -1..=N lives at mid_at(k + 1)
    let mid_at = |k1: usize| traj.midpoint(k1 as isize - 1).to_vec();
    let node = |i: usize| -> Vec<f64> {
        mid_at(i)
            .iter()
            .zip(mid_at(i + 1))
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    };
    let f_node = |i: usize| -> DVector<f64> {
        DVector::from_iterator(
            n,
            mid_at(i + 1)
                .iter()
                .zip(mid_at(i))
                .map(|(a, b)| (a - b) / dt),
        )
    };
    let j_avg = |i: usize| {
        0.5 * (eval_j(sys, &mid_at(i), s).unwrap() + eval_j(sys, &mid_at(i + 1), s).unwrap())
    };
    let mut jbar = 0.5 * (j_avg(0) + j_avg(big_n));
    for i in 1..big_n {
        jbar += j_avg(i);
    }
    jbar /= big_n as f64;

    let id = DMatrix::<f64>::identity(n, n);
    let r_rows = match scheme {
        SchemeOrder::SecondOrder => big_n,
        SchemeOrder::FirstOrder => big_n + 1,
    };
    let n_psi = (big_n - 1) * n;
    let dim = n_psi + r_rows * n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let bc = |j: usize| -> Option<DVector<f64>> {
        if j == 0 {
            Some(DVector::from_column_slice(&c.bc0))
        } else if j == big_n {
            Some(DVector::from_column_slice(&c.bc_t))
        } else {
            None
        }
    };
    // coefficient `blk` on ψ_j in equation row block `row`
    let put_psi =
        |m: &mut DMatrix<f64>, rhs: &mut DVector<f64>, row: usize, j: usize, blk: &DMatrix<f64>| {
            match bc(j) {
                Some(v) => {
                    let mut seg = rhs.rows_mut(row, n);
                    seg -= blk * v;
                }
                None => m.view_mut((row, (j - 1) * n), (n, n)).copy_from(blk),
            }
        };
    let r_col = |k: usize| n_psi + k * n;

    let mut eq = 0;
    for k in 0..big_n {
        let row = eq * n;
        let (p, q, ju) = match scheme {
            SchemeOrder::SecondOrder => {
                let f = to_na(&eval_jacobian(sys, &mid(k), s).unwrap());
                (
                    &id * (-1.0 / dt) + f.transpose() * 0.5,
                    &id * (1.0 / dt) + f.transpose() * 0.5,
                    eval_j_u(sys, &mid(k), s).unwrap(),
                )
            }
            SchemeOrder::FirstOrder => {
                let f = to_na(&eval_jacobian(sys, &node(k), s).unwrap());
                (
                    &id * (-1.0 / dt) + f.transpose(),
                    &id * (1.0 / dt),
                    eval_j_u(sys, &node(k), s).unwrap(),
                )
            }
        };
        put_psi(&mut m, &mut rhs, row, k, &p);
        put_psi(&mut m, &mut rhs, row, k + 1, &q);
        m.view_mut((row, r_col(k)), (n, n)).copy_from(&(-&id));
        let mut seg = rhs.rows_mut(row, n);
        seg -= DVector::from_column_slice(&ju);
        eq += 1;
    }
    let last = match scheme {
        SchemeOrder::SecondOrder => big_n - 1,
        SchemeOrder::FirstOrder => big_n,
    };
    for i in 1..=last {
        let row = eq * n;
        let f = f_node(i);
        let (cur, prev, j_i) = match scheme {
            SchemeOrder::SecondOrder => {
                let fa = to_na(&eval_jacobian(sys, &mid(i), s).unwrap());
                let fb = to_na(&eval_jacobian(sys, &mid(i - 1), s).unwrap());
                (
                    &id * (1.0 / dt) - fa * 0.5,
                    &id * (-1.0 / dt) - fb * 0.5,
                    j_avg(i),
                )
            }
            SchemeOrder::FirstOrder => {
                let fa = to_na(&eval_jacobian(sys, &node(i), s).unwrap());
                (
                    &id * (1.0 / dt) - fa,
                    &id * (-1.0 / dt),
                    eval_j(sys, &node(i), s).unwrap(),
                )
            }
        };
        m.view_mut((row, r_col(i)), (n, n)).copy_from(&cur);
        m.view_mut((row, r_col(i - 1)), (n, n)).copy_from(&prev);
        let ff = &f * f.transpose() * (-1.0 / c.alpha2);
        put_psi(&mut m, &mut rhs, row, i, &ff);
        let mut seg = rhs.rows_mut(row, n);
        seg += &f * ((j_i - jbar) / c.alpha2);
        eq += 1;
    }
    assert_eq!(eq * n, dim);

    let x = m.lu().solve(&rhs).expect("dense system is singular");
    let mut psi = c.bc0.clone();
    psi.extend(x.rows(0, n_psi).iter());
    psi.extend(&c.bc_t);
    let r: Vec<f64> = x.rows(n_psi, r_rows * n).iter().copied().collect();

    let mut djds = 0.0;
    for k in 0..big_n {
        let fs = eval_f_s(sys, &mid(k), s).unwrap();
        for d in 0..n {
            djds += 0.5 * (psi[k * n + d] + psi[(k + 1) * n + d]) * fs[d];
        }
        djds += eval_j_s(sys, &mid(k), s).unwrap();
    }
    Dense {
        psi,
        r,
        djds: djds / big_n as f64,
    }
}
