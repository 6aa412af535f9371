//! Reduced (Schur-eliminated) solves against dense solves of the full,
//! un-eliminated equations.

mod common;

use common::dense::{dense_adjoint, to_na};
use common::{case, rel_diff, Case};
use lss_core::{
    adjoint_sensitivity, assemble_adjoint, assemble_forward, forward_sensitivity, min_eigenvalue,
    time_average, BlockTridiagonalMatrix, LssConfig, Mat, SchemeOrder,
};
use nalgebra::{DVector, SymmetricEigen};
use proptest::prelude::*;

fn check_reduced(c: &Case, scheme: SchemeOrder) -> Result<(), TestCaseError> {
    let dense = dense_adjoint(c, scheme);
    let cfg = LssConfig {
        alpha2: c.alpha2,
        scheme,
        bc0: c.bc0.clone(),
        bc_t: c.bc_t.clone(),
    };
    let jbar = time_average(&c.traj, &c.sys).unwrap();
    let sol = assemble_adjoint(&c.traj, &c.sys, &cfg, jbar)
        .unwrap()
        .solve()
        .unwrap();
    let res = adjoint_sensitivity(&sol, &c.traj, &c.sys).unwrap();
    prop_assert!(
        rel_diff(&sol.psi, &dense.psi) < 1e-10,
        "psi {:?} vs {:?}",
        sol.psi,
        dense.psi
    );
    prop_assert!(
        rel_diff(&sol.r, &dense.r) < 1e-10,
        "r {:?} vs {:?}",
        sol.r,
        dense.r
    );
    prop_assert!((res.djds - dense.djds).abs() < 1e-10 * dense.djds.abs().max(1.0));
    prop_assert!(sol.residual < 1e-10, "residual {}", sol.residual);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn second_order_elimination_matches_dense(c in case(4, 2..=6)) {
        check_reduced(&c, SchemeOrder::SecondOrder)?;
    }

    #[test]
    fn first_order_elimination_matches_dense(c in case(4, 2..=6)) {
        check_reduced(&c, SchemeOrder::FirstOrder)?;
    }

    #[test]
    fn forward_block_elimination_matches_dense(c in case(4, 2..=6), first in any::<bool>()) {
        let scheme = if first { SchemeOrder::FirstOrder } else { SchemeOrder::SecondOrder };
        let cfg = LssConfig::homogeneous(c.sys.n, c.alpha2, scheme);
        let kkt = assemble_forward(&c.traj, &c.sys, &cfg).unwrap();
        let sol = kkt.solve().unwrap();
        let x = to_na(&kkt.to_dense()).lu().solve(&DVector::from_vec(kkt.dense_rhs())).unwrap();
        let (n, ns) = (c.sys.n, c.traj.n_steps());
        let mut ours = sol.v.clone();
        ours.extend(&sol.eta[1..ns]);
        ours.extend(&sol.w[n..ns * n]);
        prop_assert_eq!(ours.len(), x.len());
        prop_assert!(rel_diff(&ours, x.as_slice()) < 1e-10);
    }

    #[test]
    fn forward_and_adjoint_sensitivities_agree(c in case(4, 2..=40), first in any::<bool>()) {
        let scheme = if first { SchemeOrder::FirstOrder } else { SchemeOrder::SecondOrder };
        let cfg = LssConfig::homogeneous(c.sys.n, c.alpha2, scheme);
        let jbar = time_average(&c.traj, &c.sys).unwrap();
        let psi = assemble_adjoint(&c.traj, &c.sys, &cfg, jbar).unwrap().solve().unwrap();
        let adj = adjoint_sensitivity(&psi, &c.traj, &c.sys).unwrap().djds;
        let fsol = assemble_forward(&c.traj, &c.sys, &cfg).unwrap().solve().unwrap();
        let fwd = forward_sensitivity(&fsol, &c.traj, &c.sys, jbar).unwrap().djds;
        prop_assert!((adj - fwd).abs() < 1e-8 * adj.abs().max(1.0), "{adj} vs {fwd}");
    }

    #[test]
    fn inverse_iteration_matches_dense_eigensolver(
        (n, blocks, lower, shift) in (1usize..=4, 1usize..=8).prop_flat_map(|(n, m)| (
            Just(n),
            Just(m),
            prop::collection::vec(-1.0f64..1.0, (2 * m) * n * n),
            0.05f64..1.0,
        ))
    ) {
        // M = B Bᵀ + shift·I with B block lower bidiagonal is SPD block tridiagonal
        let blk = |k: usize| Mat::from_row_slice(n, n, &lower[k * n * n..(k + 1) * n * n]);
        let diag_b: Vec<Mat> = (0..blocks).map(blk).collect();
        let sub_b: Vec<Mat> = (0..blocks).map(|k| blk(blocks + k)).collect();
        let diag: Vec<Mat> = (0..blocks).map(|i| {
            let mut d = diag_b[i].matmul(&diag_b[i].transpose());
            if i > 0 {
                d.add_assign(&sub_b[i].matmul(&sub_b[i].transpose()));
            }
            d.add_assign(&Mat::identity(n).scaled(shift));
            d
        }).collect();
        let sub: Vec<Mat> = (1..blocks).map(|i| sub_b[i].matmul(&diag_b[i - 1].transpose())).collect();
        let m = BlockTridiagonalMatrix::new(diag, sub).unwrap();
        let dense = to_na(&m.to_dense());
        let exact = SymmetricEigen::new(dense).eigenvalues.min();
        let est = min_eigenvalue(&m, 1e-8).unwrap();
        prop_assert!((est.lambda - exact).abs() < 1e-8 * exact.max(1.0), "{} vs {exact}", est.lambda);
    }
}
