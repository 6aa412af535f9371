use lss_core::{
    integrate, member_seed, random_initial_state, restrict_to_coarse, FiniteDifferenceSystem,
    Lorenz63, TimeGrid,
};

fn decay() -> impl lss_core::DynamicalSystem {
    FiniteDifferenceSystem::new(
        "decay",
        1,
        0.0,
        |u: &[f64], _s: f64, out: &mut [f64]| out[0] = -u[0],
        |u: &[f64], _s: f64| u[0],
    )
}

fn order(coarse_err: f64, fine_err: f64) -> f64 {
    (coarse_err / fine_err).log2()
}

#[test]
fn rk4_is_fourth_order() {
    let sys = decay();
    let end_error = |dt: f64| {
        let grid = TimeGrid::from_horizon(dt, 4.0).unwrap();
        let traj = integrate(&sys, &[1.0], grid, 0.0, 0).unwrap();
        let k = grid.n_steps() as isize - 1;
        (traj.midpoint(k)[0] - (-grid.midpoint_time(k)).exp()).abs()
    };
    let p = order(end_error(0.2), end_error(0.1));
    assert!((p - 4.0).abs() < 0.3, "observed order {p}");
}

#[test]
fn node_velocity_is_second_order() {
    let sys = decay();
    let error = |dt: f64| {
        let grid = TimeGrid::from_horizon(dt, 2.0).unwrap();
        let traj = integrate(&sys, &[1.0], grid, 0.0, 0).unwrap();
        (0..=grid.n_steps())
            .map(|i| {
                let exact = -(-grid.node_time(i)).exp();
                (traj.node_velocity(i).unwrap().f[0] - exact).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let p = order(error(0.1), error(0.05));
    assert!((p - 2.0).abs() < 0.2, "observed order {p}");
}

#[test]
fn restriction_error_is_second_order_in_the_fine_step() {
    let sys = decay();
    let error = |dt: f64| {
        let grid = TimeGrid::from_horizon(dt, 2.0).unwrap();
        let traj = integrate(&sys, &[1.0], grid, 0.0, 0).unwrap();
        let coarse = restrict_to_coarse(&traj, 4).unwrap();
        let cg = coarse.grid();
        (0..cg.n_steps() as isize)
            .map(|k| (coarse.midpoint(k)[0] - (-cg.midpoint_time(k)).exp()).abs())
            .fold(0.0f64, f64::max)
    };
    let p = order(error(0.02), error(0.01));
    assert!((p - 2.0).abs() < 0.2, "observed order {p}");
}

#[test]
fn restriction_by_one_is_the_identity() {
    let sys = Lorenz63::default();
    let u0 = random_initial_state(&sys, 3).unwrap();
    let traj = integrate(&sys, &u0, TimeGrid::new(0.01, 40).unwrap(), 1.0, 3).unwrap();
    assert_eq!(restrict_to_coarse(&traj, 1).unwrap(), traj);
    assert!(restrict_to_coarse(&traj, 3).is_err());
    let coarse = restrict_to_coarse(&traj, 4).unwrap();
    assert_eq!(coarse.n_steps(), 10);
    assert_eq!(coarse.dt(), 0.04);
}

#[test]
fn same_seed_gives_bitwise_identical_trajectories() {
    let sys = Lorenz63::default();
    let seed = member_seed(42, 7);
    let run = || {
        let u0 = random_initial_state(&sys, seed).unwrap();
        integrate(&sys, &u0, TimeGrid::new(0.02, 100).unwrap(), 5.0, seed).unwrap()
    };
    assert_eq!(run().states(), run().states());
    assert_ne!(member_seed(42, 7), member_seed(42, 8));
    assert_ne!(
        random_initial_state(&sys, member_seed(42, 7)).unwrap(),
        random_initial_state(&sys, member_seed(42, 8)).unwrap()
    );
}

#[test]
fn blow_up_is_reported() {
    let sys = FiniteDifferenceSystem::new(
        "explosive",
        1,
        0.0,
        |u: &[f64], _s: f64, out: &mut [f64]| out[0] = u[0] * u[0],
        |u: &[f64], _s: f64| u[0],
    );
    assert!(integrate(&sys, &[1.0], TimeGrid::new(0.1, 30).unwrap(), 0.0, 0).is_err());
}
