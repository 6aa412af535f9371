use std::path::Path;

use lss::io::{parse_lh, parse_trajectory, write_lh, write_trajectory};
use lss_core::{BlockTridiagonalMatrix, Mat, TimeGrid, Trajectory};
use proptest::prelude::*;

fn any_float() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..1e3,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

fn trajectory() -> impl Strategy<Value = Trajectory> {
    (
        1usize..5,
        2usize..12,
        1e-4f64..0.5,
        any::<u64>(),
        -5.0f64..5.0,
    )
        .prop_flat_map(|(dim, n, dt, seed, s)| {
            prop::collection::vec(any_float(), dim * (n + 2)).prop_map(move |states| {
                let grid = TimeGrid::new(dt, n).unwrap();
                Trajectory::from_midpoints("any", s, seed, grid, dim, states).unwrap()
            })
        })
}

fn block_tridiagonal() -> impl Strategy<Value = BlockTridiagonalMatrix> {
    (1usize..4, 1usize..6).prop_flat_map(|(n, m)| {
        let block = move || {
            prop::collection::vec(any_float(), n * n)
                .prop_map(move |d| Mat::from_row_slice(n, n, &d))
        };
        (
            prop::collection::vec(block(), m),
            prop::collection::vec(block(), m - 1),
        )
            .prop_map(|(diag, sub)| BlockTridiagonalMatrix::new(diag, sub).unwrap())
    })
}

proptest! {
    #[test]
    fn trajectory_text_reads_back_exactly(traj in trajectory()) {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        prop_assert_eq!(parse_trajectory(&text, Path::new("t.csv")).unwrap(), traj);
    }

    #[test]
    fn lh_dump_reads_back_exactly(m in block_tridiagonal()) {
        let mut buf = Vec::new();
        write_lh(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        prop_assert_eq!(parse_lh(&text, Path::new("lh.txt")).unwrap(), m);
    }

    #[test]
    fn truncated_trajectory_is_rejected(traj in trajectory(), cut in 1usize..4) {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let keep = lines.len().saturating_sub(cut).max(7);
        prop_assume!(keep < lines.len());
        prop_assert!(parse_trajectory(&lines[..keep].join("\n"), Path::new("t.csv")).is_err());
    }
}
