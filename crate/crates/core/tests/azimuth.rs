use binsynth::azimuth::{AzimuthStateMatrix, BinTrajectory, DEFAULT_SIGMA, D_TIME, L_AZI};
use proptest::prelude::*;

fn integer_trajectory() -> impl Strategy<Value = BinTrajectory> {
    (1u32..=64, 1u32..=64, 0usize..D_TIME, 0usize..D_TIME).prop_map(|(a, b, t0, t)| BinTrajectory {
        mu_start: a as f64,
        mu_end: b as f64,
        t0,
        t: t.min(D_TIME - t0),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With integer centers the coarse peak sits on the fine one-hot bin.
    #[test]
    fn coarse_argmax_matches_fine(traj in integer_trajectory()) {
        let still = BinTrajectory { t: 0, t0: 0, mu_end: traj.mu_start, ..traj };
        for tr in [traj, still] {
            let coarse = AzimuthStateMatrix::coarse(&[tr], D_TIME, DEFAULT_SIGMA).unwrap();
            let fine = AzimuthStateMatrix::fine(&[tr], D_TIME).unwrap();
            for t in (0..D_TIME).step_by(7) {
                if tr.center(t).fract() == 0.0 {
                    prop_assert_eq!(coarse.argmax(0, t), fine.argmax(0, t));
                }
            }
        }
    }

    /// Mirroring the trajectory mirrors the coarse matrix bin for bin.
    #[test]
    fn reflection_mirrors_columns(a in 1u32..=64, t0 in 0usize..D_TIME) {
        let tr = BinTrajectory { mu_start: a as f64, mu_end: (65 - a) as f64, t0, t: 0 };
        let m = AzimuthStateMatrix::coarse(&[tr], D_TIME, DEFAULT_SIGMA).unwrap();
        let r = AzimuthStateMatrix::coarse(&[tr.reflected()], D_TIME, DEFAULT_SIGMA).unwrap();
        for t in [0, t0, D_TIME - 1] {
            for l in 1..=L_AZI {
                prop_assert!((m.at(0, l, t) - r.at(0, L_AZI + 1 - l, t)).abs() < 1e-15);
            }
        }
    }
}
