use nlvg_core::math::Vec3;
use nlvg_core::{Reference, TrajectorySpec};
use proptest::prelude::*;

const H: f64 = 1e-5;

fn fd(r: &dyn Reference, t: f64) -> (Vec3, Vec3) {
    let (a, b, c) = (r.sample(t - H).pos, r.sample(t).pos, r.sample(t + H).pos);
    ((c - a) * (0.5 / H), (c - b * 2.0 + a) * (1.0 / (H * H)))
}

fn check(r: &dyn Reference, t: f64) -> Result<(), TestCaseError> {
    let s = r.sample(t);
    let (v, a) = fd(r, t);
    prop_assert!(
        (s.vel - v).norm() < 1e-6 * (1.0 + v.norm()),
        "vel {:?} vs {:?}",
        s.vel,
        v
    );
    prop_assert!(
        (s.acc - a).norm() < 1e-3 * (1.0 + a.norm()),
        "acc {:?} vs {:?}",
        s.acc,
        a
    );
    Ok(())
}

fn away_from(t: f64, joins: &[f64]) -> bool {
    joins.iter().all(|j| (t - j).abs() > 1e-3)
}

proptest! {
    #[test]
    fn lissajous_derivatives(t in 0.0f64..140.0, ax in 0.5f64..8.0, omega in 0.05f64..0.5, phase in -3.0f64..3.0) {
        let r = TrajectorySpec::Lissajous { ax, ay: 5.0, az: 2.0, a: 1.0, b: 2.0, c: 1.0, phase, omega, z0: 10.0 };
        check(&r, t)?;
    }

    #[test]
    fn storm_derivatives(t in 0.0f64..140.0, r0 in 0.0f64..3.0, rate in 0.0f64..0.2, climb in -0.05f64..0.05) {
        let r = TrajectorySpec::Storm { r0, radial_rate: rate, omega: 0.15, z0: 10.0, climb_rate: climb, t_takeoff: 20.0, ramp_time: 5.0 };
        prop_assume!(away_from(t, &[20.0, 25.0]));
        check(&r, t)?;
    }

    #[test]
    fn storm_is_continuous_at_phase_joins(r0 in 0.0f64..3.0, rate in 0.0f64..0.2) {
        let r = TrajectorySpec::Storm { r0, radial_rate: rate, omega: 0.15, z0: 10.0, climb_rate: 0.0, t_takeoff: 20.0, ramp_time: 5.0 };
        for j in [20.0, 25.0] {
            let gap = (r.sample(j - 1e-9).pos - r.sample(j + 1e-9).pos).norm();
            prop_assert!(gap < 1e-6, "gap {gap} at {j}");
        }
    }
}

#[test]
fn storm_starts_on_ground_and_ends_on_spiral() {
    let r = TrajectorySpec::default_storm();
    assert_eq!(r.sample(0.0).pos, Vec3::ZERO);
    let p = r.sample(140.0).pos;
    assert!((p.z - 10.0).abs() < 1e-12);
    let radius = (p.x * p.x + p.y * p.y).sqrt();
    assert!((radius - (1.0 + 0.05 * 115.0)).abs() < 1e-9);
}
