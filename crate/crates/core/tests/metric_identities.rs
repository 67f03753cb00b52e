use nlvg_core::control::Channel;
use nlvg_core::metrics::ChannelMetrics;
use nlvg_core::{iae, itae, itse, ErrorSeries};
use proptest::prelude::*;

fn series(f: impl Fn(f64) -> f64, dt: f64, t_end: f64) -> ErrorSeries {
    let n = (t_end / dt).round() as usize;
    ErrorSeries::new(
        Channel::Phi,
        dt,
        (0..=n).map(|k| f(k as f64 * dt)).collect(),
    )
    .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn closed_forms() {
    let t = 2.0;
    let c = series(|_| -1.5, 1e-3, t);
    assert!(close(iae(&c, t).unwrap(), 1.5, 1e-12));
    assert!(close(itae(&c, t).unwrap(), 1.5 * t / 2.0, 1e-12));
    assert!(close(itse(&c, t).unwrap(), 2.25 * t / 2.0, 1e-12));

    let q = series(|x| x * x, 1e-4, t);
    // ∫t²=T³/3, ∫t³=T⁴/4, ∫t⁵=T⁶/6, all over T
    assert!(close(iae(&q, t).unwrap(), t * t / 3.0, 1e-6));
    assert!(close(itae(&q, t).unwrap(), t.powi(3) / 4.0, 1e-6));
    assert!(close(itse(&q, t).unwrap(), t.powi(5) / 6.0, 1e-6));
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 2..300)
}

proptest! {
    #[test]
    fn homogeneity(v in samples(), c in -5.0f64..5.0, dt in 0.001f64..0.1) {
        let s = ErrorSeries::new(Channel::X, dt, v).unwrap();
        let t = s.duration();
        let k = s.scaled(c);
        let m = ChannelMetrics::compute(&s, t).unwrap();
        let mk = ChannelMetrics::compute(&k, t).unwrap();
        prop_assert!(close(mk.iae, c.abs() * m.iae, 1e-12));
        prop_assert!(close(mk.itae, c.abs() * m.itae, 1e-12));
        prop_assert!(close(mk.itse, c * c * m.itse, 1e-12));
    }

    #[test]
    fn sign_invariant_and_nonnegative(v in samples(), dt in 0.001f64..0.1) {
        let s = ErrorSeries::new(Channel::Z, dt, v).unwrap();
        let t = s.duration();
        let m = ChannelMetrics::compute(&s, t).unwrap();
        let n = ChannelMetrics::compute(&s.scaled(-1.0), t).unwrap();
        prop_assert!(m.iae >= 0.0 && m.itae >= 0.0 && m.itse >= 0.0);
        prop_assert_eq!(m, n);
    }

    #[test]
    fn iae_is_additive_for_same_sign(v in prop::collection::vec(0.0f64..10.0, 2..200),
                                     w in prop::collection::vec(0.0f64..10.0, 200)) {
        let dt = 0.01;
        let a = ErrorSeries::new(Channel::Y, dt, v.clone()).unwrap();
        let b = ErrorSeries::new(Channel::Y, dt, w[..v.len()].to_vec()).unwrap();
        let sum: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x + y).collect();
        let ab = ErrorSeries::new(Channel::Y, dt, sum).unwrap();
        let t = a.duration();
        prop_assert!(close(iae(&ab, t).unwrap(), iae(&a, t).unwrap() + iae(&b, t).unwrap(), 1e-12));
        prop_assert!(close(itae(&ab, t).unwrap(), itae(&a, t).unwrap() + itae(&b, t).unwrap(), 1e-12));
    }

    #[test]
    fn zero_iff_zero(v in samples(), dt in 0.001f64..0.1) {
        let s = ErrorSeries::new(Channel::Psi, dt, v.clone()).unwrap();
        let t = s.duration();
        let zero = v.iter().all(|x| *x == 0.0);
        prop_assert_eq!(iae(&s, t).unwrap() == 0.0, zero);
    }
}
