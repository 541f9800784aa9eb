use std::f64::consts::PI;

use nvsat::quadrature::{integrate_finite, integrate_oscillatory_tail, Oscillation};
use nvsat::specfun::{dilog, hyp2f3_half, sine_integral};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn si_is_odd(x in -200.0f64..200.0) {
        prop_assert_eq!(sine_integral(-x), -sine_integral(x));
    }
}

proptest! {
    #[test]
    fn si_derivative_is_sinc(x in 0.1f64..50.0) {
        let h = 1e-4;
        let d = (sine_integral(x + h) - sine_integral(x - h)) / (2.0 * h);
        prop_assert!((d - x.sin() / x).abs() < 1e-6, "x = {x}: {d}");
    }

    #[test]
    fn dilog_duplication(x in 0.001f64..0.999) {
        let lhs = dilog(x).unwrap() + dilog(-x).unwrap();
        let rhs = 0.5 * dilog(x * x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }
}

#[test]
fn hyp2f3_is_one_at_origin_and_decreasing_on_the_left() {
    assert_eq!(hyp2f3_half(0.0).unwrap(), 1.0);
    let values: Vec<f64> = (0..=200)
        .map(|i| hyp2f3_half(-10.0 + 0.05 * i as f64).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sinc_squared_tail_identity() {
    for x in [0.5, 1.0, 5.0, 20.0] {
        // Split at 40 so the oscillatory routine sees a smooth envelope.
        let split = 40.0f64.max(x);
        let body = integrate_finite(|s: f64| (s.sin() / s).powi(2), x, split, 1e-12, &[]).unwrap();
        let tail = integrate_oscillatory_tail(
            |s: f64| 1.0 / (s * s),
            Oscillation::SinSquared(1.0),
            split,
            1e-12,
        )
        .unwrap();
        let numeric = body.value + tail.value;
        let closed = x.sin().powi(2) / x + PI / 2.0 - sine_integral(2.0 * x);
        assert!(
            (numeric - closed).abs() < 1e-8,
            "x = {x}: {numeric} vs {closed}"
        );
    }
}
