use std::f64::consts::{E, PI};

use nvsat::quadrature::{
    integrate_finite, integrate_finite_with, QuadratureError, QuadratureOptions,
};
use proptest::prelude::*;

type Case = (&'static str, fn(f64) -> f64, f64, f64, f64, &'static [f64]);

fn suite() -> Vec<Case> {
    vec![
        ("x^2", |x| x * x, 0.0, 1.0, 1.0 / 3.0, &[]),
        ("exp", |x| x.exp(), 0.0, 1.0, E - 1.0, &[]),
        ("sin", |x| x.sin(), 0.0, PI, 2.0, &[]),
        ("cos^2", |x| x.cos().powi(2), 0.0, PI, PI / 2.0, &[]),
        (
            "1/(1+x^2)",
            |x| 1.0 / (1.0 + x * x),
            0.0,
            1.0,
            PI / 4.0,
            &[],
        ),
        ("sqrt", |x| x.sqrt(), 0.0, 1.0, 2.0 / 3.0, &[0.0]),
        ("1/sqrt", |x| 1.0 / x.sqrt(), 0.0, 1.0, 2.0, &[0.0]),
        ("ln", |x| x.ln(), 0.0, 1.0, -1.0, &[0.0]),
        ("ln^2", |x| x.ln().powi(2), 0.0, 1.0, 2.0, &[0.0]),
        ("x ln", |x| x * x.ln(), 0.0, 1.0, -0.25, &[0.0]),
        (
            "|x - 1/3|",
            |x| (x - 1.0 / 3.0).abs(),
            0.0,
            1.0,
            5.0 / 18.0,
            &[1.0 / 3.0],
        ),
        ("gauss", |x| (-x * x).exp(), -6.0, 6.0, PI.sqrt(), &[]),
        (
            "sin 50x",
            |x| (50.0 * x).sin(),
            0.0,
            PI / 50.0,
            2.0 / 50.0,
            &[],
        ),
        ("x sin x", |x| x * x.sin(), 0.0, PI, PI, &[]),
        ("1/(1+x)", |x| 1.0 / (1.0 + x), 0.0, 1.0, 2.0f64.ln(), &[]),
        ("x^9", |x| x.powi(9), 0.0, 2.0, 102.4, &[]),
        (
            "sech^2",
            |x| 1.0 / x.cosh().powi(2),
            -3.0,
            3.0,
            2.0 * 3.0f64.tanh(),
            &[],
        ),
        (
            "ln|x-1/2|",
            |x| (x - 0.5).abs().ln(),
            0.0,
            1.0,
            -1.0 - 2.0f64.ln(),
            &[0.5],
        ),
        (
            "cos 20x",
            |x| (20.0 * x).cos(),
            0.0,
            1.0,
            20.0f64.sin() / 20.0,
            &[],
        ),
        (
            "1/(x^2+1e-2)",
            |x| 1.0 / (x * x + 1e-2),
            -1.0,
            1.0,
            20.0 * 10.0f64.atan(),
            &[],
        ),
    ]
}

#[test]
fn error_estimates_are_conservative() {
    for tol in [1e-4, 1e-8, 1e-11] {
        let cases = suite();
        let mut honest = 0;
        for (name, f, a, b, exact, sing) in &cases {
            let r =
                integrate_finite(f, *a, *b, tol, sing).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(r.abs_error_estimate >= 0.0);
            if (r.value - exact).abs() <= r.abs_error_estimate.max(f64::EPSILON * exact.abs() * 4.0)
            {
                honest += 1;
            }
        }
        assert!(
            honest * 100 >= 95 * cases.len(),
            "tol {tol}: {honest}/{}",
            cases.len()
        );
    }
}

#[test]
fn budget_is_respected() {
    let opts = QuadratureOptions::absolute(1e-300).with_budget(2000);
    let used = match integrate_finite_with(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, &[], &opts) {
        Ok(r) => r.evaluations,
        Err(QuadratureError::BudgetExhausted { evaluations, .. }) => evaluations,
        Err(e) => panic!("{e}"),
    };
    assert!(used <= 2000, "{used}");
}

proptest! {
    #[test]
    fn results_are_bit_identical(a in -5.0f64..5.0, w in 0.1f64..10.0, freq in 0.0f64..30.0) {
        let f = |x: f64| (freq * x).cos() * (-x * x / 10.0).exp();
        let r1 = integrate_finite(f, a, a + w, 1e-10, &[]).unwrap();
        let r2 = integrate_finite(f, a, a + w, 1e-10, &[]).unwrap();
        prop_assert_eq!(r1, r2);
        prop_assert!(r1.abs_error_estimate >= 0.0);
    }
}
