use nvsat::analytic::{
    f2_two_particle, sigma2_closed, sigma2_closed_without_sigma, sigma2_quadrature,
    sigma2_saturation, sigma2_small_r,
};
use nvsat::{AnalyticModel64, Symmetry};
use proptest::prelude::*;

fn symmetry() -> impl Strategy<Value = Symmetry> {
    prop_oneof![
        Just(Symmetry::Orthogonal),
        Just(Symmetry::Unitary),
        Just(Symmetry::Symplectic)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_matches_quadrature(s in symmetry(), density in 20.0f64..2000.0, t in 0.0f64..1.0) {
        let m = AnalyticModel64::embedded(s, density).unwrap();
        let r = 0.1 * (80.0 * density).powf(t);
        let closed = sigma2_closed(r, &m).unwrap();
        let quad = sigma2_quadrature(r, &m).unwrap();
        prop_assert!(((closed - quad) / quad).abs() < 1e-3, "{s:?} R={density} r={r}: {closed} vs {quad}");
    }
}

proptest! {
    #[test]
    fn form_factor_is_nonnegative(s in symmetry(), chi in 0.0f64..20.0) {
        let m = AnalyticModel64::embedded(s, 1.0).unwrap();
        prop_assert!(f2_two_particle(chi, &m) >= 0.0);
    }

    #[test]
    fn form_factor_is_one_past_the_support(chi in 2.0f64..100.0) {
        let gue = AnalyticModel64::embedded(Symmetry::Unitary, 1.0).unwrap();
        let gse = AnalyticModel64::embedded(Symmetry::Symplectic, 1.0).unwrap();
        prop_assert_eq!(f2_two_particle(chi - 1.0 + 1e-9, &gue), 1.0);
        prop_assert_eq!(f2_two_particle(chi + 1e-9, &gse), 1.0);
    }

    #[test]
    fn egoe_form_factor_approaches_one(chi in 5.0f64..200.0) {
        // 1 - F approaches 1/(6 chi^2) from above.
        let m = AnalyticModel64::embedded(Symmetry::Orthogonal, 1.0).unwrap();
        let scaled = (1.0 - f2_two_particle(chi, &m)) * chi * chi * 6.0;
        prop_assert!(scaled > 1.0 && scaled < 1.01, "chi={chi}: {scaled}");
    }
}

#[test]
fn omitting_sigma_costs_a_few_percent() {
    let density = 499.75;
    let m = AnalyticModel64::embedded(Symmetry::Orthogonal, density).unwrap();
    let gap = (0..20)
        .map(|i| {
            let r = 0.1 * (80.0 * density / 0.1).powf(i as f64 / 19.0);
            let full = sigma2_quadrature(r, &m).unwrap();
            ((sigma2_closed_without_sigma(r, density).unwrap() - full) / full).abs()
        })
        .fold(0.0, f64::max);
    assert!((0.03..0.09).contains(&gap), "{gap}");
}

#[test]
fn large_r_average_is_the_saturation_value() {
    let density = 300.0;
    for s in Symmetry::ALL {
        let m = AnalyticModel64::embedded(s, density).unwrap();
        let n = 400;
        let mean = (0..n)
            .map(|i| {
                sigma2_closed(density * (6.0 + 2.0 * (i as f64 + 0.5) / n as f64), &m).unwrap()
            })
            .sum::<f64>()
            / n as f64;
        let sat = sigma2_saturation(&m).unwrap();
        assert!((mean / sat - 1.0).abs() < 0.01, "{s:?}: {mean} vs {sat}");
    }
}

#[test]
fn saturation_constants_are_ordered_by_symmetry() {
    let sat = |s| sigma2_saturation(&AnalyticModel64::embedded(s, 1.0).unwrap()).unwrap();
    let (o, u, sp) = (
        sat(Symmetry::Orthogonal),
        sat(Symmetry::Unitary),
        sat(Symmetry::Symplectic),
    );
    assert!(o > u && u > sp, "{o} {u} {sp}");
}

#[test]
fn small_r_residual_is_cubic() {
    let density: f64 = 400.0;
    for s in Symmetry::ALL {
        let m = AnalyticModel64::embedded(s, density).unwrap();
        let residual =
            |r: f64| (sigma2_closed(r, &m).unwrap() - sigma2_small_r(r, &m).unwrap()).abs();
        let (a, b) = (0.05 * density.sqrt(), 0.5 * density.sqrt());
        let slope = (residual(b) / residual(a)).ln() / (b / a).ln();
        assert!(slope >= 2.9, "{s:?}: slope {slope}");
    }
}
