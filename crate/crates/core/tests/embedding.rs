use nvsat::embedding::{
    extract_window, invert_unfold_tent, pair_sums, pair_sums_in_range, place_window, tent_density,
    two_particle_levels, unfold_tent, window_from_one_particle, TentUnfolding,
};
use nvsat::ensembles::{sample_spectrum, Beta, EnsembleConfig};
use nvsat::estimators::density_histogram;
use proptest::collection::vec;
use proptest::prelude::*;

const SEED: u64 = 20261015;

fn increasing(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(0.01f64..3.0, 2..max_len).prop_map(|gaps| {
        gaps.iter()
            .scan(-10.0, |x, g| {
                *x += g;
                Some(*x)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn pair_sums_count_order_and_bounds(levels in increasing(60)) {
        let n = levels.len();
        let sums = pair_sums(&levels).unwrap();
        prop_assert_eq!(sums.len(), n * (n - 1) / 2);
        prop_assert!(sums.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(sums[0], levels[0] + levels[1]);
        prop_assert_eq!(sums[sums.len() - 1], levels[n - 2] + levels[n - 1]);
    }

    #[test]
    fn ranged_pair_sums_are_a_filter(levels in increasing(40), a in -20.0f64..40.0, w in 0.0f64..30.0) {
        let all: Vec<f64> = pair_sums(&levels).unwrap().into_iter().filter(|&x| x >= a && x <= a + w).collect();
        prop_assert_eq!(pair_sums_in_range(&levels, a, a + w).unwrap(), all);
    }

    #[test]
    fn tent_unfolding_is_odd_increasing_and_invertible(n in 4usize..3000, t in -1.0f64..1.0) {
        let xi = t * n as f64;
        let z = unfold_tent(xi, n).unwrap();
        prop_assert_eq!(unfold_tent(-xi, n).unwrap(), -z);
        let back = invert_unfold_tent(z, n).unwrap();
        prop_assert!((back - xi).abs() <= 1e-9 * n as f64);
        let h = 1e-3;
        if xi.abs() + h < n as f64 {
            prop_assert!(unfold_tent(xi + h, n).unwrap() > z);
        }
    }

    #[test]
    fn unfolding_slope_exceeds_the_tent_by_a_quarter(n in 4usize..3000, t in 0.01f64..0.99) {
        let xi = t * n as f64;
        let h = 1e-4;
        let slope = (unfold_tent(xi + h, n).unwrap() - unfold_tent(xi - h, n).unwrap()) / (2.0 * h);
        prop_assert!((slope - tent_density(xi, n) - 0.25).abs() < 1e-6 * n as f64);
    }

    #[test]
    fn direct_windows_match_full_spectrum_windows(index in 0u64..20, zeta in -300.0f64..300.0) {
        let n = 40;
        let c = EnsembleConfig::new(Beta::Unitary, n, 20, SEED).unwrap();
        let sp = sample_spectrum::<f64>(&c, index).unwrap();
        let tp = two_particle_levels(&sp).unwrap();
        let full = extract_window(&tp, zeta, 30.0, n).unwrap();
        let direct = window_from_one_particle(&sp, &TentUnfolding { n }, zeta, 30.0).unwrap();
        prop_assert_eq!(full, direct);
    }
}

#[test]
fn two_particle_density_follows_the_tent() {
    let n = 1000;
    let c = EnsembleConfig::new(Beta::Unitary, n, 4, SEED).unwrap();
    let spectra: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            two_particle_levels(&sample_spectrum::<f64>(&c, i).unwrap())
                .unwrap()
                .levels
        })
        .collect();
    let half = n as f64 / 2.0;
    let h = density_histogram(&spectra, -half, half, 100).unwrap();
    let peak = tent_density(0.0, n);
    let worst = h
        .abscissa
        .iter()
        .zip(&h.values)
        .map(|(&x, &v)| (v - tent_density(x, n)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.02 * peak, "{worst} vs {peak}");
}

#[test]
fn poisson_pair_density_is_the_binomial_triangle() {
    // Independent uniform levels give (N - |xi|)(N - 1) / (2N) exactly; the
    // tent differs from it by O(1).
    let n = 40;
    let m = 10_000;
    let c = EnsembleConfig::new(Beta::Poisson, n, m, SEED).unwrap();
    let spectra: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            two_particle_levels(&sample_spectrum::<f64>(&c, i).unwrap())
                .unwrap()
                .levels
        })
        .collect();
    let nn = n as f64;
    let h = density_histogram(&spectra, -nn, nn, 40).unwrap();
    let mut outside = 0;
    for i in 0..h.len() {
        let (lo, hi) = (h.abscissa[i] - 1.0, h.abscissa[i] + 1.0);
        let cdf = |x: f64| (nn * x - x * x.abs() / 2.0) * (nn - 1.0) / (2.0 * nn);
        let expected = (cdf(hi) - cdf(lo)) / 2.0;
        if (h.values[i] - expected).abs() > 3.0 * h.stderr[i] {
            outside += 1;
        }
    }
    assert!(outside <= 2, "{outside} of {} bins beyond 3 sigma", h.len());
}

#[test]
fn mid_spectrum_window_is_local() {
    let p = place_window(&TentUnfolding { n: 1000 }, 50_000.0, 2000.0).unwrap();
    assert!(p.density_variation < 0.02, "{}", p.density_variation);
}
