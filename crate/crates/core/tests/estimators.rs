use nvsat::estimators::{
    form_factor_estimate, number_variance_estimate, sigma2_from_form_factor, spacing_histogram,
    NumberVarianceOptions,
};
use nvsat::pipeline::{collect_windows, Source, WindowRequest};
use nvsat::{Beta, DensityMode, EnsembleConfig, LevelWindow64};
use proptest::collection::vec;
use proptest::prelude::*;

const SEED: u64 = 20261015;

fn windows(beta: Beta, n: usize, m: u64, mode: DensityMode) -> Vec<LevelWindow64> {
    let c = EnsembleConfig::new(beta, n, m, SEED)
        .and_then(|c| c.with_density_mode(mode))
        .unwrap();
    let req = WindowRequest::new(vec![0.0], 2.0 * n as f64);
    collect_windows(&c, &req, Source::Sample)
        .unwrap()
        .sets
        .remove(0)
        .windows
}

fn window(mut levels: Vec<f64>, half_width: f64, index: u64) -> LevelWindow64 {
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    LevelWindow64 {
        zeta_center: 0.0,
        xi_center: 0.0,
        half_width,
        local_density: 1.0,
        density_variation: 0.0,
        levels,
        realization_index: index,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spacing_histograms_are_normalized(
        raw in vec(vec(-20.0f64..20.0, 8..60), 2..6),
        order in 0usize..3,
        bins in 1usize..120,
    ) {
        let ws: Vec<LevelWindow64> = raw.into_iter().enumerate().map(|(i, l)| window(l, 20.0, i as u64)).collect();
        let h = spacing_histogram(&ws, order, bins, None).unwrap();
        if h.overflow < h.total() {
            prop_assert!((h.integral() - 1.0).abs() < 1e-12);
        }
        prop_assert!(h.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn number_variance_is_nonnegative(
        raw in vec(vec(-20.0f64..20.0, 1..60), 2..6),
        r in 0.01f64..30.0,
    ) {
        let ws: Vec<LevelWindow64> = raw.into_iter().enumerate().map(|(i, l)| window(l, 20.0, i as u64)).collect();
        let e = number_variance_estimate(&ws, &[r], &NumberVarianceOptions::default()).unwrap();
        prop_assert!(e.curve.values[0] >= 0.0);
        prop_assert!(e.curve.stderr[0] >= 0.0);
    }
}

#[test]
fn number_variance_starts_with_unit_slope() {
    for beta in [
        Beta::Orthogonal,
        Beta::Unitary,
        Beta::Symplectic,
        Beta::Poisson,
    ] {
        let ws = windows(beta, 120, 400, DensityMode::Uniform);
        let grid: Vec<f64> = (0..9).map(|i| 0.2 + 0.1 * i as f64).collect();
        let e =
            number_variance_estimate(&ws, &grid, &NumberVarianceOptions::with_offsets(17)).unwrap();
        // Least-squares slope through the origin, with its propagated error.
        let sxx: f64 = grid.iter().map(|r| r * r).sum();
        let slope: f64 = grid
            .iter()
            .zip(&e.curve.values)
            .map(|(r, v)| r * v)
            .sum::<f64>()
            / sxx;
        let se = grid
            .iter()
            .zip(&e.curve.stderr)
            .map(|(r, s)| r * s)
            .sum::<f64>()
            / sxx;
        let curvature = 4.0 / 3.0 * grid[8] / ws[0].local_density;
        assert!(
            (slope - 1.0).abs() < 3.0 * se + curvature,
            "{beta:?}: {slope} +- {se}"
        );
    }
}

#[test]
fn form_factor_tends_to_one() {
    let ws = windows(Beta::Unitary, 120, 400, DensityMode::Uniform);
    let density = ws[0].local_density;
    let grid: Vec<f64> = (0..=40)
        .map(|i| (5.0 + 5.0 * i as f64 / 40.0) / density)
        .collect();
    let e = form_factor_estimate(&ws, &grid).unwrap();
    let n = grid.len() as f64;
    let mean = e.curve.values.iter().sum::<f64>() / n;
    // Neighbouring k are correlated, so the mean error is bounded by the
    // average point error.
    let se = e.curve.stderr.iter().sum::<f64>() / n;
    assert!((mean - 1.0).abs() < 3.0 * se, "{mean} +- {se}");
    assert!(e.curve.values.iter().all(|&v| v > -3.0 * se));
}

#[test]
fn number_variance_agrees_with_the_integrated_form_factor() {
    let n = 150;
    let ws = windows(Beta::Unitary, n, 300, DensityMode::Uniform);
    let w = ws[0].half_width;
    let dk = 1.0 / (4.0 * w);
    let k_grid: Vec<f64> = (0..=(3.0 / dk) as usize).map(|i| i as f64 * dk).collect();
    let r_grid = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
    let direct =
        number_variance_estimate(&ws, &r_grid, &NumberVarianceOptions::with_offsets(33)).unwrap();
    let via_f = sigma2_from_form_factor(&ws, &k_grid, &r_grid).unwrap();
    for (i, r) in r_grid.iter().enumerate() {
        let (a, b) = (direct.curve.values[i], via_f.values[i]);
        let se = direct.curve.stderr[i].hypot(via_f.stderr[i]);
        assert!((a - b).abs() < 3.0 * se, "r = {r}: {a} vs {b} +- {se}");
    }
}

#[test]
fn semicircle_mode_unfolds_to_unit_spacing() {
    let ws = windows(Beta::Unitary, 200, 200, DensityMode::Semicircle);
    let (sum, count) = ws.iter().fold((0.0, 0usize), |(s, c), w| {
        let l = &w.levels;
        (s + (l[l.len() - 1] - l[0]), c + l.len() - 1)
    });
    let mean = sum / count as f64;
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
}
