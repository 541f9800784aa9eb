//! Brute-force one- and two-point statistics of whole (not unfolded)
//! spectra, binned in the raw energy.

use rayon::prelude::*;

use crate::curve::{Curve, CurveKind};
use crate::scalar::{count, lit, Real};

use super::{curve, jackknife_stderr, EstimatorError};

fn check_spectra<S>(spectra: &[S]) -> Result<(), EstimatorError> {
    if spectra.len() < 2 {
        return Err(EstimatorError::TooFewWindows {
            needed: 2,
            got: spectra.len(),
        });
    }
    Ok(())
}

/// Per-bin level counts on `bins` equal bins of `[lo, hi)`.
fn bin_counts<T: Real>(levels: &[T], lo: T, width: T, bins: usize) -> Vec<u32> {
    let mut out = vec![0u32; bins];
    for &x in levels {
        let b = ((x - lo) / width).floor();
        if b >= T::zero() {
            if let Some(i) = b.to_usize() {
                if i < bins {
                    out[i] += 1;
                }
            }
        }
    }
    out
}

/// Mean level density on `bins` equal bins of `[lo, hi)`: mean count per
/// unit length per spectrum, with the standard error across spectra.
pub fn density_histogram<T: Real, S: AsRef<[T]> + Sync>(
    spectra: &[S],
    lo: T,
    hi: T,
    bins: usize,
) -> Result<Curve<T>, EstimatorError> {
    check_spectra(spectra)?;
    if bins == 0 || !(hi > lo) {
        return Err(EstimatorError::InvalidArgument(format!(
            "need bins > 0 and hi > lo (got {bins} bins on [{lo}, {hi}))"
        )));
    }
    let width = (hi - lo) / count::<T>(bins);
    let counts: Vec<Vec<u32>> = spectra
        .par_iter()
        .map(|s| bin_counts(s.as_ref(), lo, width, bins))
        .collect();
    let m = count::<T>(spectra.len());
    let half = lit::<T>(0.5);
    let mut x = Vec::with_capacity(bins);
    let mut v = Vec::with_capacity(bins);
    let mut se = Vec::with_capacity(bins);
    for b in 0..bins {
        let (mut s1, mut s2) = (T::zero(), T::zero());
        for c in &counts {
            let n = count::<T>(c[b] as usize);
            s1 = s1 + n;
            s2 = s2 + n * n;
        }
        let mean = s1 / m;
        let var = ((s2 - m * mean * mean) / (m - T::one())).max(T::zero());
        x.push(lo + width * (count::<T>(b) + half));
        v.push(mean / width);
        se.push((var / m).sqrt() / width);
    }
    curve(CurveKind::Density, x, v, se)
}

/// Two-level cluster function `T_2(x, x + Delta) = R_1 R_1 - R_2`, averaged
/// over `x` in `[band_lo, band_hi)`, at `Delta = m * bin_width` for
/// `m = 1..=max_lag`.
///
/// Built from the covariance of bin counts, so each point is `T_2` smoothed
/// by a triangle of half-width `bin_width` in `Delta`. Error bars are
/// delete-one jackknife over spectra.
pub fn cluster_function_estimate<T: Real, S: AsRef<[T]> + Sync>(
    spectra: &[S],
    band_lo: T,
    band_hi: T,
    bin_width: T,
    max_lag: usize,
) -> Result<Curve<T>, EstimatorError> {
    check_spectra(spectra)?;
    if !(bin_width > T::zero()) || !(band_hi > band_lo) || max_lag == 0 {
        return Err(EstimatorError::InvalidArgument(
            "need bin_width > 0, band_hi > band_lo and max_lag >= 1".into(),
        ));
    }
    let band = ((band_hi - band_lo) / bin_width)
        .round()
        .to_usize()
        .unwrap_or(0)
        .max(1);
    let total = band + max_lag;
    let counts: Vec<Vec<T>> = spectra
        .par_iter()
        .map(|s| {
            bin_counts(s.as_ref(), band_lo, bin_width, total)
                .into_iter()
                .map(|c| count::<T>(c as usize))
                .collect()
        })
        .collect();
    let m = spectra.len();
    let mf = count::<T>(m);
    let mut sums = vec![T::zero(); total];
    for c in &counts {
        for (s, &n) in sums.iter_mut().zip(c) {
            *s = *s + n;
        }
    }
    let bf = count::<T>(band);
    let scale = bf * bin_width * bin_width;
    let mut values = Vec::with_capacity(max_lag);
    let mut stderr = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let prod = |c: &[T]| (0..band).map(|i| c[i] * c[i + lag]).sum::<T>();
        let per: Vec<T> = counts.par_iter().map(|c| prod(c)).collect();
        let p: T = per.iter().copied().sum();
        let ss: T = (0..band).map(|i| sums[i] * sums[i + lag]).sum();
        // Unbiased covariance summed over band bins, with `used` spectra.
        let cov = |p: T, ss: T, used: T| (p - ss / used) / (used - T::one());
        values.push(-cov(p, ss, mf) / scale);
        if m >= 3 {
            let reps: Vec<T> = counts
                .par_iter()
                .zip(per.par_iter())
                .map(|(c, &pw)| {
                    let cross: T = (0..band)
                        .map(|i| c[i] * sums[i + lag] + sums[i] * c[i + lag])
                        .sum();
                    let ss_loo = ss - cross + pw;
                    -cov(p - pw, ss_loo, mf - T::one()) / scale
                })
                .collect();
            stderr.push(jackknife_stderr(&reps));
        } else {
            stderr.push(T::zero());
        }
    }
    let lags = (1..=max_lag).map(|l| bin_width * count::<T>(l)).collect();
    curve(CurveKind::Cluster, lags, values, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_spectra(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..n as f64)).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v
            })
            .collect()
    }

    #[test]
    fn uniform_density() {
        let s = uniform_spectra(500, 100, 1);
        let c = density_histogram(&s, 0.0, 100.0, 10).unwrap();
        for i in 0..10 {
            assert!((c.values[i] - 1.0).abs() < 4.0 * c.stderr[i]);
        }
    }

    #[test]
    fn fixed_count_binomial_cluster() {
        // n i.i.d. points on [0, n): R_2 = (n-1)/n R_1^2, so T_2 = 1/n.
        let n = 50;
        let s = uniform_spectra(20000, n, 3);
        let c = cluster_function_estimate(&s, 10.0, 40.0, 1.0, 5).unwrap();
        for i in 0..5 {
            let want = 1.0 / n as f64;
            assert!(
                (c.values[i] - want).abs() < 4.0 * c.stderr[i],
                "{} vs {want} ({})",
                c.values[i],
                c.stderr[i]
            );
        }
    }

    #[test]
    fn loo_matches_direct() {
        let s = uniform_spectra(6, 30, 8);
        let c = cluster_function_estimate(&s, 5.0, 20.0, 0.5, 3).unwrap();
        let reps: Vec<f64> = (0..s.len())
            .map(|i| {
                let rest: Vec<Vec<f64>> = s
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| v.clone())
                    .collect();
                cluster_function_estimate(&rest, 5.0, 20.0, 0.5, 3)
                    .unwrap()
                    .values[1]
            })
            .collect();
        assert!((jackknife_stderr(&reps) - c.stderr[1]).abs() < 1e-10);
    }
}
