use std::io::{self, Write};

use crate::curve::fmt17;
use crate::scalar::{count, lit, to_f64, Real};

use super::{EmbeddingError, Unfolding};

pub const DEFAULT_UNFOLDING_KNOTS: usize = 2048;

/// Fewer spectra than this give a visibly noisy cumulative count.
pub const MIN_UNFOLDING_REALIZATIONS: usize = 50;

/// Unfolding map from the ensemble-averaged cumulative level count,
/// `zeta(xi) = <#{levels <= xi}> - d/2`, interpolated with monotone cubic
/// Hermite (PCHIP) pieces between equally spaced knots.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalUnfolding<T> {
    knots: Vec<T>,
    values: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> EmpiricalUnfolding<T> {
    /// Builds the map from whole spectra (each sorted).
    pub fn from_spectra<S: AsRef<[T]>>(
        spectra: &[S],
        grid_size: usize,
    ) -> Result<Self, EmbeddingError> {
        if spectra.len() < MIN_UNFOLDING_REALIZATIONS {
            return Err(EmbeddingError::Unfolding(format!(
                "need at least {MIN_UNFOLDING_REALIZATIONS} spectra, got {}",
                spectra.len()
            )));
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut total = 0usize;
        for s in spectra {
            let s = s.as_ref();
            if s.is_empty() {
                return Err(EmbeddingError::Unfolding("empty spectrum".into()));
            }
            if s.windows(2).any(|w| w[1] < w[0]) {
                return Err(EmbeddingError::Unfolding("spectra must be sorted".into()));
            }
            lo = lo.min(s[0]);
            hi = hi.max(s[s.len() - 1]);
            total += s.len();
        }
        let knots = uniform_knots(lo, hi, grid_size)?;
        let mut sums = vec![T::zero(); knots.len()];
        for s in spectra {
            accumulate_counts(s.as_ref(), &knots, &mut sums);
        }
        let m = count::<T>(spectra.len());
        let mean: Vec<T> = sums.into_iter().map(|c| c / m).collect();
        Self::from_mean_counts(knots, mean, count::<T>(total) / m)
    }

    /// Builds the map from mean cumulative counts at increasing knots and the
    /// mean number of levels per spectrum.
    pub fn from_mean_counts(
        knots: Vec<T>,
        mean_counts: Vec<T>,
        mean_total: T,
    ) -> Result<Self, EmbeddingError> {
        if knots.len() < 2 || knots.len() != mean_counts.len() {
            return Err(EmbeddingError::Unfolding(format!(
                "need matching knot and count arrays of length >= 2 (got {} and {})",
                knots.len(),
                mean_counts.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EmbeddingError::Unfolding(
                "knots must be strictly increasing".into(),
            ));
        }
        if let Some(i) = mean_counts.windows(2).position(|w| w[1] < w[0]) {
            return Err(EmbeddingError::Unfolding(format!(
                "cumulative count decreases between knots {i} and {}",
                i + 1
            )));
        }
        let half = mean_total / lit(2.0);
        let values: Vec<T> = mean_counts.into_iter().map(|c| c - half).collect();
        let slopes = pchip_slopes(&knots, &values);
        let map = EmpiricalUnfolding {
            knots,
            values,
            slopes,
        };
        map.check_monotone()?;
        Ok(map)
    }

    fn check_monotone(&self) -> Result<(), EmbeddingError> {
        if let Some(i) = self
            .slopes
            .iter()
            .position(|s| *s < T::zero() || !s.is_finite())
        {
            return Err(EmbeddingError::Unfolding(format!(
                "interpolant is not monotone at knot {i}"
            )));
        }
        Ok(())
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    fn segment(&self, xi: T) -> usize {
        let i = self.knots.partition_point(|&k| k <= xi);
        i.clamp(1, self.knots.len() - 1) - 1
    }

    fn hermite(&self, i: usize, xi: T) -> (T, T) {
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let h = x1 - x0;
        let t = (xi - x0) / h;
        let two = lit::<T>(2.0);
        let three = lit::<T>(3.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = -two * t3 + three * t2;
        let h11 = t3 - t2;
        let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let six = lit::<T>(6.0);
        let dh00 = (six * t2 - six * t) / h;
        let dh10 = three * t2 - lit::<T>(4.0) * t + T::one();
        let dh01 = (-six * t2 + six * t) / h;
        let dh11 = three * t2 - two * t;
        let slope = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
        (value, slope)
    }

    /// Two-column CSV `xi,zeta` of the knots.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "xi,zeta")?;
        for (x, z) in self.knots.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt17(to_f64(*x)), fmt17(to_f64(*z)))?;
        }
        Ok(())
    }
}

impl<T: Real> Unfolding<T> for EmpiricalUnfolding<T> {
    /// Beyond the knot range the map is held constant.
    fn unfold(&self, xi: T) -> Result<T, EmbeddingError> {
        if xi.is_nan() {
            return Err(EmbeddingError::InvalidArgument("xi is NaN".into()));
        }
        let n = self.knots.len();
        if xi <= self.knots[0] {
            return Ok(self.values[0]);
        }
        if xi >= self.knots[n - 1] {
            return Ok(self.values[n - 1]);
        }
        Ok(self.hermite(self.segment(xi), xi).0)
    }

    fn invert(&self, zeta: T) -> Result<T, EmbeddingError> {
        let n = self.knots.len();
        let (lo, hi) = (self.values[0], self.values[n - 1]);
        if !(zeta >= lo && zeta <= hi) {
            return Err(EmbeddingError::Domain {
                what: "zeta",
                value: to_f64(zeta),
                lo: to_f64(lo),
                hi: to_f64(hi),
            });
        }
        let j = self.values.partition_point(|&v| v < zeta);
        if j == 0 {
            return Ok(self.knots[0]);
        }
        let i = j - 1;
        // Bisection on the monotone cubic piece.
        let (mut a, mut b) = (self.knots[i], self.knots[i + 1]);
        for _ in 0..200 {
            let m = (a + b) / lit(2.0);
            if m <= a || m >= b {
                break;
            }
            if self.hermite(i, m).0 < zeta {
                a = m;
            } else {
                b = m;
            }
        }
        Ok((a + b) / lit(2.0))
    }

    fn density(&self, xi: T) -> T {
        let n = self.knots.len();
        if xi < self.knots[0] || xi > self.knots[n - 1] {
            return T::zero();
        }
        self.hermite(self.segment(xi), xi).1
    }
}

/// `grid_size` knots spanning `[lo, hi]`, widened by half a spacing so every
/// level lies strictly inside.
pub(crate) fn uniform_knots<T: Real>(
    lo: T,
    hi: T,
    grid_size: usize,
) -> Result<Vec<T>, EmbeddingError> {
    if grid_size < 4 {
        return Err(EmbeddingError::Unfolding(format!(
            "grid needs >= 4 knots, got {grid_size}"
        )));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(EmbeddingError::Unfolding("degenerate level range".into()));
    }
    let pad = (hi - lo) / count::<T>(2 * (grid_size - 1));
    let (a, b) = (lo - pad, hi + pad);
    let step = (b - a) / count::<T>(grid_size - 1);
    Ok((0..grid_size).map(|i| a + step * count::<T>(i)).collect())
}

/// Adds `#{levels <= knot}` for every knot.
pub(crate) fn accumulate_counts<T: Real>(levels: &[T], knots: &[T], sums: &mut [T]) {
    let mut j = 0;
    for (k, s) in knots.iter().zip(sums.iter_mut()) {
        while j < levels.len() && levels[j] <= *k {
            j += 1;
        }
        *s = *s + count::<T>(j);
    }
}

/// Fritsch-Carlson slopes with the three-point shape-preserving end rule.
fn pchip_slopes<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![T::zero(); n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    let two = lit::<T>(2.0);
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] <= T::zero() {
            d[k] = T::zero();
        } else {
            let w1 = two * h[k] + h[k - 1];
            let w2 = h[k] + two * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn edge_slope<T: Real>(h0: T, h1: T, m0: T, m1: T) -> T {
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let d = ((two * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == T::zero() {
        T::zero()
    } else if m0.signum() != m1.signum() && d.abs() > (three * m0).abs() {
        three * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{unfold_tent, TentUnfolding};

    #[test]
    fn constant_density_gives_affine_map() {
        // Staggered copies so the mean count is smooth on the knot scale.
        let m = MIN_UNFOLDING_REALIZATIONS;
        let spectra: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                (0..200)
                    .map(|i| (i as f64 + j as f64 / m as f64) * 0.5)
                    .collect()
            })
            .collect();
        let map = EmpiricalUnfolding::from_spectra(&spectra, 64).unwrap();
        for x in [10.0, 33.3, 77.7] {
            let z = map.unfold(x).unwrap();
            assert!((z - (2.0 * x - 100.0)).abs() < 1.0, "{x}: {z}");
            assert!((map.density(x) - 2.0).abs() < 0.1);
        }
    }

    #[test]
    fn tent_levels_reproduce_closed_form() {
        // Quantiles of the tent density, identical in every spectrum.
        let n = 100usize;
        let d = n * (n - 1) / 2;
        let total = (n * n) as f64 / 4.0;
        let m = MIN_UNFOLDING_REALIZATIONS;
        let spectra: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                (0..d)
                    .map(|i| {
                        let u = (i as f64 + (j as f64 + 0.5) / m as f64) / d as f64;
                        crate::embedding::invert_unfold_tent(u * 2.0 * total - total, n).unwrap()
                    })
                    .collect()
            })
            .collect();
        let map = EmpiricalUnfolding::from_spectra(&spectra, DEFAULT_UNFOLDING_KNOTS).unwrap();
        let scale = d as f64 / (2.0 * total);
        for xi in [-60.0, -10.0, 0.5, 25.0, 70.0] {
            let want = unfold_tent(xi, n).unwrap() * scale;
            let got = map.unfold(xi).unwrap();
            assert!(
                (got - want).abs() <= 0.005 * want.abs().max(20.0),
                "{xi}: {got} vs {want}"
            );
        }
        let tent = TentUnfolding { n };
        assert!((map.density(10.0) - tent.density(10.0) * scale).abs() < 0.02 * tent.density(10.0));
    }

    #[test]
    fn invert_round_trip() {
        let spectrum: Vec<f64> = (0..500)
            .map(|i| ((i as f64 + 0.5) / 500.0 * 2.0 - 1.0).powi(3) * 10.0)
            .collect();
        let spectra = vec![spectrum; MIN_UNFOLDING_REALIZATIONS];
        let map = EmpiricalUnfolding::from_spectra(&spectra, 256).unwrap();
        for z in [-200.0, -3.0, 0.0, 17.0, 240.0] {
            let xi = map.invert(z).unwrap();
            assert!((map.unfold(xi).unwrap() - z).abs() < 1e-6);
        }
        assert!(map.invert(1e6).is_err());
    }

    #[test]
    fn too_few_spectra() {
        let spectra = vec![vec![0.0f64, 1.0]; 3];
        assert!(EmpiricalUnfolding::from_spectra(&spectra, 64).is_err());
    }

    #[test]
    fn csv_export() {
        let spectra = vec![vec![0.0f64, 1.0, 2.0, 3.0]; MIN_UNFOLDING_REALIZATIONS];
        let map = EmpiricalUnfolding::from_spectra(&spectra, 8).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 9);
    }
}
