use crate::curve::{Curve, CurveKind};
use crate::embedding::LevelWindow;
use crate::scalar::{count, lit, Real};

use super::{common_geometry, curve, EstimatorError};

/// Normalized histogram of `s = zeta_{j+k+1} - zeta_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingHistogram<T> {
    pub order: usize,
    pub edges: Vec<T>,
    /// Density normalized over the binned range.
    pub density: Vec<T>,
    pub counts: Vec<u64>,
    /// Spacings beyond the last edge.
    pub overflow: u64,
    pub mean: T,
    pub mean_stderr: T,
}

/// `P_k(s) = s^k e^{-s} / k!`, zero for negative `s`.
pub fn poisson_pk<T: Real>(s: T, k: usize) -> T {
    if s < T::zero() {
        return T::zero();
    }
    if s == T::zero() {
        return if k == 0 { T::one() } else { T::zero() };
    }
    let mut log = count::<T>(k) * s.ln() - s;
    for j in 2..=k {
        log = log - count::<T>(j).ln();
    }
    log.exp()
}

/// `int_0^s P_k`.
fn poisson_pk_cdf<T: Real>(s: T, k: usize) -> T {
    if s <= T::zero() {
        return T::zero();
    }
    if s < T::one() {
        // e^{-s} sum_{j>k} s^j / j! avoids the cancellation.
        let mut t = poisson_pk(s, k);
        let mut sum = T::zero();
        let mut j = k + 1;
        loop {
            t = t * s / count::<T>(j);
            sum = sum + t;
            if t <= T::epsilon() * sum {
                return sum;
            }
            j += 1;
        }
    }
    let mut t = (-s).exp();
    let mut sum = t;
    for j in 1..=k {
        t = t * s / count::<T>(j);
        sum = sum + t;
    }
    T::one() - sum
}

/// Mean of `P_k` over the bin `[a, b]`.
pub fn poisson_pk_bin_mean<T: Real>(a: T, b: T, k: usize) -> T {
    (poisson_pk_cdf(b, k) - poisson_pk_cdf(a, k)) / (b - a)
}

/// Histogram of order-`k` spacings pooled over windows, with `bins` equal
/// bins on `[0, s_max]`. The default `s_max` covers all but about `1e-6` of
/// the Poisson mass.
pub fn spacing_histogram<T: Real>(
    windows: &[LevelWindow<T>],
    order: usize,
    bins: usize,
    s_max: Option<T>,
) -> Result<SpacingHistogram<T>, EstimatorError> {
    if bins == 0 {
        return Err(EstimatorError::InvalidArgument(
            "need at least one bin".into(),
        ));
    }
    common_geometry(windows)?;
    let kp1 = count::<T>(order + 1);
    let s_max = s_max.unwrap_or_else(|| kp1 + lit::<T>(6.0) * kp1.sqrt() + lit(8.0));
    if !(s_max > T::zero()) || !s_max.is_finite() {
        return Err(EstimatorError::InvalidArgument(format!(
            "s_max must be positive, got {s_max}"
        )));
    }
    if let Some(w) = windows.iter().find(|w| w.levels.len() < order + 2) {
        return Err(EstimatorError::InvalidArgument(format!(
            "window {} has {} levels, order {order} needs at least {}",
            w.realization_index,
            w.levels.len(),
            order + 2
        )));
    }
    let width = s_max / count::<T>(bins);
    let mut counts = vec![0u64; bins];
    let mut overflow = 0u64;
    let (mut sum, mut sum2, mut n) = (T::zero(), T::zero(), 0usize);
    for w in windows {
        for pair in w.levels.windows(order + 2) {
            let s = pair[order + 1] - pair[0];
            sum = sum + s;
            sum2 = sum2 + s * s;
            n += 1;
            let b = (s / width).floor();
            if b < count::<T>(bins) {
                counts[b.to_usize().unwrap_or(0)] += 1;
            } else {
                overflow += 1;
            }
        }
    }
    let in_range: u64 = counts.iter().sum();
    if in_range == 0 {
        return Err(EstimatorError::EmptyWindows);
    }
    let norm = T::from_u64(in_range).expect("count fits") * width;
    let density = counts
        .iter()
        .map(|&c| T::from_u64(c).expect("count fits") / norm)
        .collect();
    let nf = count::<T>(n);
    let mean = sum / nf;
    let var = (sum2 / nf - mean * mean).max(T::zero());
    Ok(SpacingHistogram {
        order,
        edges: (0..=bins).map(|i| width * count::<T>(i)).collect(),
        density,
        counts,
        overflow,
        mean,
        mean_stderr: (var / nf).sqrt(),
    })
}

impl<T: Real> SpacingHistogram<T> {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn integral(&self) -> T {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&d, e)| d * (e[1] - e[0]))
            .sum()
    }

    /// Reference `P_k` averaged over each bin and renormalized to the
    /// binned range.
    pub fn poisson_reference(&self) -> Vec<T> {
        let s_max = self.edges[self.edges.len() - 1];
        let mass = poisson_pk_cdf(s_max, self.order);
        self.edges
            .windows(2)
            .map(|e| poisson_pk_bin_mean(e[0], e[1], self.order) / mass)
            .collect()
    }

    /// `max |density - P_k|` over bins.
    pub fn sup_norm_vs_poisson(&self) -> T {
        self.density
            .iter()
            .zip(self.poisson_reference())
            .fold(T::zero(), |m, (&d, p)| m.max((d - p).abs()))
    }

    /// Pearson chi-square per bin against `P_k`, over bins expecting at
    /// least five spacings.
    pub fn chi2_per_bin_vs_poisson(&self) -> T {
        let n = T::from_u64(self.counts.iter().sum()).expect("count fits");
        let (mut chi2, mut used) = (T::zero(), 0usize);
        for ((&c, p), e) in self
            .counts
            .iter()
            .zip(self.poisson_reference())
            .zip(self.edges.windows(2))
        {
            let expected = n * p * (e[1] - e[0]);
            if expected >= lit(5.0) {
                let d = T::from_u64(c).expect("count fits") - expected;
                chi2 = chi2 + d * d / expected;
                used += 1;
            }
        }
        chi2 / count::<T>(used.max(1))
    }

    /// Bin centres, density and its Poisson counting error.
    pub fn to_curve(&self) -> Result<Curve<T>, EstimatorError> {
        let n = T::from_u64(self.counts.iter().sum()).expect("count fits");
        let half = lit::<T>(0.5);
        let mut x = Vec::new();
        let mut se = Vec::new();
        for (e, &c) in self.edges.windows(2).zip(&self.counts) {
            x.push(half * (e[0] + e[1]));
            se.push(T::from_u64(c).expect("count fits").sqrt() / (n * (e[1] - e[0])));
        }
        curve(CurveKind::SpacingPdf, x, self.density.clone(), se)
    }
}
