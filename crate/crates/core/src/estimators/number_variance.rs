use rayon::prelude::*;

use crate::curve::{Curve, CurveKind};
use crate::embedding::LevelWindow;
use crate::scalar::{count, lit, Real};

use super::{check_grid, common_geometry, curve, jackknife_stderr, EstimatorError};

/// Interval placement for the number variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumberVarianceOptions {
    /// Interval centres spread evenly over `[-W/4, W/4]`; 1 keeps only the
    /// centred interval. Averaging over centres lowers the noise but mixes
    /// in the slow variation of the spectrum across the window.
    pub offsets: usize,
    /// Largest `r` as a fraction of the window width `2W`.
    pub max_fraction: f64,
}

impl Default for NumberVarianceOptions {
    fn default() -> Self {
        NumberVarianceOptions {
            offsets: 1,
            max_fraction: 0.8,
        }
    }
}

impl NumberVarianceOptions {
    pub fn with_offsets(offsets: usize) -> Self {
        NumberVarianceOptions {
            offsets,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumberVarianceEstimate<T> {
    pub curve: Curve<T>,
    pub zeta_center: T,
    pub local_density: T,
    pub n_windows: usize,
}

fn centres<T: Real>(half_width: T, n: usize) -> Vec<T> {
    if n <= 1 {
        return vec![T::zero()];
    }
    let a = half_width / lit(4.0);
    (0..n)
        .map(|i| -a + (a + a) * count::<T>(i) / count::<T>(n - 1))
        .collect()
}

/// Levels of a sorted slice in `[lo, hi)`.
fn count_in<T: Real>(levels: &[T], lo: T, hi: T) -> usize {
    levels.partition_point(|&x| x < hi) - levels.partition_point(|&x| x < lo)
}

/// Ensemble variance of the level count in `[c - r/2, c + r/2)`, averaged
/// over the interval centres `c`. Error bars are delete-one jackknife over
/// windows.
pub fn number_variance_estimate<T: Real>(
    windows: &[LevelWindow<T>],
    r_grid: &[T],
    options: &NumberVarianceOptions,
) -> Result<NumberVarianceEstimate<T>, EstimatorError> {
    check_grid(r_grid, "r grid", true)?;
    let m = windows.len();
    if m < 2 {
        return Err(EstimatorError::TooFewWindows { needed: 2, got: m });
    }
    let first = common_geometry(windows)?;
    let w = first.half_width;
    let cs = centres(w, options.offsets);
    let reach = cs.iter().fold(T::zero(), |a, c| a.max(c.abs()));
    let rmax = r_grid[r_grid.len() - 1];
    let limit = lit::<T>(options.max_fraction) * (w + w);
    if rmax > limit || rmax / lit(2.0) + reach > w {
        return Err(EstimatorError::InvalidArgument(format!(
            "r = {rmax} does not fit the window (half-width {w}, offsets up to {reach}, r limit {limit})"
        )));
    }
    let half = lit::<T>(0.5);
    // counts[w][j][c]
    let counts: Vec<Vec<Vec<T>>> = windows
        .par_iter()
        .map(|win| {
            r_grid
                .iter()
                .map(|&r| {
                    cs.iter()
                        .map(|&c| count::<T>(count_in(&win.levels, c - half * r, c + half * r)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let nc = count::<T>(cs.len());
    let mf = count::<T>(m);
    let mut values = Vec::with_capacity(r_grid.len());
    let mut stderr = Vec::with_capacity(r_grid.len());
    for j in 0..r_grid.len() {
        // Per-centre sums over windows and the per-window mean of squares.
        let mut b = vec![T::zero(); cs.len()];
        let mut a = T::zero();
        let sq: Vec<T> = counts
            .iter()
            .map(|cw| cw[j].iter().map(|&n| n * n).sum::<T>() / nc)
            .collect();
        for (wi, cw) in counts.iter().enumerate() {
            a = a + sq[wi];
            for (bc, &n) in b.iter_mut().zip(&cw[j]) {
                *bc = *bc + n;
            }
        }
        let b2: T = b.iter().map(|&x| x * x).sum::<T>() / nc;
        let var = |a: T, b2: T, used: T| (a - b2 / used) / (used - T::one());
        values.push(var(a, b2, mf));
        if m >= 3 {
            let reps: Vec<T> = counts
                .iter()
                .enumerate()
                .map(|(wi, cw)| {
                    let cross: T = b.iter().zip(&cw[j]).map(|(&bc, &n)| bc * n).sum::<T>() / nc;
                    let b2_loo = b2 - lit::<T>(2.0) * cross + sq[wi];
                    var(a - sq[wi], b2_loo, mf - T::one())
                })
                .collect();
            stderr.push(jackknife_stderr(&reps));
        } else {
            stderr.push(T::zero());
        }
    }
    for (r, v) in r_grid.iter().zip(values.iter_mut()) {
        if *r == T::zero() {
            *v = T::zero();
        }
    }
    Ok(NumberVarianceEstimate {
        curve: curve(CurveKind::NumberVariance, r_grid.to_vec(), values, stderr)?,
        zeta_center: first.zeta_center,
        local_density: first.local_density,
        n_windows: m,
    })
}
