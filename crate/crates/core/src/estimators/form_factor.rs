use rayon::prelude::*;

use crate::analytic::unit_tail;
use crate::curve::{Curve, CurveKind};
use crate::embedding::LevelWindow;
use crate::scalar::{count, lit, Real};

use super::{check_grid, common_geometry, curve, jackknife_stderr, EstimatorError};

#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorEstimate<T> {
    pub curve: Curve<T>,
    pub n_windows: usize,
    pub mean_count: T,
    pub local_density: T,
}

/// Per-window Fourier sums `S_w(k) = sum_j exp(2 pi i k zeta_j)` and counts.
struct FourierSums<T> {
    re: Vec<Vec<T>>,
    im: Vec<Vec<T>>,
    counts: Vec<T>,
}

impl<T: Real> FourierSums<T> {
    fn new(windows: &[LevelWindow<T>], k_grid: &[T]) -> Result<Self, EstimatorError> {
        if windows.len() < 2 {
            return Err(EstimatorError::TooFewWindows {
                needed: 2,
                got: windows.len(),
            });
        }
        common_geometry(windows)?;
        if windows.iter().all(|w| w.levels.is_empty()) {
            return Err(EstimatorError::EmptyWindows);
        }
        let two_pi = lit::<T>(2.0) * T::PI();
        let (re, im): (Vec<Vec<T>>, Vec<Vec<T>>) = windows
            .par_iter()
            .map(|w| {
                let mut re = vec![T::zero(); k_grid.len()];
                let mut im = vec![T::zero(); k_grid.len()];
                for &z in &w.levels {
                    for (i, &k) in k_grid.iter().enumerate() {
                        let (s, c) = (two_pi * k * z).sin_cos();
                        re[i] = re[i] + c;
                        im[i] = im[i] + s;
                    }
                }
                (re, im)
            })
            .unzip();
        let counts = windows.iter().map(|w| count::<T>(w.levels.len())).collect();
        Ok(FourierSums { re, im, counts })
    }

    fn m(&self) -> usize {
        self.counts.len()
    }

    /// `F(k) = [sum |S|^2 - |sum S|^2 / M] / (M - 1) / nbar`, optionally
    /// leaving out one window.
    fn estimate(&self, leave_out: Option<usize>) -> Vec<T> {
        let m = self.m();
        let k = self.re[0].len();
        let mut a = vec![T::zero(); k];
        let mut br = vec![T::zero(); k];
        let mut bi = vec![T::zero(); k];
        let mut total = T::zero();
        for w in 0..m {
            if Some(w) == leave_out {
                continue;
            }
            total = total + self.counts[w];
            for i in 0..k {
                let (x, y) = (self.re[w][i], self.im[w][i]);
                a[i] = a[i] + x * x + y * y;
                br[i] = br[i] + x;
                bi[i] = bi[i] + y;
            }
        }
        let used = count::<T>(m - usize::from(leave_out.is_some()));
        Self::finish(&a, &br, &bi, total, used)
    }

    fn finish(a: &[T], br: &[T], bi: &[T], total: T, used: T) -> Vec<T> {
        let nbar = total / used;
        (0..a.len())
            .map(|i| (a[i] - (br[i] * br[i] + bi[i] * bi[i]) / used) / (used - T::one()) / nbar)
            .collect()
    }

    /// Full estimate and all leave-one-out replicates, from running sums.
    fn with_replicates(&self) -> (Vec<T>, Vec<Vec<T>>) {
        let m = self.m();
        let k = self.re[0].len();
        let mut a = vec![T::zero(); k];
        let mut br = vec![T::zero(); k];
        let mut bi = vec![T::zero(); k];
        for w in 0..m {
            for i in 0..k {
                let (x, y) = (self.re[w][i], self.im[w][i]);
                a[i] = a[i] + x * x + y * y;
                br[i] = br[i] + x;
                bi[i] = bi[i] + y;
            }
        }
        let total: T = self.counts.iter().copied().sum();
        let full = Self::finish(&a, &br, &bi, total, count(m));
        if m < 3 {
            return (full, Vec::new());
        }
        let reps = (0..m)
            .into_par_iter()
            .map(|w| {
                let mut a2 = a.clone();
                let mut r2 = br.clone();
                let mut i2 = bi.clone();
                for i in 0..k {
                    let (x, y) = (self.re[w][i], self.im[w][i]);
                    a2[i] = a2[i] - (x * x + y * y);
                    r2[i] = r2[i] - x;
                    i2[i] = i2[i] - y;
                }
                Self::finish(&a2, &r2, &i2, total - self.counts[w], count(m - 1))
            })
            .collect();
        (full, reps)
    }
}

/// Two-level form factor of the windows on `k_grid` (inverse unfolded
/// spacings), normalized by the mean window count so that `F -> 1` at large
/// `k`. Error bars are delete-one jackknife over windows.
pub fn form_factor_estimate<T: Real>(
    windows: &[LevelWindow<T>],
    k_grid: &[T],
) -> Result<FormFactorEstimate<T>, EstimatorError> {
    check_grid(k_grid, "k grid", false)?;
    let sums = FourierSums::new(windows, k_grid)?;
    let (values, reps) = sums.with_replicates();
    let stderr = (0..k_grid.len())
        .map(|i| {
            let col: Vec<T> = reps.iter().map(|r| r[i]).collect();
            jackknife_stderr(&col)
        })
        .collect();
    debug_assert_eq!(sums.estimate(None).len(), values.len());
    let total: T = sums.counts.iter().copied().sum();
    Ok(FormFactorEstimate {
        curve: curve(CurveKind::FormFactor, k_grid.to_vec(), values, stderr)?,
        n_windows: windows.len(),
        mean_count: total / count(windows.len()),
        local_density: windows[0].local_density,
    })
}

/// Number variance obtained by integrating the estimated form factor,
/// `Sigma^2(r) = 2 int F(k) sin^2(pi k r) / (pi k)^2 dk`, with the trapezoid
/// rule on `k_grid` (which must start at 0) and `F = 1` beyond its end.
///
/// The grid spacing must resolve both `1/r` and the window's own resolution
/// `1/(2W)`. Error bars propagate the jackknife replicates of `F`.
pub fn sigma2_from_form_factor<T: Real>(
    windows: &[LevelWindow<T>],
    k_grid: &[T],
    r_grid: &[T],
) -> Result<Curve<T>, EstimatorError> {
    check_grid(k_grid, "k grid", true)?;
    check_grid(r_grid, "r grid", true)?;
    if k_grid[0] != T::zero() || k_grid.len() < 2 {
        return Err(EstimatorError::InvalidArgument(
            "k grid must start at 0 and have at least two points".into(),
        ));
    }
    let sums = FourierSums::new(windows, k_grid)?;
    let (full, reps) = sums.with_replicates();
    let pi = T::PI();
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let kmax = k_grid[k_grid.len() - 1];
    let weights: Vec<Vec<T>> = r_grid
        .iter()
        .map(|&r| {
            (0..k_grid.len())
                .map(|i| {
                    let lo = if i > 0 {
                        k_grid[i] - k_grid[i - 1]
                    } else {
                        T::zero()
                    };
                    let hi = if i + 1 < k_grid.len() {
                        k_grid[i + 1] - k_grid[i]
                    } else {
                        T::zero()
                    };
                    let k = k_grid[i];
                    let g = if k == T::zero() {
                        r * r
                    } else {
                        let s = (pi * k * r).sin() / (pi * k);
                        s * s
                    };
                    two * half * (lo + hi) * g
                })
                .collect()
        })
        .collect();
    let apply = |f: &[T], j: usize| -> T {
        let body: T = weights[j].iter().zip(f).map(|(&w, &v)| w * v).sum();
        body + unit_tail(kmax, r_grid[j])
    };
    let values: Vec<T> = (0..r_grid.len()).map(|j| apply(&full, j)).collect();
    let stderr = (0..r_grid.len())
        .map(|j| {
            let col: Vec<T> = reps.iter().map(|f| apply(f, j)).collect();
            jackknife_stderr(&col)
        })
        .collect();
    curve(CurveKind::NumberVariance, r_grid.to_vec(), values, stderr)
}
