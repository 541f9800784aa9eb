//! Ensemble estimators over unfolded level windows.

mod correlation;
mod form_factor;
mod number_variance;
mod spacing;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Curve, CurveError, CurveKind};
use crate::embedding::LevelWindow;
use crate::scalar::{count, to_f64, Real};

pub use correlation::{cluster_function_estimate, density_histogram};
pub use form_factor::{form_factor_estimate, sigma2_from_form_factor, FormFactorEstimate};
pub use number_variance::{
    number_variance_estimate, NumberVarianceEstimate, NumberVarianceOptions,
};
pub use spacing::{poisson_pk, poisson_pk_bin_mean, spacing_histogram, SpacingHistogram};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("need at least {needed} windows, got {got}")]
    TooFewWindows { needed: usize, got: usize },
    #[error("windows are empty")]
    EmptyWindows,
    #[error("windows disagree: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Descriptive fields written alongside every estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMetadata {
    pub kind: CurveKind,
    pub config_hash: Option<String>,
    pub zeta_center: f64,
    pub xi_center: f64,
    pub window_half_width: f64,
    pub local_density: f64,
    pub n_windows: usize,
    pub mean_count: f64,
    pub grid: Option<String>,
}

impl EstimateMetadata {
    pub fn from_windows<T: Real>(
        kind: CurveKind,
        windows: &[LevelWindow<T>],
    ) -> Result<Self, EstimatorError> {
        let first = common_geometry(windows)?;
        Ok(EstimateMetadata {
            kind,
            config_hash: None,
            zeta_center: to_f64(first.zeta_center),
            xi_center: to_f64(first.xi_center),
            window_half_width: to_f64(first.half_width),
            local_density: to_f64(first.local_density),
            n_windows: windows.len(),
            mean_count: to_f64(mean_count(windows)),
            grid: None,
        })
    }

    /// `key=value` pairs for the CSV comment header.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("zeta_center".to_string(), self.zeta_center.to_string()),
            ("xi_center".to_string(), self.xi_center.to_string()),
            (
                "window_half_width".to_string(),
                self.window_half_width.to_string(),
            ),
            ("local_density".to_string(), self.local_density.to_string()),
            ("n_windows".to_string(), self.n_windows.to_string()),
            ("mean_count".to_string(), self.mean_count.to_string()),
        ];
        if let Some(c) = &self.config_hash {
            h.push(("config_hash".to_string(), c.clone()));
        }
        if let Some(g) = &self.grid {
            h.push(("grid".to_string(), g.clone()));
        }
        h
    }
}

/// Checks that all windows share one placement and returns the first.
fn common_geometry<T: Real>(windows: &[LevelWindow<T>]) -> Result<&LevelWindow<T>, EstimatorError> {
    let first = windows
        .first()
        .ok_or(EstimatorError::TooFewWindows { needed: 1, got: 0 })?;
    for w in windows {
        if w.half_width != first.half_width || w.zeta_center != first.zeta_center {
            return Err(EstimatorError::Inconsistent(format!(
                "window at zeta={} half-width={} differs from zeta={} half-width={}",
                w.zeta_center, w.half_width, first.zeta_center, first.half_width
            )));
        }
    }
    Ok(first)
}

fn mean_count<T: Real>(windows: &[LevelWindow<T>]) -> T {
    let total: usize = windows.iter().map(|w| w.levels.len()).sum();
    count::<T>(total) / count::<T>(windows.len().max(1))
}

/// Delete-one jackknife error from leave-one-out replicates.
pub fn jackknife_stderr<T: Real>(replicates: &[T]) -> T {
    let m = replicates.len();
    if m < 2 {
        return T::zero();
    }
    let mf = count::<T>(m);
    let mean = replicates.iter().copied().sum::<T>() / mf;
    let ss: T = replicates.iter().map(|&x| (x - mean) * (x - mean)).sum();
    ((mf - T::one()) / mf * ss).sqrt()
}

/// Curve of an estimate with an error column; the error is clamped to be
/// non-negative and finite.
fn curve<T: Real>(
    kind: CurveKind,
    abscissa: Vec<T>,
    values: Vec<T>,
    stderr: Vec<T>,
) -> Result<Curve<T>, EstimatorError> {
    let stderr = stderr
        .into_iter()
        .map(|s| {
            if s.is_finite() && s > T::zero() {
                s
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(Curve::new(kind, abscissa, values, stderr)?)
}

fn check_grid<T: Real>(grid: &[T], name: &str, allow_zero: bool) -> Result<(), EstimatorError> {
    if grid.is_empty() {
        return Err(EstimatorError::InvalidArgument(format!("{name} is empty")));
    }
    for (i, &x) in grid.iter().enumerate() {
        let ok = x.is_finite() && (x > T::zero() || (allow_zero && x == T::zero()));
        if !ok {
            return Err(EstimatorError::InvalidArgument(format!(
                "{name}[{i}] = {x} is not {}",
                if allow_zero {
                    "finite and >= 0"
                } else {
                    "finite and > 0"
                }
            )));
        }
        if i > 0 && !(x > grid[i - 1]) {
            return Err(EstimatorError::InvalidArgument(format!(
                "{name} must be strictly increasing"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::embedding::LevelWindow;

    /// Windows of independent uniform levels at unit density.
    pub fn poisson_windows(m: usize, half_width: f64, seed: u64) -> Vec<LevelWindow<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|i| {
                let n = poisson_count(&mut rng, 2.0 * half_width);
                let mut levels: Vec<f64> = (0..n)
                    .map(|_| rng.gen_range(-half_width..half_width))
                    .collect();
                levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
                window(levels, half_width, i as u64)
            })
            .collect()
    }

    pub fn window(levels: Vec<f64>, half_width: f64, index: u64) -> LevelWindow<f64> {
        LevelWindow {
            zeta_center: 0.0,
            xi_center: 0.0,
            half_width,
            local_density: 1.0,
            density_variation: 0.0,
            levels,
            realization_index: index,
        }
    }

    fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
        use rand_distr::{Distribution, Poisson};
        Poisson::new(mean).unwrap().sample(rng) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_sample_mean_is_standard_error() {
        let x = [1.0f64, 2.0, 4.0, 7.0, 11.0];
        let m = x.len() as f64;
        let total: f64 = x.iter().sum();
        let loo: Vec<f64> = x.iter().map(|v| (total - v) / (m - 1.0)).collect();
        let mean = total / m;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        assert!((jackknife_stderr(&loo) - (var / m).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn metadata_rejects_mixed_windows() {
        let mut w = test_support::poisson_windows(3, 10.0, 1);
        w[1].half_width = 5.0;
        assert!(EstimateMetadata::from_windows(CurveKind::Density, &w).is_err());
        w[1].half_width = 10.0;
        let m = EstimateMetadata::from_windows(CurveKind::Density, &w).unwrap();
        assert_eq!(m.n_windows, 3);
        assert!(m.header().iter().any(|(k, _)| k == "mean_count"));
    }
}
