//! Two-particle spectra of non-interacting fermions, their mean density,
//! unfolding maps and local analysis windows.

mod empirical;

use std::io::{self, Write};

use thiserror::Error;

use crate::curve::fmt17;
use crate::ensembles::OneParticleSpectrum;
use crate::scalar::{count, lit, to_f64, Real};

pub use empirical::{EmpiricalUnfolding, DEFAULT_UNFOLDING_KNOTS, MIN_UNFOLDING_REALIZATIONS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} = {value:e} lies outside [{lo:e}, {hi:e}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("window error: {0}")]
    Window(String),
    #[error("unfolding map: {0}")]
    Unfolding(String),
}

/// All pairwise sums `e_i + e_j`, `i < j`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleSpectrum<T> {
    pub levels: Vec<T>,
    pub n_one_particle: usize,
    pub realization_index: u64,
}

/// Sorted pairwise sums of strictly increasing one-particle levels.
pub fn pair_sums<T: Real>(levels: &[T]) -> Result<Vec<T>, EmbeddingError> {
    if levels.len() < 2 {
        return Err(EmbeddingError::InvalidArgument(format!(
            "need at least two one-particle levels, got {}",
            levels.len()
        )));
    }
    check_increasing(levels)?;
    let n = levels.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(levels[i] + levels[j]);
        }
    }
    out.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    Ok(out)
}

/// Sorted pairwise sums restricted to `[lo, hi]`, without building the full
/// two-particle spectrum.
pub fn pair_sums_in_range<T: Real>(levels: &[T], lo: T, hi: T) -> Result<Vec<T>, EmbeddingError> {
    check_increasing(levels)?;
    let mut out = Vec::new();
    let n = levels.len();
    for i in 0..n {
        let e = levels[i];
        let rest = &levels[i + 1..];
        let start = rest.partition_point(|&x| e + x < lo);
        let stop = rest.partition_point(|&x| e + x <= hi);
        out.extend(rest[start..stop].iter().map(|&x| e + x));
    }
    out.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    Ok(out)
}

fn check_increasing<T: Real>(levels: &[T]) -> Result<(), EmbeddingError> {
    for (i, w) in levels.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(EmbeddingError::InvalidArgument(format!(
                "one-particle levels must be strictly increasing (index {i})"
            )));
        }
    }
    Ok(())
}

pub fn two_particle_levels<T: Real>(
    sp: &OneParticleSpectrum<T>,
) -> Result<TwoParticleSpectrum<T>, EmbeddingError> {
    Ok(TwoParticleSpectrum {
        levels: pair_sums(&sp.levels)?,
        n_one_particle: sp.levels.len(),
        realization_index: sp.realization_index,
    })
}

/// Mean two-particle density for unit one-particle density on
/// `[-N/2, N/2]`: `N/2 - |xi|/2 - 1/4` on `[-N, N]`, clamped at zero.
pub fn tent_density<T: Real>(xi: T, n: usize) -> T {
    let nn = count::<T>(n);
    if xi.abs() > nn {
        return T::zero();
    }
    let half = lit::<T>(0.5);
    (half * nn - half * xi.abs() - lit(0.25)).max(T::zero())
}

/// `zeta(xi) = (N/2) xi - sign(xi) xi^2 / 4`, the integral of the tent
/// density without its constant `-1/4`.
pub fn unfold_tent<T: Real>(xi: T, n: usize) -> Result<T, EmbeddingError> {
    let nn = count::<T>(n);
    if !(xi.abs() <= nn) {
        return Err(EmbeddingError::Domain {
            what: "xi",
            value: to_f64(xi),
            lo: -(n as f64),
            hi: n as f64,
        });
    }
    Ok(nn / lit(2.0) * xi - xi.signum() * xi * xi / lit(4.0))
}

/// Inverse of [`unfold_tent`] on `|zeta| <= N^2/4`.
pub fn invert_unfold_tent<T: Real>(zeta: T, n: usize) -> Result<T, EmbeddingError> {
    let nn = count::<T>(n);
    let top = nn * nn / lit(4.0);
    if !(zeta.abs() <= top) {
        return Err(EmbeddingError::Domain {
            what: "zeta",
            value: to_f64(zeta),
            lo: -to_f64(top),
            hi: to_f64(top),
        });
    }
    // |xi| = N - sqrt(N^2 - 4|zeta|), written to avoid cancellation.
    let z = zeta.abs();
    let disc = (nn * nn - lit::<T>(4.0) * z).max(T::zero()).sqrt();
    let mag = lit::<T>(4.0) * z / (nn + disc);
    Ok(mag.copysign(zeta))
}

/// A monotone map from raw two-particle energies to unit mean density.
pub trait Unfolding<T: Real> {
    fn unfold(&self, xi: T) -> Result<T, EmbeddingError>;
    fn invert(&self, zeta: T) -> Result<T, EmbeddingError>;
    /// Mean level density at `xi`, the local scale for analytic comparisons.
    fn density(&self, xi: T) -> T;
}

/// The closed-form tent unfolding for `N` uniform one-particle levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TentUnfolding {
    pub n: usize,
}

impl<T: Real> Unfolding<T> for TentUnfolding {
    fn unfold(&self, xi: T) -> Result<T, EmbeddingError> {
        unfold_tent(xi, self.n)
    }

    fn invert(&self, zeta: T) -> Result<T, EmbeddingError> {
        invert_unfold_tent(zeta, self.n)
    }

    fn density(&self, xi: T) -> T {
        tent_density(xi, self.n)
    }
}

/// Unfolded two-particle levels around `zeta_center`, recentred to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelWindow<T> {
    pub zeta_center: T,
    pub xi_center: T,
    pub half_width: T,
    /// Mean two-particle density `R1^(2)` at `xi_center`.
    pub local_density: T,
    /// `(max - min) / center` of the mean density over the window.
    pub density_variation: T,
    pub levels: Vec<T>,
    pub realization_index: u64,
}

impl<T: Real> LevelWindow<T> {
    pub fn width(&self) -> T {
        self.half_width + self.half_width
    }

    /// Errors if the mean density varies by more than `max_variation` across
    /// the window.
    pub fn check_locality(&self, max_variation: T) -> Result<(), EmbeddingError> {
        if self.density_variation > max_variation {
            return Err(EmbeddingError::Window(format!(
                "mean density varies by {:.3}% across the window (limit {:.3}%)",
                to_f64(self.density_variation) * 100.0,
                to_f64(max_variation) * 100.0
            )));
        }
        Ok(())
    }
}

/// Where a window sits in raw and unfolded coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPlacement<T> {
    pub zeta_center: T,
    pub half_width: T,
    pub xi_center: T,
    pub xi_lo: T,
    pub xi_hi: T,
    pub local_density: T,
    pub density_variation: T,
}

/// Resolves the raw-energy extent of `[zeta_center - w, zeta_center + w]`.
pub fn place_window<T: Real, U: Unfolding<T>>(
    unfolding: &U,
    zeta_center: T,
    half_width: T,
) -> Result<WindowPlacement<T>, EmbeddingError> {
    if !(half_width > T::zero()) || !half_width.is_finite() {
        return Err(EmbeddingError::Window(format!(
            "half width must be positive, got {half_width}"
        )));
    }
    let edge = |z: T| {
        unfolding.invert(z).map_err(|e| {
            EmbeddingError::Window(format!(
                "window [{}, {}] reaches the edge of the unfolded support ({e})",
                to_f64(zeta_center - half_width),
                to_f64(zeta_center + half_width)
            ))
        })
    };
    let xi_lo = edge(zeta_center - half_width)?;
    let xi_hi = edge(zeta_center + half_width)?;
    let xi_center = edge(zeta_center)?;
    let local_density = unfolding.density(xi_center);
    let (d_lo, d_hi) = (unfolding.density(xi_lo), unfolding.density(xi_hi));
    if !(local_density > T::zero()) || !(d_lo > T::zero()) || !(d_hi > T::zero()) {
        return Err(EmbeddingError::Window(
            "mean density vanishes inside the window".into(),
        ));
    }
    let max = local_density.max(d_lo).max(d_hi);
    let min = local_density.min(d_lo).min(d_hi);
    Ok(WindowPlacement {
        zeta_center,
        half_width,
        xi_center,
        xi_lo,
        xi_hi,
        local_density,
        density_variation: (max - min) / local_density,
    })
}

fn collect_window<T: Real, U: Unfolding<T>>(
    unfolding: &U,
    placement: &WindowPlacement<T>,
    raw: impl IntoIterator<Item = T>,
    realization_index: u64,
) -> Result<LevelWindow<T>, EmbeddingError> {
    let lo = placement.zeta_center - placement.half_width;
    let hi = placement.zeta_center + placement.half_width;
    let mut levels = Vec::new();
    for xi in raw {
        let z = unfolding.unfold(xi)?;
        if z >= lo && z <= hi {
            levels.push(z - placement.zeta_center);
        }
    }
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    Ok(LevelWindow {
        zeta_center: placement.zeta_center,
        xi_center: placement.xi_center,
        half_width: placement.half_width,
        local_density: placement.local_density,
        density_variation: placement.density_variation,
        levels,
        realization_index,
    })
}

/// Window of a full two-particle spectrum under any unfolding.
pub fn extract_window_with<T: Real, U: Unfolding<T>>(
    tp: &TwoParticleSpectrum<T>,
    unfolding: &U,
    zeta_center: T,
    half_width: T,
) -> Result<LevelWindow<T>, EmbeddingError> {
    let p = place_window(unfolding, zeta_center, half_width)?;
    let start = tp.levels.partition_point(|&x| x < p.xi_lo);
    let stop = tp.levels.partition_point(|&x| x <= p.xi_hi);
    collect_window(
        unfolding,
        &p,
        tp.levels[start..stop].iter().copied(),
        tp.realization_index,
    )
}

/// Window of a full two-particle spectrum under the tent unfolding.
pub fn extract_window<T: Real>(
    tp: &TwoParticleSpectrum<T>,
    zeta_center: T,
    half_width: T,
    n: usize,
) -> Result<LevelWindow<T>, EmbeddingError> {
    extract_window_with(tp, &TentUnfolding { n }, zeta_center, half_width)
}

/// Same window as [`extract_window_with`] but built directly from the
/// one-particle levels, enumerating only the pairs that land inside it.
pub fn window_from_one_particle<T: Real, U: Unfolding<T>>(
    sp: &OneParticleSpectrum<T>,
    unfolding: &U,
    zeta_center: T,
    half_width: T,
) -> Result<LevelWindow<T>, EmbeddingError> {
    let p = place_window(unfolding, zeta_center, half_width)?;
    // Pad the raw range slightly so rounding in the inverse map cannot drop
    // an edge level; the unfolded test is exact.
    let pad = (p.xi_hi - p.xi_lo) * lit(1e-9);
    let raw = pair_sums_in_range(&sp.levels, p.xi_lo - pad, p.xi_hi + pad)?;
    collect_window(unfolding, &p, raw, sp.realization_index)
}

/// One row per level: `realization_index,zeta`.
pub fn write_windows_csv<T: Real, W: Write>(
    mut w: W,
    windows: &[LevelWindow<T>],
) -> io::Result<()> {
    writeln!(w, "realization_index,zeta")?;
    for win in windows {
        for &z in &win.levels {
            writeln!(w, "{},{}", win.realization_index, fmt17(to_f64(z)))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_spectrum, Beta, EnsembleConfig};

    #[test]
    fn pair_sum_examples() {
        assert_eq!(pair_sums(&[0.0f64, 1.0, 2.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            pair_sums(&[-1.5f64, -0.5, 0.5, 1.5]).unwrap(),
            vec![-2.0, -1.0, 0.0, 0.0, 1.0, 2.0]
        );
        assert!(pair_sums(&[1.0f64]).is_err());
        assert!(pair_sums(&[1.0f64, 1.0]).is_err());
    }

    #[test]
    fn ranged_pair_sums_match_full() {
        let c = EnsembleConfig::new(Beta::Unitary, 40, 1, 5).unwrap();
        let sp = sample_spectrum::<f64>(&c, 0).unwrap();
        let all = pair_sums(&sp.levels).unwrap();
        let some = pair_sums_in_range(&sp.levels, -3.0, 7.5).unwrap();
        let want: Vec<f64> = all
            .into_iter()
            .filter(|&x| (-3.0..=7.5).contains(&x))
            .collect();
        assert_eq!(some, want);
    }

    #[test]
    fn tent_values() {
        assert_eq!(tent_density(0.0f64, 1000), 499.75);
        assert!((tent_density(105.6f64, 1000) - 446.95).abs() < 1e-12);
        assert_eq!(tent_density(1000.0f64, 1000), 0.0);
        assert_eq!(tent_density(-1200.0f64, 1000), 0.0);
    }

    #[test]
    fn tent_unfolding_values() {
        assert_eq!(unfold_tent(0.0f64, 1000).unwrap(), 0.0);
        assert!((unfold_tent(3.0f64, 1000).unwrap() - 1497.75).abs() < 1e-9);
        assert!((unfold_tent(225.5f64, 1000).unwrap() - 100_037.437_5).abs() < 1e-6);
        assert!(unfold_tent(1000.5f64, 1000).is_err());
        let xi = invert_unfold_tent(50_000.0f64, 1000).unwrap();
        assert!((xi - 105.57).abs() < 0.005, "{xi}");
        assert_eq!(invert_unfold_tent(0.0f64, 1000).unwrap(), 0.0);
        assert!(invert_unfold_tent(250_001.0f64, 1000).is_err());
        assert!((invert_unfold_tent(-250_000.0f64, 1000).unwrap() + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn window_variation_at_mid_spectrum() {
        let p = place_window(&TentUnfolding { n: 1000 }, 50_000.0f64, 2000.0).unwrap();
        assert!(p.density_variation < 0.02, "{}", p.density_variation);
        assert!(place_window(&TentUnfolding { n: 1000 }, 50_000.0f64, 0.0).is_err());
        assert!(place_window(&TentUnfolding { n: 100 }, 2400.0f64, 200.0).is_err());
    }

    #[test]
    fn direct_and_full_windows_agree() {
        let c = EnsembleConfig::new(Beta::Orthogonal, 60, 1, 11).unwrap();
        let sp = sample_spectrum::<f64>(&c, 0).unwrap();
        let tp = two_particle_levels(&sp).unwrap();
        let a = extract_window(&tp, 300.0, 60.0, 60).unwrap();
        let b = window_from_one_particle(&sp, &TentUnfolding { n: 60 }, 300.0, 60.0).unwrap();
        assert_eq!(a, b);
        assert!(a.levels.iter().all(|z| z.abs() <= 60.0));
        assert!(a.levels.len() > 60);
    }

    #[test]
    fn window_csv_rows() {
        let w = LevelWindow {
            zeta_center: 0.0f64,
            xi_center: 0.0,
            half_width: 1.0,
            local_density: 1.0,
            density_variation: 0.0,
            levels: vec![-0.5, 0.25],
            realization_index: 7,
        };
        let mut buf = Vec::new();
        write_windows_csv(&mut buf, &[w]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("7,2.5000000000000000e-1"));
    }
}
