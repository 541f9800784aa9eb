//! One-particle spectra: Gaussian beta-ensembles and uncorrelated levels,
//! optionally unfolded to unit density on `[-N/2, N/2]`.

mod cache;
mod eigen;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{count, lit, to_f64, Real};
use crate::symmetry::Symmetry;

pub use cache::{config_hash, CacheFormat, SpectrumCache, CACHE_DIR_ENV, CACHE_MAGIC};
pub use eigen::tridiagonal_eigenvalues;

/// Smallest accepted number of one-particle levels.
pub const MIN_LEVELS: usize = 4;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error("realization {index} out of range (config has {realizations})")]
    IndexOutOfRange { index: u64, realizations: u64 },
    #[error("eigensolver failed for realization {index}")]
    Eigensolver { index: u64 },
    #[error("realization {index} has a degenerate level pair at {value:e}")]
    Degenerate { index: u64, value: f64 },
    #[error("spectrum cache {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("spectrum cache {path}: {reason}")]
    CacheFormat { path: String, reason: String },
}

/// Level statistics of the one-particle spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Beta {
    Orthogonal,
    Unitary,
    Symplectic,
    Poisson,
}

impl Beta {
    pub fn symmetry(self) -> Option<Symmetry> {
        match self {
            Beta::Orthogonal => Some(Symmetry::Orthogonal),
            Beta::Unitary => Some(Symmetry::Unitary),
            Beta::Symplectic => Some(Symmetry::Symplectic),
            Beta::Poisson => None,
        }
    }

    /// `1, 2, 4`, and `0` for Poisson.
    pub fn code(self) -> u32 {
        self.symmetry().map_or(0, Symmetry::beta)
    }

    pub fn from_code(code: u32) -> Option<Self> {
        if code == 0 {
            return Some(Beta::Poisson);
        }
        Symmetry::from_beta(code).map(Beta::from)
    }
}

impl From<Symmetry> for Beta {
    fn from(s: Symmetry) -> Self {
        match s {
            Symmetry::Orthogonal => Beta::Orthogonal,
            Symmetry::Unitary => Beta::Unitary,
            Symmetry::Symplectic => Beta::Symplectic,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.symmetry() {
            Some(s) => write!(f, "{s}"),
            None => f.write_str("poisson"),
        }
    }
}

impl FromStr for Beta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "0" | "poisson" => Ok(Beta::Poisson),
            other => Symmetry::from_str(other).map(Beta::from).map_err(|_| {
                format!("unknown ensemble '{s}' (expected 1, 2, 4, goe, gue, gse or poisson)")
            }),
        }
    }
}

/// Mean level density of the one-particle spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Unfolded to unit density on `[-N/2, N/2]`.
    #[default]
    Uniform,
    /// Raw eigenvalues with the semicircle density of radius `2 sqrt(N)`.
    Semicircle,
}

impl FromStr for DensityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(DensityMode::Uniform),
            "semicircle" => Ok(DensityMode::Semicircle),
            _ => Err(format!(
                "unknown density mode '{s}' (expected uniform or semicircle)"
            )),
        }
    }
}

impl fmt::Display for DensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DensityMode::Uniform => "uniform",
            DensityMode::Semicircle => "semicircle",
        })
    }
}

/// How Gaussian-ensemble eigenvalues are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Symmetric tridiagonal beta-ensemble model, `O(N^2)`.
    #[default]
    Tridiagonal,
    /// Full GOE/GUE matrices, kept as a cross-check for `beta = 1, 2`.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub beta: Beta,
    pub n_levels: usize,
    pub realizations: u64,
    pub seed: u64,
    #[serde(default)]
    pub density_mode: DensityMode,
    #[serde(default)]
    pub sampler: Sampler,
}

impl EnsembleConfig {
    pub fn new(
        beta: Beta,
        n_levels: usize,
        realizations: u64,
        seed: u64,
    ) -> Result<Self, EnsembleError> {
        let c = EnsembleConfig {
            beta,
            n_levels,
            realizations,
            seed,
            density_mode: DensityMode::Uniform,
            sampler: Sampler::Tridiagonal,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_density_mode(mut self, mode: DensityMode) -> Result<Self, EnsembleError> {
        self.density_mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Result<Self, EnsembleError> {
        self.sampler = sampler;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.n_levels < MIN_LEVELS {
            return Err(EnsembleError::InvalidConfig(format!(
                "n_levels must be >= {MIN_LEVELS}, got {}",
                self.n_levels
            )));
        }
        if self.realizations == 0 {
            return Err(EnsembleError::InvalidConfig(
                "realizations must be >= 1".into(),
            ));
        }
        if self.beta == Beta::Poisson && self.density_mode == DensityMode::Semicircle {
            return Err(EnsembleError::InvalidConfig(
                "Poisson spectra only support the uniform density mode".into(),
            ));
        }
        if self.sampler == Sampler::Dense && self.beta == Beta::Symplectic {
            return Err(EnsembleError::InvalidConfig(
                "the dense sampler covers beta = 1 and 2 only; use the tridiagonal sampler for beta = 4".into(),
            ));
        }
        Ok(())
    }

    /// Number of two-particle levels, `N (N - 1) / 2`.
    pub fn two_particle_count(&self) -> usize {
        self.n_levels * (self.n_levels - 1) / 2
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn check_index(&self, index: u64) -> Result<(), EnsembleError> {
        if index >= self.realizations {
            return Err(EnsembleError::IndexOutOfRange {
                index,
                realizations: self.realizations,
            });
        }
        Ok(())
    }
}

/// A sorted one-particle spectrum with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct OneParticleSpectrum<T> {
    pub levels: Vec<T>,
    pub config: EnsembleConfig,
    pub realization_index: u64,
    /// Raw eigenvalues clipped to the semicircle edge before unfolding.
    pub clipped: usize,
}

impl<T: Real> OneParticleSpectrum<T> {
    /// Checks that levels are strictly increasing.
    pub fn check_strictly_increasing(&self) -> Result<(), EnsembleError> {
        for w in self.levels.windows(2) {
            if !(w[1] > w[0]) {
                return Err(EnsembleError::Degenerate {
                    index: self.realization_index,
                    value: to_f64(w[0]),
                });
            }
        }
        Ok(())
    }
}

/// Raw eigenvalues of one Gaussian-ensemble draw, ascending, with mean
/// density the semicircle `sqrt(4N - x^2) / (2 pi)`.
pub fn sample_raw_spectrum<T: Real>(
    config: &EnsembleConfig,
    index: u64,
) -> Result<Vec<T>, EnsembleError> {
    config.validate()?;
    config.check_index(index)?;
    let symmetry = config.beta.symmetry().ok_or_else(|| {
        EnsembleError::InvalidConfig(
            "raw Gaussian spectra need beta = 1, 2 or 4, not Poisson".into(),
        )
    })?;
    let mut rng = config.rng(index);
    let n = config.n_levels;
    match config.sampler {
        Sampler::Tridiagonal => {
            let beta = f64::from(symmetry.beta());
            let diag_sd = (2.0 / beta).sqrt();
            let diag: Vec<T> = (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    lit(z * diag_sd)
                })
                .collect();
            let off: Vec<T> = (1..n)
                .rev()
                .map(|k| {
                    let chi2 =
                        ChiSquared::new(beta * k as f64).expect("positive degrees of freedom");
                    lit((chi2.sample(&mut rng) / beta).sqrt())
                })
                .collect();
            tridiagonal_eigenvalues(&diag, &off).ok_or(EnsembleError::Eigensolver { index })
        }
        Sampler::Dense => {
            let values = match symmetry {
                Symmetry::Orthogonal => dense_goe(n, &mut rng),
                Symmetry::Unitary => dense_gue(n, &mut rng),
                Symmetry::Symplectic => unreachable!("rejected by validate"),
            };
            let mut v: Vec<T> = values.into_iter().map(lit).collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EnsembleError::Eigensolver { index });
            }
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
            Ok(v)
        }
    }
}

fn dense_goe(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        m[(i, i)] = z * 2f64.sqrt();
        for j in 0..i {
            let z: f64 = rng.sample(StandardNormal);
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m.symmetric_eigenvalues().iter().copied().collect()
}

fn dense_gue(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    let h = 0.5f64.sqrt();
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        m[(i, i)] = Complex::new(z, 0.0);
        for j in 0..i {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex::new(re * h, im * h);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m.symmetric_eigenvalues().iter().copied().collect()
}

/// Integrated semicircle density of radius `2 sqrt(N)`, normalized to 1.
pub fn semicircle_cdf<T: Real>(x: T, n: usize) -> T {
    let y = (x / (lit::<T>(2.0) * count::<T>(n).sqrt()))
        .max(-T::one())
        .min(T::one());
    lit::<T>(0.5) + (y * (T::one() - y * y).sqrt() + y.asin()) / T::PI()
}

/// Maps raw semicircle eigenvalues to unit density on `[-N/2, N/2]` through
/// `x -> N F(x) - N/2`. Values beyond `+-2 sqrt(N)` are clipped to the edge;
/// the number clipped is returned alongside.
pub fn unfold_semicircle<T: Real>(raw: &[T], n: usize) -> (Vec<T>, usize) {
    let edge = lit::<T>(2.0) * count::<T>(n).sqrt();
    let nn = count::<T>(n);
    let half = nn / lit(2.0);
    let mut clipped = 0;
    let out = raw
        .iter()
        .map(|&x| {
            if x.abs() > edge {
                clipped += 1;
            }
            nn * semicircle_cdf(x, n) - half
        })
        .collect();
    (out, clipped)
}

/// One spectrum in the configured density mode.
pub fn sample_spectrum<T: Real>(
    config: &EnsembleConfig,
    index: u64,
) -> Result<OneParticleSpectrum<T>, EnsembleError> {
    if config.beta == Beta::Poisson {
        return sample_poisson_spectrum(config, index);
    }
    let raw = sample_raw_spectrum::<T>(config, index)?;
    let (levels, clipped) = match config.density_mode {
        DensityMode::Uniform => unfold_semicircle(&raw, config.n_levels),
        DensityMode::Semicircle => (raw, 0),
    };
    let sp = OneParticleSpectrum {
        levels,
        config: config.clone(),
        realization_index: index,
        clipped,
    };
    sp.check_strictly_increasing()?;
    Ok(sp)
}

/// `N` independent uniform levels on `[-N/2, N/2]`, sorted.
pub fn sample_poisson_spectrum<T: Real>(
    config: &EnsembleConfig,
    index: u64,
) -> Result<OneParticleSpectrum<T>, EnsembleError> {
    config.validate()?;
    config.check_index(index)?;
    if config.density_mode != DensityMode::Uniform {
        return Err(EnsembleError::InvalidConfig(
            "Poisson spectra are uniform".into(),
        ));
    }
    let mut rng = config.rng(index);
    let n = config.n_levels as f64;
    let mut levels: Vec<T> = (0..config.n_levels)
        .map(|_| lit(n * (rng.gen::<f64>() - 0.5)))
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    let sp = OneParticleSpectrum {
        levels,
        config: config.clone(),
        realization_index: index,
        clipped: 0,
    };
    sp.check_strictly_increasing()?;
    Ok(sp)
}
