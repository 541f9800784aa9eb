//! Realizations to windows: sampling (or cache reads), embedding, unfolding
//! and window extraction, in parallel over realization indices.
//!
//! Every realization draws from its own RNG stream, and results are
//! collected in index order, so outputs do not depend on the thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::embedding::{
    window_from_one_particle, EmbeddingError, EmpiricalUnfolding, LevelWindow, TentUnfolding,
    Unfolding, DEFAULT_UNFOLDING_KNOTS, MIN_UNFOLDING_REALIZATIONS,
};
use crate::ensembles::{
    sample_spectrum, DensityMode, EnsembleConfig, EnsembleError, OneParticleSpectrum, SpectrumCache,
};
use crate::scalar::{count, lit, Real};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Where one-particle spectra come from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Sample,
    /// Read from the cache, sampling and storing missing entries.
    Cache(&'a SpectrumCache),
}

impl Source<'_> {
    pub fn fetch<T: Real>(
        &self,
        config: &EnsembleConfig,
        index: u64,
    ) -> Result<OneParticleSpectrum<T>, EnsembleError> {
        match self {
            Source::Sample => sample_spectrum(config, index),
            Source::Cache(cache) => {
                if cache.contains(config, index) {
                    cache.load(config, index)
                } else {
                    let sp = sample_spectrum(config, index)?;
                    cache.store(&sp)?;
                    Ok(sp)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRequest<T> {
    pub zeta_centers: Vec<T>,
    pub half_width: T,
    /// Rejects placements whose mean density varies more than this.
    pub max_density_variation: Option<T>,
    pub unfolding_knots: usize,
}

impl<T: Real> WindowRequest<T> {
    pub fn new(zeta_centers: Vec<T>, half_width: T) -> Self {
        WindowRequest {
            zeta_centers,
            half_width,
            max_density_variation: None,
            unfolding_knots: DEFAULT_UNFOLDING_KNOTS,
        }
    }
}

/// The windows of every realization at one `zeta` target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet<T> {
    pub zeta_center: T,
    pub windows: Vec<LevelWindow<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput<T> {
    pub sets: Vec<WindowSet<T>>,
    /// The ensemble-averaged map, in semicircle mode.
    pub unfolding: Option<EmpiricalUnfolding<T>>,
    /// One-particle levels beyond the semicircle edge, summed over
    /// realizations (uniform mode).
    pub clipped: usize,
}

/// Samples (or loads) every realization once, e.g. to fill a cache.
pub fn generate<T: Real>(
    config: &EnsembleConfig,
    source: Source<'_>,
) -> Result<usize, PipelineError> {
    config.validate()?;
    let clipped: Vec<usize> = (0..config.realizations)
        .into_par_iter()
        .map(|i| source.fetch::<T>(config, i).map(|sp| sp.clipped))
        .collect::<Result<_, _>>()?;
    Ok(clipped.into_iter().sum())
}

/// Ensemble-averaged unfolding of the two-particle spectrum built from the
/// mean cumulative count at `knots` equally spaced points covering
/// `|xi| <= 1.05 * 4 sqrt(N)`.
pub fn empirical_unfolding<T: Real>(
    config: &EnsembleConfig,
    source: Source<'_>,
    knots: usize,
) -> Result<EmpiricalUnfolding<T>, PipelineError> {
    if (config.realizations as usize) < MIN_UNFOLDING_REALIZATIONS {
        return Err(PipelineError::InvalidRequest(format!(
            "empirical unfolding needs at least {MIN_UNFOLDING_REALIZATIONS} realizations, got {}",
            config.realizations
        )));
    }
    if knots < 4 {
        return Err(PipelineError::InvalidRequest(format!(
            "need at least 4 knots, got {knots}"
        )));
    }
    let reach = lit::<T>(4.2) * count::<T>(config.n_levels).sqrt();
    let step = (reach + reach) / count::<T>(knots - 1);
    let grid: Vec<T> = (0..knots).map(|i| -reach + step * count::<T>(i)).collect();
    // Integer sums keep the reduction exact and order independent.
    let totals = (0..config.realizations)
        .into_par_iter()
        .map(|i| -> Result<Vec<u64>, PipelineError> {
            let sp = source.fetch::<T>(config, i)?;
            let mut bins = vec![0u64; knots + 1];
            let levels = &sp.levels;
            for a in 0..levels.len() {
                for b in a + 1..levels.len() {
                    let x = levels[a] + levels[b];
                    // Counted at every knot >= x.
                    let pos = ((x + reach) / step).ceil();
                    let idx = if pos <= T::zero() {
                        0
                    } else {
                        pos.to_usize().unwrap_or(knots).min(knots)
                    };
                    bins[idx] += 1;
                }
            }
            Ok(bins)
        })
        .try_reduce(
            || vec![0u64; knots + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let m = config.realizations as f64;
    let mut running = 0u64;
    let mean: Vec<T> = totals[..knots]
        .iter()
        .map(|&c| {
            running += c;
            lit(running as f64 / m)
        })
        .collect();
    let d = config.two_particle_count();
    Ok(EmpiricalUnfolding::from_mean_counts(grid, mean, count(d))?)
}

/// Windows at each requested `zeta` target for every realization.
///
/// Uniform mode uses the tent unfolding; semicircle mode first builds the
/// ensemble-averaged map (a second pass over the same realizations).
pub fn collect_windows<T: Real>(
    config: &EnsembleConfig,
    request: &WindowRequest<T>,
    source: Source<'_>,
) -> Result<PipelineOutput<T>, PipelineError> {
    config.validate()?;
    if request.zeta_centers.is_empty() {
        return Err(PipelineError::InvalidRequest("no zeta targets".into()));
    }
    match config.density_mode {
        DensityMode::Uniform => {
            let tent = TentUnfolding { n: config.n_levels };
            run(config, request, source, &tent, None)
        }
        DensityMode::Semicircle => {
            let map = empirical_unfolding(config, source, request.unfolding_knots)?;
            run(config, request, source, &map.clone(), Some(map))
        }
    }
}

fn run<T: Real, U: Unfolding<T> + Sync>(
    config: &EnsembleConfig,
    request: &WindowRequest<T>,
    source: Source<'_>,
    unfolding: &U,
    empirical: Option<EmpiricalUnfolding<T>>,
) -> Result<PipelineOutput<T>, PipelineError> {
    // Validate placements once, before any sampling.
    for &z in &request.zeta_centers {
        let p = crate::embedding::place_window(unfolding, z, request.half_width)?;
        if let Some(limit) = request.max_density_variation {
            if p.density_variation > limit {
                return Err(EmbeddingError::Window(format!(
                    "mean density varies by {:.2}% across the window at zeta={z}",
                    crate::scalar::to_f64(p.density_variation) * 100.0
                ))
                .into());
            }
        }
    }
    let per_realization: Vec<(Vec<LevelWindow<T>>, usize)> = (0..config.realizations)
        .into_par_iter()
        .map(|i| -> Result<_, PipelineError> {
            let sp = source.fetch::<T>(config, i)?;
            let windows = request
                .zeta_centers
                .iter()
                .map(|&z| window_from_one_particle(&sp, unfolding, z, request.half_width))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((windows, sp.clipped))
        })
        .collect::<Result<_, _>>()?;
    let mut sets: Vec<WindowSet<T>> = request
        .zeta_centers
        .iter()
        .map(|&z| WindowSet {
            zeta_center: z,
            windows: Vec::with_capacity(per_realization.len()),
        })
        .collect();
    let mut clipped = 0;
    for (windows, c) in per_realization {
        clipped += c;
        for (set, w) in sets.iter_mut().zip(windows) {
            set.windows.push(w);
        }
    }
    Ok(PipelineOutput {
        sets,
        unfolding: empirical,
        clipped,
    })
}
