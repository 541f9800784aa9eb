//! Embedded random-matrix ensembles of two non-interacting particles.
//!
//! One-particle spectra are drawn from the Gaussian orthogonal, unitary or
//! symplectic ensembles (or Poisson levels), unfolded to a uniform or
//! semicircle density, and combined into the two-particle spectrum of all
//! pair sums. The crate measures its fluctuations (form factor, number
//! variance, spacing distributions) and evaluates the closed-form results
//! they are compared with, including the saturation of the number variance.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.
//!
//! ```
//! use nvsat::{sigma2_closed, sigma2_saturation, AnalyticModel64, Symmetry};
//!
//! let model = AnalyticModel64::embedded(Symmetry::Unitary, 499.75).unwrap();
//! let sat = sigma2_saturation(&model).unwrap();
//! let far = sigma2_closed(3500.0, &model).unwrap();
//! assert!((far / sat - 1.0).abs() < 0.02);
//! ```

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod curve;
pub mod embedding;
pub mod ensembles;
pub mod estimators;
pub mod pipeline;
pub mod quadrature;
pub mod scalar;
pub mod specfun;
pub mod symmetry;

pub use analytic::{
    delta3_from_sigma2, delta3_model, delta3_saturation, f2_two_particle, f2_windowed, sigma2,
    sigma2_closed, sigma2_quadrature, sigma2_saturation, AnalyticError, AnalyticModel,
};
pub use curve::{Curve, CurveKind};
pub use embedding::{EmpiricalUnfolding, LevelWindow, TentUnfolding, Unfolding};
pub use ensembles::{Beta, DensityMode, EnsembleConfig, OneParticleSpectrum, SpectrumCache};
pub use estimators::{
    form_factor_estimate, number_variance_estimate, spacing_histogram, NumberVarianceOptions,
};
pub use pipeline::{collect_windows, PipelineError, Source, WindowRequest};
pub use scalar::Real;
pub use symmetry::Symmetry;

pub type Curve64 = Curve<f64>;
pub type LevelWindow64 = LevelWindow<f64>;
pub type AnalyticModel64 = AnalyticModel<f64>;
pub type EmpiricalUnfolding64 = EmpiricalUnfolding<f64>;
pub type OneParticleSpectrum64 = OneParticleSpectrum<f64>;
pub type Curve32 = Curve<f32>;
pub type LevelWindow32 = LevelWindow<f32>;
