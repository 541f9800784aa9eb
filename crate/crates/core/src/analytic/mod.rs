//! Closed-form fluctuation statistics of non-interacting two-particle
//! embedded ensembles.
//!
//! Every embedded model is parameterized by the local two-particle density
//! `R = R1^(2)(xi)` rather than by `(xi, N)`, so the same formulas serve any
//! way of obtaining the density. Unfolded distances are `r`, and the
//! corresponding one-particle distance is `Delta = r / R`; form-factor
//! arguments scale as `chi = k R`.

mod cluster;
mod form_factor;
mod rigidity;
mod sigma2;

use std::fmt;

use thiserror::Error;

use crate::quadrature::QuadratureError;
use crate::scalar::{to_f64, Real};
use crate::specfun::SpecfunError;
use crate::symmetry::Symmetry;

pub use cluster::{y2_egue_real_space, y2_two_particle};
pub use form_factor::{b2_one_particle, f2_two_particle, f2_windowed};
pub use rigidity::{delta3_from_sigma2, delta3_model, delta3_saturation};
pub(crate) use sigma2::unit_tail;
pub use sigma2::{
    egoe_sigma_correction, sigma2, sigma2_closed, sigma2_closed_without_sigma, sigma2_quadrature,
    sigma2_saturation, sigma2_saturation_quadrature, sigma2_small_r, small_r_coefficient,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("{operation} is not defined for model {model}")]
    Unsupported {
        operation: &'static str,
        model: String,
    },
    #[error("saturation integral diverges for model {model}: the form factor does not vanish faster than |k| at the origin")]
    Divergent { model: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Selector for the closed-form statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticModel<T> {
    /// Two-particle embedded GUE with local density `R1^(2)(xi)`.
    Egue { density: T },
    /// Two-particle embedded GSE.
    Egse { density: T },
    /// Two-particle embedded GOE.
    Egoe { density: T },
    /// Uncorrelated levels with all frequencies `|k| <= delta` removed.
    PoissonCutoff { delta: T },
    /// Gaussian-ensemble form factor with frequencies `|k| <= delta` removed.
    GxeCutoff { delta: T, symmetry: Symmetry },
    /// Uncorrelated levels, `F = 1`.
    Poisson,
    /// Unfolded one-particle Gaussian ensemble, `F = 1 - b2`.
    Gaussian(Symmetry),
}

impl<T: Real> AnalyticModel<T> {
    pub fn embedded(symmetry: Symmetry, density: T) -> Result<Self, AnalyticError> {
        if !(density > T::zero()) || !density.is_finite() {
            return Err(AnalyticError::InvalidModel(format!(
                "local density must be positive and finite, got {density}"
            )));
        }
        Ok(match symmetry {
            Symmetry::Orthogonal => AnalyticModel::Egoe { density },
            Symmetry::Unitary => AnalyticModel::Egue { density },
            Symmetry::Symplectic => AnalyticModel::Egse { density },
        })
    }

    pub fn poisson_cutoff(delta: T) -> Result<Self, AnalyticError> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(AnalyticError::InvalidModel(format!(
                "cutoff delta must be positive, got {delta}"
            )));
        }
        Ok(AnalyticModel::PoissonCutoff { delta })
    }

    pub fn gxe_cutoff(delta: T, symmetry: Symmetry) -> Result<Self, AnalyticError> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(AnalyticError::InvalidModel(format!(
                "cutoff delta must be positive, got {delta}"
            )));
        }
        Ok(AnalyticModel::GxeCutoff { delta, symmetry })
    }

    /// Checks the invariants of a hand-built value.
    pub fn validate(&self) -> Result<(), AnalyticError> {
        match *self {
            AnalyticModel::Egue { density }
            | AnalyticModel::Egse { density }
            | AnalyticModel::Egoe { density } => {
                Self::embedded(Symmetry::Unitary, density).map(|_| ())
            }
            AnalyticModel::PoissonCutoff { delta } => Self::poisson_cutoff(delta).map(|_| ()),
            AnalyticModel::GxeCutoff { delta, symmetry } => {
                Self::gxe_cutoff(delta, symmetry).map(|_| ())
            }
            AnalyticModel::Poisson | AnalyticModel::Gaussian(_) => Ok(()),
        }
    }

    /// Symmetry class and density of an embedded model.
    pub fn embedded_parts(&self) -> Option<(Symmetry, T)> {
        match *self {
            AnalyticModel::Egue { density } => Some((Symmetry::Unitary, density)),
            AnalyticModel::Egse { density } => Some((Symmetry::Symplectic, density)),
            AnalyticModel::Egoe { density } => Some((Symmetry::Orthogonal, density)),
            _ => None,
        }
    }
}

impl<T: Real> fmt::Display for AnalyticModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AnalyticModel::Egue { density } => write!(f, "egue(R={})", to_f64(density)),
            AnalyticModel::Egse { density } => write!(f, "egse(R={})", to_f64(density)),
            AnalyticModel::Egoe { density } => write!(f, "egoe(R={})", to_f64(density)),
            AnalyticModel::PoissonCutoff { delta } => {
                write!(f, "poisson-cutoff(delta={})", to_f64(delta))
            }
            AnalyticModel::GxeCutoff { delta, symmetry } => {
                write!(f, "{symmetry}-cutoff(delta={})", to_f64(delta))
            }
            AnalyticModel::Poisson => f.write_str("poisson"),
            AnalyticModel::Gaussian(s) => write!(f, "{s}"),
        }
    }
}

/// A two-point form factor `F(k)` (even in `k`) together with the structural
/// hints the quadrature routines need.
pub trait FormFactor<T: Real> {
    fn value(&self, k: T) -> T;

    /// Positive abscissae where `F` has kinks or branch changes.
    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }

    /// Positive abscissae where `F` is (integrably) singular.
    fn singular_points(&self) -> Vec<T> {
        Vec::new()
    }

    /// `Some(K)` if `F(k) == 1` identically for `|k| >= K`.
    fn unity_beyond(&self) -> Option<T> {
        None
    }

    /// Characteristic scale of `k` over which `F` varies.
    fn scale(&self) -> T {
        T::one()
    }
}

impl<T: Real, F: Fn(T) -> T> FormFactor<T> for F {
    fn value(&self, k: T) -> T {
        self(k)
    }
}

impl<T: Real> FormFactor<T> for AnalyticModel<T> {
    fn value(&self, k: T) -> T {
        f2_two_particle(k, self)
    }

    fn breakpoints(&self) -> Vec<T> {
        let two = T::one() + T::one();
        match *self {
            AnalyticModel::Egue { density } | AnalyticModel::Egoe { density } => {
                vec![T::one() / density]
            }
            AnalyticModel::Egse { density } => vec![T::one() / density, two / density],
            AnalyticModel::PoissonCutoff { delta } => vec![delta],
            AnalyticModel::GxeCutoff { delta, symmetry } => {
                let mut v = vec![delta];
                match symmetry {
                    Symmetry::Unitary | Symmetry::Orthogonal => v.push(T::one()),
                    Symmetry::Symplectic => v.extend([T::one(), two]),
                }
                v.retain(|&x| x >= delta);
                v.dedup();
                v
            }
            AnalyticModel::Poisson => Vec::new(),
            AnalyticModel::Gaussian(Symmetry::Symplectic) => vec![T::one(), two],
            AnalyticModel::Gaussian(_) => vec![T::one()],
        }
    }

    fn singular_points(&self) -> Vec<T> {
        match *self {
            AnalyticModel::Egse { density } => vec![T::one() / density],
            AnalyticModel::GxeCutoff {
                delta,
                symmetry: Symmetry::Symplectic,
            } if delta < T::one() => vec![T::one()],
            AnalyticModel::Gaussian(Symmetry::Symplectic) => vec![T::one()],
            _ => Vec::new(),
        }
    }

    fn unity_beyond(&self) -> Option<T> {
        let two = T::one() + T::one();
        match *self {
            AnalyticModel::Egue { density } => Some(T::one() / density),
            AnalyticModel::Egse { density } => Some(two / density),
            AnalyticModel::Egoe { .. } => None,
            AnalyticModel::PoissonCutoff { delta } => Some(delta),
            AnalyticModel::GxeCutoff { delta, symmetry } => match symmetry {
                Symmetry::Unitary => Some(delta.max(T::one())),
                Symmetry::Symplectic => Some(delta.max(two)),
                Symmetry::Orthogonal => None,
            },
            AnalyticModel::Poisson => Some(T::zero()),
            AnalyticModel::Gaussian(Symmetry::Unitary) => Some(T::one()),
            AnalyticModel::Gaussian(Symmetry::Symplectic) => Some(two),
            AnalyticModel::Gaussian(Symmetry::Orthogonal) => None,
        }
    }

    fn scale(&self) -> T {
        match *self {
            AnalyticModel::Egue { density }
            | AnalyticModel::Egse { density }
            | AnalyticModel::Egoe { density } => T::one() / density,
            AnalyticModel::PoissonCutoff { delta } => delta,
            _ => T::one(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(AnalyticModel::embedded(Symmetry::Unitary, 0.0f64).is_err());
        assert!(AnalyticModel::embedded(Symmetry::Unitary, f64::NAN).is_err());
        assert!(AnalyticModel::poisson_cutoff(-1.0f64).is_err());
        assert!(AnalyticModel::gxe_cutoff(0.0f64, Symmetry::Orthogonal).is_err());
        let m = AnalyticModel::embedded(Symmetry::Symplectic, 3.0f64).unwrap();
        assert_eq!(m, AnalyticModel::Egse { density: 3.0 });
        assert!(AnalyticModel::Egoe { density: -2.0f64 }.validate().is_err());
    }

    #[test]
    fn display_names() {
        assert_eq!(
            AnalyticModel::Egue { density: 2.0f64 }.to_string(),
            "egue(R=2)"
        );
        assert_eq!(
            AnalyticModel::GxeCutoff {
                delta: 0.5f64,
                symmetry: Symmetry::Orthogonal
            }
            .to_string(),
            "goe-cutoff(delta=0.5)"
        );
    }
}
