use std::cell::Cell;

use crate::quadrature::{integrate_finite_with, QuadratureOptions};
use crate::scalar::{lit, Real};

use super::{sigma2, sigma2_saturation, AnalyticError, AnalyticModel};

/// `Delta3(r) = (2/r^4) int_0^r (r^3 - 2 r^2 s + s^3) Sigma^2(s) ds`,
/// integrated as `2 int_0^1 (1 - 2u + u^3) Sigma^2(r u) du`.
pub fn delta3_from_sigma2<T, F>(r: T, sigma2: F) -> Result<T, AnalyticError>
where
    T: Real,
    F: Fn(T) -> Result<T, AnalyticError>,
{
    if !(r > T::zero()) || !r.is_finite() {
        return Err(AnalyticError::InvalidArgument(format!(
            "r must be positive, got {r}"
        )));
    }
    let failure = Cell::new(None);
    let integrand = |u: T| {
        let kernel = T::one() - lit::<T>(2.0) * u + u * u * u;
        match sigma2(r * u) {
            Ok(v) => kernel * v,
            Err(e) => {
                failure.set(Some(e));
                T::zero()
            }
        }
    };
    let opts = QuadratureOptions::absolute(lit::<T>(1e-13)).with_rel_tol(lit(1e-11));
    let res = integrate_finite_with(integrand, T::zero(), T::one(), &[], &opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(lit::<T>(2.0) * res?.value)
}

/// `Delta3(r)` of a model through its number variance.
pub fn delta3_model<T: Real>(r: T, model: &AnalyticModel<T>) -> Result<T, AnalyticError> {
    delta3_from_sigma2(r, |s| sigma2(s, model))
}

/// Large-r limit of `Delta3`, half the number-variance saturation.
pub fn delta3_saturation<T: Real>(model: &AnalyticModel<T>) -> Result<T, AnalyticError> {
    Ok(sigma2_saturation(model)? / lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input() {
        let v = delta3_from_sigma2(17.0f64, |_| Ok(3.0)).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn poisson_input() {
        let v = delta3_model(30.0f64, &AnalyticModel::Poisson).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn propagates_errors() {
        let r = delta3_from_sigma2(1.0f64, |_| {
            Err(AnalyticError::InvalidArgument("boom".into()))
        });
        assert!(r.is_err());
        assert!(delta3_from_sigma2(0.0f64, |_| Ok(1.0)).is_err());
    }
}
