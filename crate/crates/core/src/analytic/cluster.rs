use crate::quadrature::{
    integrate_finite_with, integrate_oscillatory_tail, Oscillation, QuadratureOptions,
};
use crate::scalar::{lit, Real};

use super::{AnalyticError, AnalyticModel, FormFactor};

/// Two-particle cluster function `Y2^(2)(r)`, the Fourier transform of
/// `1 - F2^(2)`: `(2/R) int_0^inf (1 - F(chi)) cos(2 pi chi Delta) dchi`.
pub fn y2_two_particle<T: Real>(r: T, model: &AnalyticModel<T>) -> Result<T, AnalyticError> {
    let (_, density) = model
        .embedded_parts()
        .ok_or_else(|| AnalyticError::Unsupported {
            operation: "y2_two_particle",
            model: model.to_string(),
        })?;
    model.validate()?;
    if !r.is_finite() {
        return Err(AnalyticError::InvalidArgument(format!(
            "r must be finite, got {r}"
        )));
    }
    let unit = match *model {
        AnalyticModel::Egue { .. } => AnalyticModel::Egue { density: T::one() },
        AnalyticModel::Egse { .. } => AnalyticModel::Egse { density: T::one() },
        _ => AnalyticModel::Egoe { density: T::one() },
    };
    let w = lit::<T>(2.0) * T::PI() * (r / density).abs();
    let one_minus = |c: T| T::one() - unit.value(c);
    let opts = QuadratureOptions::absolute(lit::<T>(1e-12)).with_rel_tol(lit(1e-11));
    let mut pts = unit.breakpoints();
    pts.extend(unit.singular_points());
    let value = match unit.unity_beyond() {
        Some(k0) => {
            pts.retain(|&p| p < k0);
            integrate_finite_with(
                |c: T| one_minus(c) * (w * c).cos(),
                T::zero(),
                k0,
                &pts,
                &opts,
            )?
            .value
        }
        None => {
            let k0 = lit::<T>(4.0);
            let body = integrate_finite_with(
                |c: T| one_minus(c) * (w * c).cos(),
                T::zero(),
                k0,
                &pts,
                &opts,
            )?;
            let tail =
                integrate_oscillatory_tail(one_minus, Oscillation::Cos(w), k0, opts.abs_tol)?;
            body.value + tail.value
        }
    };
    Ok(lit::<T>(2.0) * value / density)
}

/// Embedded-GUE cluster function evaluated in real space:
/// `(1/R) [2 Y2(Delta) - (Y2 * Y2)(Delta)]` with `Y2(x) = (sin(pi x)/(pi x))^2`
/// and the self-convolution integrated directly.
pub fn y2_egue_real_space<T: Real>(r: T, density: T) -> Result<T, AnalyticError> {
    AnalyticModel::embedded(crate::symmetry::Symmetry::Unitary, density)?;
    if !r.is_finite() {
        return Err(AnalyticError::InvalidArgument(format!(
            "r must be finite, got {r}"
        )));
    }
    let d = (r / density).abs();
    let pi = T::PI();
    let y2 = move |x: T| {
        let a = pi * x;
        if a.abs() < lit(1e-4) {
            T::one() - a * a / lit(3.0)
        } else {
            let s = a.sin() / a;
            s * s
        }
    };
    let tol = lit::<T>(1e-12);
    // Beyond |x| > L the integrand is below 1/(pi^4 x^2 (x - Delta)^2); the
    // remainder is added from the mean of the oscillating numerator.
    let half = lit::<T>(400.0);
    let lo = d / lit(2.0) - half;
    let hi = d / lit(2.0) + half;
    let opts = QuadratureOptions::absolute(tol).with_budget(20_000_000);
    let mut conv = T::zero();
    let mut a = lo;
    let step = lit::<T>(8.0);
    while a < hi {
        let b = (a + step).min(hi);
        let mut sing = Vec::new();
        for p in [T::zero(), d] {
            if p > a && p < b {
                sing.push(p);
            }
        }
        conv = conv + integrate_finite_with(|x: T| y2(x) * y2(d - x), a, b, &sing, &opts)?.value;
        a = b;
    }
    let mean = lit::<T>(0.25) + (lit::<T>(2.0) * pi * d).cos() / lit(8.0);
    let pi4 = pi * pi * pi * pi;
    conv = conv + lit::<T>(2.0) * mean / (lit::<T>(3.0) * pi4 * half * half * half);
    Ok((lit::<T>(2.0) * y2(d) - conv) / density)
}
