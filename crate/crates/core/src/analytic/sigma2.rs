use crate::quadrature::{
    integrate_finite_with, integrate_oscillatory_tail, Oscillation, QuadratureOptions,
};
use crate::scalar::{lit, Real};
use crate::specfun::{cosine_integral, dilog, hyp2f3_half, sine_integral};
use crate::symmetry::Symmetry;

use super::form_factor::goe_log_excess;
use super::{AnalyticError, AnalyticModel, FormFactor};

/// Quadratic small-r coefficient of the embedded orthogonal ensemble,
/// `2 int_0^inf (1 - F(chi)) dchi`. Reproduced by [`small_r_coefficient`].
const EGOE_QUADRATIC: f64 = 1.523_979_534_836_873_1;

/// Taylor coefficients of `Sigma^2 / R` in `Delta` (odd powers vanish beyond
/// the linear term).
const EGUE_TAYLOR: [f64; 4] = [
    -4.0 / 3.0,
    0.877_298_168_985_720_8,
    -0.494_776_335_410_806,
    0.193_779_630_854_180_8,
];
const EGSE_TAYLOR: [f64; 4] = [
    -28.0 / 27.0,
    -0.619_957_372_749_909_4,
    2.031_163_441_332_705_8,
    -2.160_598_454_831_856_4,
];

fn quad_opts<T: Real>(scale: T) -> QuadratureOptions<T> {
    QuadratureOptions::absolute(lit::<T>(1e-12) * scale.max(T::one())).with_rel_tol(lit(1e-11))
}

fn check_r<T: Real>(r: T) -> Result<(), AnalyticError> {
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(AnalyticError::InvalidArgument(format!(
            "r must be finite and >= 0, got {r}"
        )));
    }
    Ok(())
}

/// `2 int_K^inf sin^2(pi k r) / (pi k)^2 dk`, the contribution of a unit
/// form factor beyond `K`.
pub(crate) fn unit_tail<T: Real>(k0: T, r: T) -> T {
    let pi = T::PI();
    let two = lit::<T>(2.0);
    if k0 == T::zero() {
        return r;
    }
    let x = pi * k0 * r;
    if x == T::zero() {
        return T::zero();
    }
    let s = x.sin();
    two * r / pi * (s * s / x + T::FRAC_PI_2() - sine_integral(two * x))
}

/// Number variance from a form factor,
/// `Sigma^2(r) = 2 int_0^inf F(k) sin^2(pi k r) / (pi k)^2 dk`.
///
/// When `F` is identically one beyond some `K` that tail is summed in closed
/// form; otherwise `F` is split as `1 - (1 - F)` and the remainder is
/// integrated to infinity with an oscillatory tail rule.
pub fn sigma2_quadrature<T: Real, F: FormFactor<T>>(r: T, ff: &F) -> Result<T, AnalyticError> {
    check_r(r)?;
    if r == T::zero() {
        return Ok(T::zero());
    }
    let pi = T::PI();
    let two = lit::<T>(2.0);
    let window = move |k: T| {
        let s = (pi * k * r).sin();
        s * s / (pi * k * pi * k)
    };
    let mut marks: Vec<T> = ff.breakpoints();
    marks.extend(ff.singular_points());
    marks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    marks.dedup();
    let opts = quad_opts(r);
    match ff.unity_beyond() {
        Some(k0) => {
            if k0 == T::zero() {
                return Ok(r);
            }
            let mut pts = marks;
            pts.retain(|&p| p > T::zero() && p < k0);
            let body =
                integrate_finite_with(|k: T| ff.value(k) * window(k), T::zero(), k0, &pts, &opts)?;
            Ok(two * body.value + unit_tail(k0, r))
        }
        None => {
            let top = marks.iter().copied().fold(ff.scale(), T::max);
            let k0 = top * two;
            let mut pts = marks;
            pts.retain(|&p| p > T::zero() && p < k0);
            let body = integrate_finite_with(
                |k: T| (T::one() - ff.value(k)) * window(k),
                T::zero(),
                k0,
                &pts,
                &opts,
            )?;
            let tail = integrate_oscillatory_tail(
                |k: T| (T::one() - ff.value(k)) / (pi * k * pi * k),
                Oscillation::SinSquared(pi * r),
                k0,
                opts.abs_tol,
            )?;
            Ok(r - two * (body.value + tail.value))
        }
    }
}

/// Closed-form number variance of the embedded ensembles.
///
/// Very short distances use the Taylor expansion in `Delta = r / R`, where
/// the closed forms lose digits to cancellation.
pub fn sigma2_closed<T: Real>(r: T, model: &AnalyticModel<T>) -> Result<T, AnalyticError> {
    check_r(r)?;
    let (symmetry, density) = model
        .embedded_parts()
        .ok_or_else(|| AnalyticError::Unsupported {
            operation: "sigma2_closed",
            model: model.to_string(),
        })?;
    model.validate()?;
    if r == T::zero() {
        return Ok(T::zero());
    }
    let d = r / density;
    let value = match symmetry {
        Symmetry::Unitary => {
            if d < lit::<T>(0.5) * T::epsilon().powf(lit(0.125)) {
                even_taylor(d, &EGUE_TAYLOR)
            } else {
                egue_reduced(d)
            }
        }
        Symmetry::Symplectic => {
            if d < lit::<T>(0.5) * T::epsilon().powf(lit(0.125)) {
                even_taylor(d, &EGSE_TAYLOR)
            } else {
                egse_reduced(d)?
            }
        }
        Symmetry::Orthogonal => {
            if d < T::epsilon().powf(lit(0.2)) {
                egoe_taylor(d)
            } else {
                egoe_reduced_without_sigma(d)? + egoe_sigma_reduced(d)?
            }
        }
    };
    Ok(density * value)
}

/// The embedded-GOE closed form with the numerically evaluated `sigma` term
/// left out.
pub fn sigma2_closed_without_sigma<T: Real>(r: T, density: T) -> Result<T, AnalyticError> {
    check_r(r)?;
    AnalyticModel::embedded(Symmetry::Orthogonal, density)?;
    if r == T::zero() {
        return Ok(T::zero());
    }
    Ok(density * egoe_reduced_without_sigma(r / density)?)
}

/// The `sigma` contribution to the embedded-GOE number variance: the part of
/// `F - 1` with `chi >= 1`, integrated against the number-variance kernel.
pub fn egoe_sigma_correction<T: Real>(r: T, density: T) -> Result<T, AnalyticError> {
    check_r(r)?;
    AnalyticModel::embedded(Symmetry::Orthogonal, density)?;
    if r == T::zero() {
        return Ok(T::zero());
    }
    Ok(density * egoe_sigma_reduced(r / density)?)
}

fn even_taylor<T: Real>(d: T, coeffs: &[f64; 4]) -> T {
    // d + c2 d^2 + c4 d^4 + c6 d^6 + c8 d^8
    let d2 = d * d;
    let mut poly = T::zero();
    for &c in coeffs[1..].iter().rev() {
        poly = (poly + lit(c)) * d2;
    }
    d + lit::<T>(coeffs[0]) * d2 + poly * d2
}

fn egoe_taylor<T: Real>(d: T) -> T {
    let pi = T::PI();
    d - lit::<T>(EGOE_QUADRATIC) * d * d + pi * pi / lit(9.0) * d * d * d
}

fn egue_reduced<T: Real>(d: T) -> T {
    let pi = T::PI();
    let two = lit::<T>(2.0);
    let x = two * pi * d;
    (two + pi * pi * d - x.cos() - x.sin() / x - x * sine_integral(x)) / (pi * pi)
}

fn egse_reduced<T: Real>(d: T) -> Result<T, AnalyticError> {
    let pi = T::PI();
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let a = pi * d;
    let c2 = (two * a).cos();
    let bracket = lit::<T>(14.0) + lit::<T>(8.0) * pi * pi * d
        - two * c2 * sine_integral(two * a) / a
        - lit::<T>(16.0) * a * sine_integral(four * a)
        - four * (four * a).cos()
        - (four * a).sin() / a
        - two * c2 * hyp2f3_half(-a * a)?;
    Ok(bracket / (lit::<T>(8.0) * pi * pi))
}

fn egoe_reduced_without_sigma<T: Real>(d: T) -> Result<T, AnalyticError> {
    let pi = T::PI();
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    let l3 = three.ln();
    let l9m4 = lit::<T>(9.0).ln() - four;
    let a = pi * d;
    let (sa, ca) = a.sin_cos();
    let bracket = ca * (four * sine_integral(a) + l9m4 * sine_integral(three * a))
        - sa * (four * cosine_integral(a)? + l9m4 * cosine_integral(three * a)?)
        - two * a * (two * a).cos()
        - (l3 - two).powi(2) * (two * a).sin()
        + a * (lit::<T>(22.0) + three * l3 * (l3 - lit(6.0)) - four * a * sine_integral(two * a))
        - pi * l3 * ca
        + two * pi * pi * pi * d * d
        + two * egoe_double_integral(a)?;
    Ok(bracket / (two * pi * pi * pi * d))
}

/// `int_1^3 int_a^inf sin(k t - a) / (k t) dk dt` with the inner integral in
/// closed form: `(cos a (pi/2 - Si(a t)) + sin a Ci(a t)) / t`.
fn egoe_double_integral<T: Real>(a: T) -> Result<T, AnalyticError> {
    let (sa, ca) = a.sin_cos();
    let failure = std::cell::Cell::new(None);
    let inner = |t: T| {
        let ci = match cosine_integral(a * t) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                T::zero()
            }
        };
        (ca * (T::FRAC_PI_2() - sine_integral(a * t)) + sa * ci) / t
    };
    let r = integrate_finite_with(inner, T::one(), lit(3.0), &[], &quad_opts(T::one()))?;
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(r.value)
}

/// `sigma(Delta) = 2 int_1^inf g(k) sin^2(pi k Delta) / (pi k)^2 dk` with
/// `g = (1 - b2)^2 - 1` on the outer branch of the orthogonal form factor.
fn egoe_sigma_reduced<T: Real>(d: T) -> Result<T, AnalyticError> {
    let pi = T::PI();
    let envelope = |k: T| {
        let y = goe_log_excess(k);
        y * (y - lit(2.0)) / (pi * k * pi * k)
    };
    let tol = lit::<T>(1e-13) * d.max(T::one());
    let r = integrate_oscillatory_tail(envelope, Oscillation::SinSquared(pi * d), T::one(), tol)?;
    Ok(lit::<T>(2.0) * r.value)
}

/// Number variance of any model: closed forms where they exist, the form
/// factor quadrature otherwise.
pub fn sigma2<T: Real>(r: T, model: &AnalyticModel<T>) -> Result<T, AnalyticError> {
    check_r(r)?;
    model.validate()?;
    match *model {
        AnalyticModel::Egue { .. } | AnalyticModel::Egse { .. } | AnalyticModel::Egoe { .. } => {
            sigma2_closed(r, model)
        }
        AnalyticModel::PoissonCutoff { delta } => Ok(unit_tail(delta, r)),
        AnalyticModel::Poisson => Ok(r),
        AnalyticModel::GxeCutoff { .. } | AnalyticModel::Gaussian(_) => sigma2_quadrature(r, model),
    }
}

/// Large-r limit of `Sigma^2`, i.e. `(1/pi^2) int_0^inf F(k) / k^2 dk`.
pub fn sigma2_saturation<T: Real>(model: &AnalyticModel<T>) -> Result<T, AnalyticError> {
    model.validate()?;
    let pi = T::PI();
    let pi2 = pi * pi;
    match *model {
        AnalyticModel::Egue { density } => Ok(lit::<T>(2.0) * density / pi2),
        AnalyticModel::Egse { density } => Ok(lit::<T>(7.0) * density / (lit::<T>(4.0) * pi2)),
        AnalyticModel::Egoe { density } => {
            let l3 = lit::<T>(3.0).ln();
            let c = lit::<T>(28.0)
                - lit::<T>(18.0) * l3
                - lit::<T>(12.0) * dilog(lit::<T>(-2.0))?
                - lit::<T>(2.0) * pi2;
            Ok(density * c / (lit::<T>(2.0) * pi2))
        }
        AnalyticModel::PoissonCutoff { delta } => Ok(T::one() / (pi2 * delta)),
        AnalyticModel::GxeCutoff {
            delta,
            symmetry: Symmetry::Unitary,
        } => {
            if delta < T::one() {
                Ok((T::one() - delta.ln()) / pi2)
            } else {
                Ok(T::one() / (pi2 * delta))
            }
        }
        AnalyticModel::GxeCutoff { .. } => sigma2_saturation_quadrature(model),
        AnalyticModel::Poisson | AnalyticModel::Gaussian(_) => Err(AnalyticError::Divergent {
            model: model.to_string(),
        }),
    }
}

/// `(1/pi^2) int_0^inf F(k) / k^2 dk` by quadrature.
///
/// Rejects form factors that do not vanish faster than `|k|` at the origin,
/// for which the integral diverges.
pub fn sigma2_saturation_quadrature<T: Real, F: FormFactor<T> + std::fmt::Debug>(
    ff: &F,
) -> Result<T, AnalyticError> {
    let scale = ff.scale();
    let lo = lit::<T>(1e-8) * scale;
    let hi = lit::<T>(1e-6) * scale;
    let slope_lo = ff.value(lo) / lo;
    let slope_hi = ff.value(hi) / hi;
    if slope_lo.abs() > lit::<T>(0.1) * slope_hi.abs() && slope_lo != T::zero() {
        return Err(AnalyticError::Divergent {
            model: format!("{ff:?}"),
        });
    }
    let pi2 = T::PI() * T::PI();
    let mut marks = ff.breakpoints();
    marks.extend(ff.singular_points());
    let opts = quad_opts(T::one() / scale);
    match ff.unity_beyond() {
        Some(k0) => {
            let mut pts = marks;
            pts.retain(|&p| p > T::zero() && p < k0);
            let body =
                integrate_finite_with(|k: T| ff.value(k) / (k * k), T::zero(), k0, &pts, &opts)?;
            Ok((body.value + T::one() / k0) / pi2)
        }
        None => {
            let k0 = marks.iter().copied().fold(scale, T::max) * lit(2.0);
            let mut pts = marks;
            pts.retain(|&p| p > T::zero() && p < k0);
            let body =
                integrate_finite_with(|k: T| ff.value(k) / (k * k), T::zero(), k0, &pts, &opts)?;
            let tail = integrate_oscillatory_tail(
                |k: T| (ff.value(k) - T::one()) / (k * k),
                Oscillation::Cos(T::zero()),
                k0,
                opts.abs_tol,
            )?;
            Ok((body.value + T::one() / k0 + tail.value) / pi2)
        }
    }
}

/// `c` in `Sigma^2 ~ r - c r^2 / R` for the embedded ensembles.
///
/// Unitary and symplectic values are exact; the orthogonal value is
/// `2 int_0^inf (1 - F(chi)) dchi` by quadrature.
pub fn small_r_coefficient<T: Real>(symmetry: Symmetry) -> Result<T, AnalyticError> {
    match symmetry {
        Symmetry::Unitary => Ok(lit(4.0 / 3.0)),
        Symmetry::Symplectic => Ok(lit(28.0 / 27.0)),
        Symmetry::Orthogonal => {
            let m = AnalyticModel::Egoe { density: T::one() };
            let one_minus = |c: T| T::one() - m.value(c);
            let opts = quad_opts(T::one());
            let k0 = lit::<T>(4.0);
            let body = integrate_finite_with(one_minus, T::zero(), k0, &[T::one()], &opts)?;
            let tail = integrate_oscillatory_tail(
                one_minus,
                Oscillation::Cos(T::zero()),
                k0,
                opts.abs_tol,
            )?;
            Ok(lit::<T>(2.0) * (body.value + tail.value))
        }
    }
}

/// Two-term small-r expansion `r - c r^2 / R` of the embedded ensembles.
pub fn sigma2_small_r<T: Real>(r: T, model: &AnalyticModel<T>) -> Result<T, AnalyticError> {
    check_r(r)?;
    let (symmetry, density) = model
        .embedded_parts()
        .ok_or_else(|| AnalyticError::Unsupported {
            operation: "sigma2_small_r",
            model: model.to_string(),
        })?;
    model.validate()?;
    let c: T = match symmetry {
        Symmetry::Orthogonal => lit(EGOE_QUADRATIC),
        s => small_r_coefficient(s)?,
    };
    Ok(r - c * r * r / density)
}
