//! Real special functions used by the closed-form number variance:
//! sine and cosine integrals, the `2F3(1/2,1/2; 3/2,3/2,3/2; x)`
//! hypergeometric function and the dilogarithm.

use num_complex::Complex;
use thiserror::Error;

use crate::quadrature::{integrate_finite, QuadratureError};
use crate::scalar::{count, lit, to_f64, Real};

/// Below this magnitude Si/Ci use their power series, above it the
/// continued fraction for `E1(ix)`.
pub const SICI_SERIES_LIMIT: f64 = 4.0;

/// Direct `2F3` summation is used for `x >= HYP_SERIES_LIMIT`; below it the
/// largest series term exceeds ~1e2 and cancellation sets in.
pub const HYP_SERIES_LIMIT: f64 = -50.0;

const MAX_SERIES_TERMS: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("{function}: argument {x:e} outside the domain ({reason})")]
    Domain {
        function: &'static str,
        x: f64,
        reason: &'static str,
    },
    #[error("{function}: series did not converge after {terms} terms at x = {x:e} (last term {last_term:e})")]
    NonConvergence {
        function: &'static str,
        x: f64,
        terms: usize,
        last_term: f64,
    },
    #[error("{function}: {source}")]
    Quadrature {
        function: &'static str,
        #[source]
        source: QuadratureError,
    },
}

/// Sine integral `Si(x) = int_0^x sin(s)/s ds`.
pub fn sine_integral<T: Real>(x: T) -> T {
    if x < T::zero() {
        return -sine_integral(-x);
    }
    if x == T::zero() {
        return T::zero();
    }
    if x <= lit(SICI_SERIES_LIMIT) {
        si_series(x)
    } else {
        let (si, _) = sici_continued_fraction(x);
        si
    }
}

/// Cosine integral `Ci(x) = -int_x^inf cos(s)/s ds` for `x > 0`.
pub fn cosine_integral<T: Real>(x: T) -> Result<T, SpecfunError> {
    if !(x > T::zero()) {
        return Err(SpecfunError::Domain {
            function: "cosine_integral",
            x: to_f64(x),
            reason: "logarithmic singularity, x must be > 0",
        });
    }
    if x <= lit(SICI_SERIES_LIMIT) {
        Ok(ci_series(x))
    } else {
        let (_, ci) = sici_continued_fraction(x);
        Ok(ci)
    }
}

fn si_series<T: Real>(x: T) -> T {
    // sum (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
    let x2 = x * x;
    let mut term = x; // x^(2k+1) / (2k+1)! with sign
    let mut sum = x;
    for k in 1..MAX_SERIES_TERMS {
        let n = count::<T>(2 * k);
        term = -term * x2 / (n * (n + T::one()));
        let add = term / (n + T::one());
        sum = sum + add;
        if add.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    sum
}

fn ci_series<T: Real>(x: T) -> T {
    // gamma + ln x + sum_{k>=1} (-1)^k x^(2k) / (2k (2k)!)
    let x2 = x * x;
    let mut term = T::one(); // (-1)^k x^(2k) / (2k)!
    let mut sum = T::zero();
    for k in 1..MAX_SERIES_TERMS {
        let n = count::<T>(2 * k);
        term = -term * x2 / ((n - T::one()) * n);
        let add = term / n;
        sum = sum + add;
        if add.abs() <= T::epsilon() * sum.abs().max(T::one()) {
            break;
        }
    }
    T::euler_gamma() + x.ln() + sum
}

/// Modified Lentz evaluation of the continued fraction for `E1(ix)`; returns
/// `(Si(x), Ci(x))` for `x > 0`. The continued fraction converges for all
/// `x > 0` and fastest for `x >~ 2`.
fn sici_continued_fraction<T: Real>(x: T) -> (T, T) {
    let tiny = T::min_positive_value().sqrt();
    let one = Complex::new(T::one(), T::zero());
    let mut b = Complex::new(T::one(), x);
    let mut c = Complex::new(T::one() / tiny, T::zero());
    let mut d = one / b;
    let mut h = d;
    let two = lit::<T>(2.0);
    for i in 2..MAX_SERIES_TERMS {
        let ai = -count::<T>((i - 1) * (i - 1));
        b = b + Complex::new(two, T::zero());
        d = one / (d * ai + b);
        c = b + one / c * ai;
        let del = c * d;
        h = h * del;
        if (del.re - T::one()).abs() + del.im.abs() <= T::epsilon() {
            break;
        }
    }
    // E1(ix) = (cos x - i sin x) h, Ci = -Re E1, Si = pi/2 + Im E1
    let e1 = Complex::new(x.cos(), -x.sin()) * h;
    (T::FRAC_PI_2() + e1.im, -e1.re)
}

/// Generic `2F3(a1, a2; b1, b2, b3; x)` by direct summation.
///
/// Only reliable where the terms do not grow large; [`hyp2f3_half`] is the
/// hardened entry point for the parameter set used by the symplectic case.
pub fn hyp2f3_series<T: Real>(a: [T; 2], b: [T; 3], x: T) -> Result<T, SpecfunError> {
    let mut term = T::one();
    let mut sum = T::one();
    for k in 0..MAX_SERIES_TERMS {
        let kk = count::<T>(k);
        let num = (a[0] + kk) * (a[1] + kk);
        let den = (b[0] + kk) * (b[1] + kk) * (b[2] + kk) * (kk + T::one());
        term = term * num / den * x;
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() && k > 2 {
            return Ok(sum);
        }
        if term == T::zero() {
            return Ok(sum);
        }
    }
    Err(SpecfunError::NonConvergence {
        function: "hyp2f3_series",
        x: to_f64(x),
        terms: MAX_SERIES_TERMS,
        last_term: to_f64(term),
    })
}

/// `2F3(1/2, 1/2; 3/2, 3/2, 3/2; x)`.
///
/// For `x < HYP_SERIES_LIMIT` the value comes from
/// `int_0^1 ln(t)^2 cos(a t) dt = 2 * 2F3(...; -a^2/4)` with `a = 2 sqrt(-x)`.
pub fn hyp2f3_half<T: Real>(x: T) -> Result<T, SpecfunError> {
    if !x.is_finite() {
        return Err(SpecfunError::Domain {
            function: "hyp2f3_half",
            x: to_f64(x),
            reason: "argument must be finite",
        });
    }
    if x >= lit(HYP_SERIES_LIMIT) {
        let h = lit::<T>(0.5);
        let t = lit::<T>(1.5);
        return hyp2f3_series([h, h], [t, t, t], x);
    }
    let a = lit::<T>(2.0) * (-x).sqrt();
    let tol = T::epsilon().sqrt() * lit(1e-5);
    let r = integrate_finite(
        |t: T| t.ln().powi(2) * (a * t).cos(),
        T::zero(),
        T::one(),
        tol,
        &[T::zero()],
    )
    .map_err(|source| SpecfunError::Quadrature {
        function: "hyp2f3_half",
        source,
    })?;
    Ok(r.value * lit(0.5))
}

/// Dilogarithm `Li2(x) = sum x^k / k^2` for real `x <= 1`.
pub fn dilog<T: Real>(x: T) -> Result<T, SpecfunError> {
    if !(x <= T::one()) {
        return Err(SpecfunError::Domain {
            function: "dilog",
            x: to_f64(x),
            reason: "x > 1 lies on the branch cut",
        });
    }
    let pi2_6 = T::PI() * T::PI() / lit(6.0);
    let half = lit::<T>(0.5);
    if x == T::one() {
        return Ok(pi2_6);
    }
    if x < -T::one() {
        // Li2(x) = -Li2(1/x) - pi^2/6 - ln^2(-x)/2
        let l = (-x).ln();
        return Ok(-dilog_core(T::one() / x) - pi2_6 - half * l * l);
    }
    Ok(dilog_core(x))
}

/// `Li2` on `[-1, 1)`.
fn dilog_core<T: Real>(x: T) -> T {
    let half = lit::<T>(0.5);
    if x > half {
        // Li2(x) = pi^2/6 - ln(x) ln(1-x) - Li2(1-x)
        let pi2_6 = T::PI() * T::PI() / lit(6.0);
        return pi2_6 - x.ln() * (T::one() - x).ln() - dilog_series(T::one() - x);
    }
    if x < -half {
        // Landen: Li2(x) = -Li2(x/(x-1)) - ln^2(1-x)/2, with x/(x-1) in (1/3, 1/2]
        let l = (T::one() - x).ln();
        return -dilog_series(x / (x - T::one())) - half * l * l;
    }
    dilog_series(x)
}

fn dilog_series<T: Real>(x: T) -> T {
    let mut pow = x;
    let mut sum = x;
    for k in 2..MAX_SERIES_TERMS {
        pow = pow * x;
        let kk = count::<T>(k);
        let add = pow / (kk * kk);
        sum = sum + add;
        if add.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn si_known_values() {
        assert_eq!(sine_integral(0.0f64), 0.0);
        // quadrature of sin(s)/s on [0, pi]
        assert!((sine_integral(PI) - 1.851_937_051_982_466).abs() < 1e-13);
        assert!((sine_integral(50.0f64) - PI / 2.0).abs() < 0.03);
    }

    #[test]
    fn ci_known_values() {
        assert!((cosine_integral(1.0f64).unwrap() - 0.337_403_922_900_968_1).abs() < 1e-13);
        assert!(cosine_integral(100.0f64).unwrap().abs() < 0.01);
        assert!(cosine_integral(1e-12f64).unwrap() < -27.0);
    }

    #[test]
    fn ci_domain_error() {
        assert!(matches!(
            cosine_integral(0.0f64),
            Err(SpecfunError::Domain { .. })
        ));
        assert!(matches!(
            cosine_integral(-2.0f64),
            Err(SpecfunError::Domain { .. })
        ));
    }

    #[test]
    fn sici_branches_agree_at_seam() {
        let x = SICI_SERIES_LIMIT;
        let (si_cf, ci_cf) = sici_continued_fraction(x);
        assert!((si_series(x) - si_cf).abs() < 1e-10);
        assert!((ci_series(x) - ci_cf).abs() < 1e-10);
    }

    #[test]
    fn hyp_at_zero_is_one() {
        assert_eq!(hyp2f3_half(0.0f64).unwrap(), 1.0);
    }

    #[test]
    fn hyp_branches_agree_near_switch() {
        let x = HYP_SERIES_LIMIT;
        let h = 0.5;
        let t = 1.5;
        let series = hyp2f3_series([h, h], [t, t, t], x).unwrap();
        let integral = hyp2f3_half(x - 1e-12).unwrap();
        assert!((series - integral).abs() < 1e-10, "{series} vs {integral}");
    }

    #[test]
    fn dilog_special_values() {
        assert_eq!(dilog(0.0f64).unwrap(), 0.0);
        assert!((dilog(-1.0f64).unwrap() + PI * PI / 12.0).abs() < 1e-14);
        assert!((dilog(1.0f64).unwrap() - PI * PI / 6.0).abs() < 1e-15);
        assert!(
            (dilog(0.5f64).unwrap() - (PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2))).abs() < 1e-14
        );
    }

    #[test]
    fn dilog_domain_error() {
        assert!(matches!(dilog(1.5f64), Err(SpecfunError::Domain { .. })));
    }

    #[test]
    fn single_precision() {
        assert!((sine_integral(std::f32::consts::PI) - 1.851_937).abs() < 1e-5);
        assert!((dilog(-2.0f32).unwrap() + 1.436_746_4).abs() < 1e-5);
    }
}
