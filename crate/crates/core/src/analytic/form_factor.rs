use crate::quadrature::{integrate_finite_with, QuadratureOptions};
use crate::scalar::{lit, Real};
use crate::symmetry::Symmetry;

use super::{AnalyticError, AnalyticModel, FormFactor};

/// Beyond this `|k|` the orthogonal `b2` is summed as a power series in
/// `1/(2k)` instead of through the logarithm.
const GOE_SERIES_SWITCH: f64 = 4.0;

/// One-particle form factor `b2(k)` of the unfolded Gaussian ensembles.
///
/// For the symplectic class `b2` diverges logarithmically at `|k| = 1`; the
/// formula is evaluated as is and yields `-inf` there.
pub fn b2_one_particle<T: Real>(k: T, symmetry: Symmetry) -> T {
    let k = k.abs();
    let one = T::one();
    let two = lit::<T>(2.0);
    match symmetry {
        Symmetry::Unitary => {
            if k <= one {
                one - k
            } else {
                T::zero()
            }
        }
        Symmetry::Symplectic => {
            if k < two {
                one - k / two + k / lit(4.0) * (one - k).abs().ln()
            } else {
                T::zero()
            }
        }
        Symmetry::Orthogonal => {
            if k <= one {
                one - two * k + k * (two * k).ln_1p()
            } else {
                goe_log_excess(k)
            }
        }
    }
}

/// `k ln((2k+1)/(2k-1)) - 1` for `k >= 1`, which is the orthogonal `b2`
/// there. Decays like `1/(12 k^2)`.
pub(crate) fn goe_log_excess<T: Real>(k: T) -> T {
    let two = lit::<T>(2.0);
    if k < lit(GOE_SERIES_SWITCH) {
        return k * (two / (two * k - T::one())).ln_1p() - T::one();
    }
    // sum_{n>=1} z^(2n) / (2n+1), z = 1/(2k)
    let z2 = (T::one() / (two * k)).powi(2);
    let mut pow = z2;
    let mut sum = T::zero();
    for n in 1..200usize {
        let add = pow / lit((2 * n + 1) as f64);
        sum = sum + add;
        if add <= T::epsilon() * sum {
            break;
        }
        pow = pow * z2;
    }
    sum
}

/// `F2^(2)(k)` for the model: the squared one-particle `1 - b2` at
/// `chi = k R` for embedded ensembles, and the cutoff form factors otherwise.
pub fn f2_two_particle<T: Real>(k: T, model: &AnalyticModel<T>) -> T {
    let k = k.abs();
    match *model {
        AnalyticModel::Egue { density } => {
            let g = T::one() - b2_one_particle(k * density, Symmetry::Unitary);
            g * g
        }
        AnalyticModel::Egse { density } => {
            let g = T::one() - b2_one_particle(k * density, Symmetry::Symplectic);
            g * g
        }
        AnalyticModel::Egoe { density } => {
            let g = T::one() - b2_one_particle(k * density, Symmetry::Orthogonal);
            g * g
        }
        AnalyticModel::PoissonCutoff { delta } => {
            if k <= delta {
                T::zero()
            } else {
                T::one()
            }
        }
        AnalyticModel::GxeCutoff { delta, symmetry } => {
            if k <= delta {
                T::zero()
            } else {
                T::one() - b2_one_particle(k, symmetry)
            }
        }
        AnalyticModel::Poisson => T::one(),
        AnalyticModel::Gaussian(symmetry) => T::one() - b2_one_particle(k, symmetry),
    }
}

/// Expected value of a box-window form-factor estimate.
///
/// A window of length `window_length` sees `F` convolved with the Fejér
/// kernel `sin^2(pi L q) / (pi^2 L q^2)`; this matters whenever `k L` is of
/// order one. Returns `1 - int (1 - F(k')) K(k - k') dk'`.
pub fn f2_windowed<T: Real, F: FormFactor<T>>(
    k: T,
    ff: &F,
    window_length: T,
) -> Result<T, AnalyticError> {
    if !(window_length > T::zero()) || !window_length.is_finite() {
        return Err(AnalyticError::InvalidArgument(format!(
            "window length must be positive, got {window_length}"
        )));
    }
    let pi = T::PI();
    let l = window_length;
    let kernel = move |q: T| {
        let x = pi * l * q;
        if x.abs() < lit(1e-4) {
            // sin^2(x)/x^2 ~ 1 - x^2/3
            l * (T::one() - x * x / lit(3.0))
        } else {
            let s = x.sin();
            s * s / (pi * pi * l * q * q)
        }
    };
    let cut = ff
        .unity_beyond()
        .unwrap_or_else(|| lit::<T>(40.0) * ff.scale());
    if cut == T::zero() {
        return Ok(T::one());
    }
    let mut singular: Vec<T> = Vec::new();
    for p in ff.breakpoints().into_iter().chain(ff.singular_points()) {
        if p > T::zero() && p < cut {
            singular.push(p);
            singular.push(-p);
        }
    }
    singular.push(T::zero());
    if k.abs() < cut {
        singular.push(k);
    }
    singular.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    singular.dedup();
    let opts = QuadratureOptions::absolute(lit::<T>(1e-10)).with_rel_tol(lit(1e-10));
    let r = integrate_finite_with(
        |kp: T| (T::one() - ff.value(kp)) * kernel(k - kp),
        -cut,
        cut,
        &singular,
        &opts,
    )?;
    Ok(T::one() - r.value)
}
