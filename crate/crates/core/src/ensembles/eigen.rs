use crate::scalar::{lit, Real};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() == diag.len() - 1`), by implicit QL with
/// Wilkinson shifts. Returns them in ascending order, or `None` if an
/// eigenvalue fails to converge.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Option<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    assert_eq!(off.len() + 1, n, "off-diagonal must have n - 1 entries");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(T::zero());
    let two = lit::<T>(2.0);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_EIGENVALUE {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3
        let ev = tridiagonal_eigenvalues(&[2.0f64, 2.0], &[1.0]).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn discrete_laplacian() {
        // eigenvalues 2 - 2 cos(j pi / (n + 1))
        let n = 50;
        let ev = tridiagonal_eigenvalues(&vec![2.0f64; n], &vec![-1.0; n - 1]).unwrap();
        for (j, v) in ev.iter().enumerate() {
            let want = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - want).abs() < 1e-12, "{j}: {v} vs {want}");
        }
    }

    #[test]
    fn decoupled_blocks() {
        let ev = tridiagonal_eigenvalues(&[3.0f64, -1.0, 5.0], &[0.0, 0.0]).unwrap();
        assert_eq!(ev, vec![-1.0, 3.0, 5.0]);
    }

    #[test]
    fn trace_preserved_single_precision() {
        let d = [1.0f32, -2.0, 0.5, 4.0];
        let e = [0.3f32, 1.2, -0.7];
        let ev = tridiagonal_eigenvalues(&d, &e).unwrap();
        let tr: f32 = ev.iter().sum();
        assert!((tr - 3.5).abs() < 1e-5);
    }
}
