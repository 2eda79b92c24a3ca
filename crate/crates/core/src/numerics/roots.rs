use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite signs.
///
/// Runs until the bracket stops shrinking, so the result is accurate to
/// the last bit of `T`.
pub fn bisect<T: Real>(mut f: impl FnMut(T) -> T, lo: T, hi: T, what: &'static str) -> Result<T> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSolutionInBracket {
            what,
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let neg_at_a = fa < T::zero();
    for _ in 0..200 {
        let m = a + (b - a) * T::lit(0.5);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm < T::zero()) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a + (b - a) * T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, "x^2-2").unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decreasing_function() {
        let r = bisect(|x: f64| 1.0 - x, 0.0, 3.0, "1-x").unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_sign_change() {
        assert!(matches!(
            bisect(|x: f64| x * x + 1.0, -1.0, 1.0, "x^2+1"),
            Err(Error::NoSolutionInBracket { .. })
        ));
    }
}
