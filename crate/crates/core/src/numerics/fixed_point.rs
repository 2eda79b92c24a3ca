use crate::error::{Error, Result};
use crate::scalar::Real;

/// Settings for `x ← (1−λ)x + λF(x)` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Initial damping λ ∈ (0, 1].
    pub damping: f64,
    /// Stop once the relative sup-norm residual `|F(x) − x|` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 500,
        }
    }
}

impl FixedPointConfig {
    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointOutcome<T> {
    pub value: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

/// Relative sup-norm distance between `x` and `fx`; `0/0` counts as 0.
pub fn relative_residual<T: Real>(x: &[T], fx: &[T]) -> T {
    x.iter().zip(fx).fold(T::zero(), |acc, (&a, &b)| {
        let diff = (b - a).abs();
        if diff == T::zero() {
            return acc;
        }
        let scale = a.abs().max(b.abs());
        acc.max(diff / scale)
    })
}

/// Damped fixed-point iteration. `map(x, out)` writes `F(x)` into `out`.
///
/// The damping is halved whenever the residual grows, down to λ/64.
pub fn solve_damped<T, F>(x0: Vec<T>, cfg: &FixedPointConfig, mut map: F) -> Result<FixedPointOutcome<T>>
where
    T: Real,
    F: FnMut(&[T], &mut [T]),
{
    let tol = T::lit(cfg.tolerance);
    let min_damping = T::lit(cfg.damping / 64.0);
    let mut lambda = T::lit(cfg.damping);
    let mut x = x0;
    let mut fx = vec![T::zero(); x.len()];
    let mut last = T::infinity();
    for it in 0..cfg.max_iterations {
        map(&x, &mut fx);
        if fx.iter().any(|v| !v.is_finite()) {
            return Err(Error::ConvergenceFailure {
                iterations: it,
                residual: f64::INFINITY,
            });
        }
        let residual = relative_residual(&x, &fx);
        if residual <= tol {
            return Ok(FixedPointOutcome {
                value: fx,
                residual,
                iterations: it + 1,
            });
        }
        if residual > last && lambda > min_damping {
            lambda *= T::lit(0.5);
        }
        last = residual;
        let keep = T::one() - lambda;
        for (xi, &fi) in x.iter_mut().zip(&fx) {
            *xi = keep * *xi + lambda * fi;
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: cfg.max_iterations,
        residual: last.as_f64(),
    })
}
