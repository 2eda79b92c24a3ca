//! Utilities (throughput per unit power) and the equilibrium SINR targets.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::numerics::roots::bisect;
use crate::scalar::Real;

type Curve<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Packet-success function `γ(β)` together with its derivative.
#[derive(Clone)]
pub struct UtilityFunction<T> {
    gamma: Curve<T>,
    gamma_prime: Curve<T>,
    description: String,
}

impl<T> fmt::Debug for UtilityFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UtilityFunction").field("description", &self.description).finish()
    }
}

impl<T: Real> UtilityFunction<T> {
    /// Both `γ` and `γ'` must be supplied; `γ'` is never differenced numerically.
    pub fn new(
        gamma: impl Fn(T) -> T + Send + Sync + 'static,
        gamma_prime: impl Fn(T) -> T + Send + Sync + 'static,
        description: impl Into<String>,
    ) -> Self {
        Self {
            gamma: Arc::new(gamma),
            gamma_prime: Arc::new(gamma_prime),
            description: description.into(),
        }
    }

    pub fn gamma(&self, beta: T) -> T {
        (self.gamma)(beta)
    }

    pub fn gamma_prime(&self, beta: T) -> T {
        (self.gamma_prime)(beta)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `c·γ`.
    pub fn scaled(&self, c: T) -> Self {
        let (g, d) = (self.gamma.clone(), self.gamma_prime.clone());
        Self::new(move |b| c * g(b), move |b| c * d(b), format!("{c}*{}", self.description))
    }

    /// `β γ'(β) − γ(β)`; its positive root is the equilibrium target.
    pub fn stationarity(&self, beta: T) -> T {
        beta * self.gamma_prime(beta) - self.gamma(beta)
    }
}

/// `γ(β) = (1 − e^{−β})^M` for `M`-bit packets.
pub fn goodput<T: Real>(m: u32) -> Result<UtilityFunction<T>> {
    if m < 2 {
        return Err(invalid(format!("goodput needs M >= 2 bits per packet, got {m}")));
    }
    let mf = T::lit(f64::from(m));
    let exp = m as i32;
    Ok(UtilityFunction::new(
        move |b: T| (-(-b).exp_m1()).powi(exp),
        move |b: T| mf * (-b).exp() * (-(-b).exp_m1()).powi(exp - 1),
        format!("goodput(M={m})"),
    ))
}

/// Equilibrium SINR targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumTarget<T> {
    pub beta_star: T,
    /// Optimum-filter target and the load it was solved at.
    pub beta_plus: Option<(T, T)>,
    /// `|β*γ'(β*) − γ(β*)|`.
    pub residual: T,
}

impl<T: Real> EquilibriumTarget<T> {
    /// Target given directly, without a utility.
    pub fn fixed(beta_star: T) -> Result<Self> {
        if !(beta_star > T::zero()) || !beta_star.is_finite() {
            return Err(invalid(format!("target SINR must be positive, got {beta_star}")));
        }
        Ok(Self {
            beta_star,
            beta_plus: None,
            residual: T::zero(),
        })
    }

    /// Attaches `β⁺` solved at load `alpha`.
    pub fn with_beta_plus(self, alpha: T) -> Result<Self> {
        let bp = solve_beta_plus(self.beta_star, alpha)?;
        Ok(Self {
            beta_plus: Some((bp, alpha)),
            ..self
        })
    }
}

const SCAN_STEP: f64 = 0.01;
const SCAN_END: f64 = 100.0;

/// Positive root of `βγ'(β) − γ(β)`.
///
/// Scans `(0, 100]` in steps of 0.01 for the first positive value of the
/// stationarity function followed by a nonpositive one, bisects, then
/// applies Newton steps with a differenced `γ'` while they reduce the residual.
pub fn solve_beta_star<T: Real>(u: &UtilityFunction<T>) -> Result<EquilibriumTarget<T>> {
    let g = |b: T| u.stationarity(b);
    let steps = (SCAN_END / SCAN_STEP).round() as usize;
    let mut seen_positive = false;
    let mut bracket = None;
    let mut prev = T::zero();
    for i in 1..=steps {
        let b = T::lit(i as f64 * SCAN_STEP);
        let v = g(b);
        if v.is_nan() {
            return Err(Error::NoEquilibrium);
        }
        if v > T::zero() {
            seen_positive = true;
        } else if seen_positive && v < T::zero() {
            bracket = Some((prev, b));
            break;
        }
        prev = b;
    }
    let (lo, hi) = bracket.ok_or(Error::NoEquilibrium)?;
    let mut beta = bisect(g, lo, hi, "beta*gamma'(beta) - gamma(beta)")?;
    let mut res = g(beta).abs();
    for _ in 0..4 {
        let h = beta * T::lit(1e-5);
        let dg = beta * (u.gamma_prime(beta + h) - u.gamma_prime(beta - h)) / (h + h);
        if !(dg != T::zero()) {
            break;
        }
        let next = beta - g(beta) / dg;
        let r = g(next).abs();
        if !(next > lo && next < hi && r < res) {
            break;
        }
        beta = next;
        res = r;
    }
    Ok(EquilibriumTarget {
        beta_star: beta,
        beta_plus: None,
        residual: res,
    })
}

/// Left side of the optimum-filter target equation minus its right side,
/// `α log2(1+β*)`.
pub fn beta_plus_equation<T: Real>(b: T, beta_star: T, alpha: T) -> T {
    let log2 = |x: T| x.ln_1p() / T::LN_2();
    let frac = b / (T::one() + b);
    let shadow = alpha * b / (T::one() - alpha * frac) / (T::one() + b);
    alpha * log2(b) - alpha * T::LOG2_E() * frac + log2(shadow) - alpha * log2(beta_star)
}

/// `β⁺`: the MMSE-side SINR giving the optimum receiver the capacity
/// `α log2(1+β*)`. Searched on `(0, β*]`, clipped to the feasible range
/// `αβ⁺/(1+β⁺) < 1`.
pub fn solve_beta_plus<T: Real>(beta_star: T, alpha: T) -> Result<T> {
    if !(beta_star > T::zero()) || !beta_star.is_finite() {
        return Err(invalid(format!("target SINR must be positive, got {beta_star}")));
    }
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(invalid(format!("load must be positive, got {alpha}")));
    }
    let mut hi = beta_star;
    if alpha > T::one() {
        let edge = T::one() / (alpha - T::one());
        if edge < hi {
            hi = edge * (T::one() - T::eps().sqrt());
        }
    }
    bisect(|b| beta_plus_equation(b, beta_star, alpha), T::zero(), hi, "beta+ equation")
}

/// `u = γ(β)/P` in bits per joule.
pub fn utility<T: Real>(beta: T, power: T, u: &UtilityFunction<T>) -> Result<T> {
    if !(power > T::zero()) {
        return Err(invalid(format!("utility needs a positive power, got {power}")));
    }
    Ok(u.gamma(beta) / power)
}
