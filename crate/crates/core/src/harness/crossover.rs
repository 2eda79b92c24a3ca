//! Load at which the optimum-filter and MMSE-SIC equilibria use the same
//! mean inverse power.

use crate::error::{invalid, Error, Result};
use crate::game::solve_beta_plus;
use crate::numerics::roots::bisect;

/// `αβ*c(1 − αβ⁺/(1+β⁺)) − β⁺(1 − e^{−αc})` with `c = β*/(1+β*)`.
///
/// Positive when the optimum filter has the larger mean inverse power.
pub fn crossover_gap(alpha: f64, beta_star: f64, beta_plus: f64) -> f64 {
    let c = beta_star / (1.0 + beta_star);
    alpha * beta_star * c * (1.0 - alpha * beta_plus / (1.0 + beta_plus)) + beta_plus * (-alpha * c).exp_m1()
}

fn check(beta_star: f64) -> Result<()> {
    if !(beta_star > 0.0) || !beta_star.is_finite() {
        return Err(invalid(format!("target SINR must be positive, got {beta_star}")));
    }
    Ok(())
}

/// First sign change of `gap` on the grid `0.01, 0.02, ..., 0.99`, refined
/// by bisection. Starting away from zero skips the trivial root at `α = 0`.
fn first_crossing(gap: impl Fn(f64) -> f64, what: &'static str) -> Result<f64> {
    let grid: Vec<f64> = (1..100).map(|i| i as f64 * 0.01).collect();
    let cell = grid
        .windows(2)
        .find(|w| gap(w[0]).signum() != gap(w[1]).signum() && gap(w[0]).is_finite() && gap(w[1]).is_finite())
        .ok_or(Error::NoSolutionInBracket {
            what,
            lo: grid[0],
            hi: grid[grid.len() - 1],
        })?;
    bisect(gap, cell[0], cell[1], what)
}

/// Crossover load with `β⁺` held at its value for `reference_load`, the load
/// of the system whose optimum-filter allocation is being compared.
pub fn solve_alpha_crossover(beta_star: f64, reference_load: f64) -> Result<f64> {
    check(beta_star)?;
    let bp = solve_beta_plus(beta_star, reference_load)?;
    first_crossing(|a| crossover_gap(a, beta_star, bp), "alpha crossover")
}

/// Crossover load with `β⁺` re-solved at every candidate load.
pub fn solve_alpha_crossover_joint(beta_star: f64) -> Result<f64> {
    check(beta_star)?;
    let gap = |a: f64| match solve_beta_plus(beta_star, a) {
        Ok(bp) => crossover_gap(a, beta_star, bp),
        Err(_) => f64::NAN,
    };
    first_crossing(gap, "alpha crossover (joint)")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_crossover_regression() {
        let a = solve_alpha_crossover(6.48, 0.125).unwrap();
        assert!((a - 0.12).abs() < 0.01);
        let bp = solve_beta_plus(6.48, 0.125).unwrap();
        assert!(crossover_gap(a, 6.48, bp).abs() < 1e-12);
        // independent scan for the sign change
        let scan = (1..1000).map(|i| i as f64 * 1e-3).find(|&x| crossover_gap(x, 6.48, bp) < 0.0).unwrap();
        assert!((scan - a).abs() <= 1e-3);
    }

    #[test]
    fn joint_form_has_no_root() {
        let bp_at = |a: f64| solve_beta_plus(6.48, a).unwrap();
        assert!((1..100).all(|i| {
            let a = i as f64 * 0.01;
            crossover_gap(a, 6.48, bp_at(a)) < 0.0
        }));
        assert!(matches!(
            solve_alpha_crossover_joint(6.48),
            Err(Error::NoSolutionInBracket { .. })
        ));
    }

    #[test]
    fn tiny_target_reports_bracket() {
        match solve_alpha_crossover(1e-6, 0.125) {
            Ok(a) => assert!(a > 0.0 && a < 1.0),
            Err(e) => assert!(matches!(e, Error::NoSolutionInBracket { .. })),
        }
        assert!(solve_alpha_crossover(0.0, 0.125).is_err());
    }
}
