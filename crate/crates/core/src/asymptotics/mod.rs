//! Large-system (`N, K → ∞`, `K/N → α`) SINR and capacity functionals.
//!
//! All integrals over the profile are weighted sums over its quadrature
//! nodes, so a profile built from `K` concrete channels gives the
//! deterministic equivalent of that particular population.

mod profile;

pub use profile::{midpoint_cells, ChannelProfile};

use crate::error::{invalid, Error, Result};
use crate::numerics::fixed_point::{relative_residual, solve_damped, FixedPointConfig};
use crate::numerics::quadrature::integrate;
use crate::scalar::Real;

/// Which SINR function a [`BetaFunction`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaKind {
    Mf,
    Mmse,
    Sic,
    SicPrefix,
}

/// SINR as a function of the user index, sampled on user cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFunction<T> {
    pub values: Vec<T>,
    /// Cell masses; they sum to the load α.
    pub weights: Vec<T>,
    pub kind: BetaKind,
    /// Final fixed-point residual (zero for explicit formulas).
    pub residual: T,
}

impl<T: Real> BetaFunction<T> {
    /// `∫₀^α log2(1 + β(x)) dx` in bits per chip.
    pub fn capacity(&self) -> T {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| *w * b.ln_1p())
            .sum::<T>()
            / T::LN_2()
    }
}

/// Solver settings shared by the large-system routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConfig {
    pub fixed_point: FixedPointConfig,
    /// Sub-cells per user cell in the successive-cancellation sweep.
    pub sic_substeps: usize,
    /// Relative accuracy target of the capacity integral over noise levels.
    pub quad_rel_tol: f64,
    pub quad_max_segments: usize,
}

impl Default for AsymptoticConfig {
    fn default() -> Self {
        Self {
            fixed_point: FixedPointConfig::default().with_max_iterations(2000),
            sic_substeps: 8,
            quad_rel_tol: 1e-6,
            quad_max_segments: 200,
        }
    }
}

/// Matched-filter SINR
/// `β(x) = P(x)H(x)² / (σ²H(x) + ∫∫ P(y)|h(f,y)|²|h(f,x)|² df dy)`.
pub fn beta_mf<T: Real>(profile: &ChannelProfile<T>) -> Result<BetaFunction<T>> {
    let wf = profile.freq_weights();
    let nf = profile.num_freq();
    let load: Vec<T> = (0..nf)
        .map(|f| {
            (0..profile.num_users())
                .map(|y| profile.user_weights()[y] * profile.rho(f, y))
                .sum()
        })
        .collect();
    let values = (0..profile.num_users())
        .map(|x| {
            let h = profile.mean_gain(x);
            if !(h > T::zero()) {
                return Err(Error::DegenerateChannel { user: x });
            }
            let cross: T = (0..nf).map(|f| wf[f] * profile.gain(x)[f] * load[f]).sum();
            Ok(profile.power()[x] * h * h / (profile.sigma2() * h + cross))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BetaFunction {
        values,
        weights: profile.user_weights().to_vec(),
        kind: BetaKind::Mf,
        residual: T::zero(),
    })
}

/// Interference density `D(f) = ∫ ρ(f,y)/(1+β(y)) dy` for given `β`.
fn mmse_load<T: Real>(profile: &ChannelProfile<T>, beta: &[T], out: &mut [T]) {
    out.fill(T::zero());
    for (y, b) in beta.iter().enumerate() {
        let w = profile.user_weights()[y] * profile.power()[y] / (T::one() + *b);
        if w == T::zero() {
            continue;
        }
        for (acc, g) in out.iter_mut().zip(profile.gain(y)) {
            *acc += w * *g;
        }
    }
}

fn mmse_map<T: Real>(profile: &ChannelProfile<T>, load: &[T], out: &mut [T]) {
    let wf = profile.freq_weights();
    let s2 = profile.sigma2();
    for (x, o) in out.iter_mut().enumerate() {
        let s: T = profile
            .gain(x)
            .iter()
            .zip(load)
            .zip(wf)
            .map(|((g, d), w)| *w * *g / (s2 + *d))
            .sum();
        *o = profile.power()[x] * s;
    }
}

/// MMSE SINR, the solution of
/// `β(x) = P(x) ∫ |h(f,x)|² / (σ² + ∫ P(y)|h(f,y)|²/(1+β(y)) dy) df`.
pub fn solve_beta_mmse<T: Real>(profile: &ChannelProfile<T>) -> Result<BetaFunction<T>> {
    solve_beta_mmse_from(profile, vec![T::zero(); profile.num_users()], &AsymptoticConfig::default())
}

/// [`solve_beta_mmse`] from an explicit starting point.
pub fn solve_beta_mmse_from<T: Real>(
    profile: &ChannelProfile<T>,
    init: Vec<T>,
    cfg: &AsymptoticConfig,
) -> Result<BetaFunction<T>> {
    if init.len() != profile.num_users() {
        return Err(invalid("initial guess needs one value per user cell"));
    }
    let mut load = vec![T::zero(); profile.num_freq()];
    let out = solve_damped(init, &cfg.fixed_point, |beta, next| {
        mmse_load(profile, beta, &mut load);
        mmse_map(profile, &load, next);
    })?;
    Ok(BetaFunction {
        values: out.value,
        weights: profile.user_weights().to_vec(),
        kind: BetaKind::Mmse,
        residual: out.residual,
    })
}

/// Successive-cancellation SINR, the solution of
/// `β(x) = P(x) ∫ |h(f,x)|² / (σ² + ∫₀ˣ P(y)|h(f,y)|²/(1+β(y)) dy) df`.
///
/// Sweeps the user axis forward. Each cell is split into sub-cells; on each
/// sub-cell the value at its midpoint is found by bisection, with the
/// interference accumulated up to the left edge plus half the sub-cell's own
/// contribution. The returned function lives on the sub-cells.
pub fn solve_beta_sic<T: Real>(profile: &ChannelProfile<T>) -> Result<BetaFunction<T>> {
    solve_beta_sic_with(profile, &AsymptoticConfig::default())
}

pub fn solve_beta_sic_with<T: Real>(profile: &ChannelProfile<T>, cfg: &AsymptoticConfig) -> Result<BetaFunction<T>> {
    let m = cfg.sic_substeps.max(1);
    let wf = profile.freq_weights();
    let s2 = profile.sigma2();
    let mut acc = vec![T::zero(); profile.num_freq()];
    let mut values = Vec::with_capacity(profile.num_users() * m);
    let mut weights = Vec::with_capacity(values.capacity());
    let mut worst = T::zero();
    for x in 0..profile.num_users() {
        let h = profile.user_weights()[x] / T::from_count(m);
        let p = profile.power()[x];
        let gain = profile.gain(x);
        let map = |beta: T, acc: &[T]| -> T {
            let own = h * T::lit(0.5) * p / (T::one() + beta);
            let s: T = gain
                .iter()
                .zip(acc)
                .zip(wf)
                .map(|((g, a), w)| *w * *g / (s2 + *a + own * *g))
                .sum();
            p * s
        };
        for _ in 0..m {
            let beta = if p == T::zero() {
                T::zero()
            } else {
                // map is increasing in β, so β − map(β) changes sign on [map(0), map(∞)]
                let lo = map(T::zero(), &acc);
                let hi = p * gain.iter().zip(&acc).zip(wf).map(|((g, a), w)| *w * *g / (s2 + *a)).sum::<T>();
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = a + (b - a) * T::lit(0.5);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if mid - map(mid, &acc) < T::zero() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let beta = a + (b - a) * T::lit(0.5);
                let r = relative_residual(&[beta], &[map(beta, &acc)]);
                worst = worst.max(r);
                beta
            };
            let w = h * p / (T::one() + beta);
            for (a, g) in acc.iter_mut().zip(gain) {
                *a += w * *g;
            }
            values.push(beta);
            weights.push(h);
        }
    }
    if worst > T::lit(cfg.fixed_point.tolerance) {
        return Err(Error::ConvergenceFailure {
            iterations: 200,
            residual: worst.as_f64(),
        });
    }
    Ok(BetaFunction {
        values,
        weights,
        kind: BetaKind::Sic,
        residual: worst,
    })
}

/// Successive-cancellation SINR where the user at `x` faces an MMSE filter
/// against the users on `[0, x)`, with those users' SINR taken inside that
/// sub-system: `β(x) = β^MMSE_{[0,x]}(x)`.
///
/// Unlike [`solve_beta_sic`], whose interferers enter with their own
/// cancellation SINR, this function integrates to the optimum capacity.
/// Each cell is evaluated at its midpoint, so the sub-system holds the
/// earlier cells and half of the current one.
pub fn solve_beta_sic_prefix<T: Real>(profile: &ChannelProfile<T>) -> Result<BetaFunction<T>> {
    solve_beta_sic_prefix_with(profile, &AsymptoticConfig::default())
}

pub fn solve_beta_sic_prefix_with<T: Real>(
    profile: &ChannelProfile<T>,
    cfg: &AsymptoticConfig,
) -> Result<BetaFunction<T>> {
    let nx = profile.num_users();
    let mut values = Vec::with_capacity(nx);
    let mut worst = T::zero();
    let mut warm: Vec<T> = Vec::with_capacity(nx);
    for c in 0..nx {
        let mut wx = profile.user_weights()[..=c].to_vec();
        wx[c] *= T::lit(0.5);
        let alpha: T = wx.iter().copied().sum();
        let sub = ChannelProfile::new(
            profile.sigma2(),
            profile.freq_weights().to_vec(),
            wx,
            profile.power()[..=c].to_vec(),
            (0..=c).map(|x| profile.gain(x).to_vec()).collect(),
        )?;
        debug_assert!((sub.alpha() - alpha).abs() <= T::lit(1e-9) * alpha.max(T::one()));
        let init = warm.iter().copied().chain(std::iter::once(T::zero())).collect();
        let sol = solve_beta_mmse_from(&sub, init, cfg)?;
        worst = worst.max(sol.residual);
        values.push(sol.values[c]);
        warm = sol.values;
    }
    Ok(BetaFunction {
        values,
        weights: profile.user_weights().to_vec(),
        kind: BetaKind::SicPrefix,
        residual: worst,
    })
}

/// Solution of the Stieltjes fixed point at a real `z < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesSolution<T> {
    /// `u(f, z)` on the frequency nodes.
    pub u: Vec<T>,
    /// `m(z) = ∫ u(f, z) df`.
    pub m: T,
    /// `D(f) = ∫ ρ(f,y) / (1 + ∫ ρ(f',y) u(f',z) df') dy`, so that `u = 1/(D − z)`.
    pub load: Vec<T>,
    pub residual: T,
}

/// Solves `u(f,z) = 1 / (∫ ρ(f,y) dy / (1 + ∫ ρ(f',y) u(f',z) df') − z)`.
pub fn stieltjes_u<T: Real>(profile: &ChannelProfile<T>, z: T) -> Result<StieltjesSolution<T>> {
    stieltjes_u_with(profile, z, &AsymptoticConfig::default())
}

pub fn stieltjes_u_with<T: Real>(profile: &ChannelProfile<T>, z: T, cfg: &AsymptoticConfig) -> Result<StieltjesSolution<T>> {
    if !(z < T::zero()) {
        return Err(invalid(format!("Stieltjes point must be negative, got {z}")));
    }
    let nf = profile.num_freq();
    let nx = profile.num_users();
    let wf = profile.freq_weights();
    let mut beta = vec![T::zero(); nx];
    let mut load = vec![T::zero(); nf];
    let fill_load = |u: &[T], beta: &mut [T], load: &mut [T]| {
        for (y, b) in beta.iter_mut().enumerate() {
            *b = (0..nf).map(|f| wf[f] * profile.rho(f, y) * u[f]).sum();
        }
        mmse_load(profile, beta, load);
    };
    let out = solve_damped(vec![-T::one() / z; nf], &cfg.fixed_point, |u, next| {
        fill_load(u, &mut beta, &mut load);
        for (n, d) in next.iter_mut().zip(&load) {
            *n = T::one() / (*d - z);
        }
    })?;
    fill_load(&out.value, &mut beta, &mut load);
    let m = out.value.iter().zip(wf).map(|(u, w)| *u * *w).sum();
    Ok(StieltjesSolution {
        u: out.value,
        m,
        load,
        residual: out.residual,
    })
}

/// `Γ^MMSE = ∫₀^α log2(1 + β(x)) dx`.
pub fn capacity_mmse<T: Real>(beta: &BetaFunction<T>) -> T {
    beta.capacity()
}

/// Optimum-receiver capacity per chip, integrating the Stieltjes transform
/// over the noise level: `Γ = log2(e) ∫_{σ²}^∞ (1/z − m(−z)) dz`.
///
/// With `z = σ²/t` and `1/z − u = D/(z(D+z))` the integrand becomes
/// `log2(e) ∫ D_t(f)/(σ² + t D_t(f)) df` on `t ∈ (0, 1]`, which is bounded
/// and free of cancellation.
pub fn capacity_opt_integral<T: Real>(profile: &ChannelProfile<T>) -> Result<T> {
    capacity_opt_integral_with(profile, &AsymptoticConfig::default())
}

pub fn capacity_opt_integral_with<T: Real>(profile: &ChannelProfile<T>, cfg: &AsymptoticConfig) -> Result<T> {
    let s2 = profile.sigma2();
    let wf = profile.freq_weights().to_vec();
    let integrand = |t: T| -> Result<T> {
        let z = -s2 / t;
        let sol = stieltjes_u_with(profile, z, cfg)?;
        Ok(sol
            .load
            .iter()
            .zip(&wf)
            .map(|(d, w)| *w * *d / (s2 + t * *d))
            .sum())
    };
    let v = integrate(
        integrand,
        T::zero(),
        T::one(),
        T::lit(cfg.quad_rel_tol),
        T::lit(1e-300).max(T::min_positive_value()),
        cfg.quad_max_segments,
    )?;
    Ok(v * T::LOG2_E())
}

/// Optimum-receiver capacity from the MMSE solution:
/// `Γ^MMSE − log2(e) ∫ β/(1+β) dx + ∫ log2(1 + D(f)/σ²) df`.
pub fn capacity_opt_identity<T: Real>(profile: &ChannelProfile<T>) -> Result<T> {
    let beta = solve_beta_mmse(profile)?;
    Ok(capacity_opt_from_mmse(profile, &beta))
}

/// The same identity for an already solved MMSE SINR function.
pub fn capacity_opt_from_mmse<T: Real>(profile: &ChannelProfile<T>, beta: &BetaFunction<T>) -> T {
    let mut load = vec![T::zero(); profile.num_freq()];
    mmse_load(profile, &beta.values, &mut load);
    let linear = beta.capacity();
    let penalty: T = beta
        .values
        .iter()
        .zip(&beta.weights)
        .map(|(b, w)| *w * *b / (T::one() + *b))
        .sum::<T>()
        * T::LOG2_E();
    let gain: T = load
        .iter()
        .zip(profile.freq_weights())
        .map(|(d, w)| *w * (*d / profile.sigma2()).ln_1p())
        .sum::<T>()
        / T::LN_2();
    linear - penalty + gain
}
