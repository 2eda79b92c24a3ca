//! Equilibrium power allocations, SIC decoding orders and the permutation
//! signal of the correlated-equilibrium arbitrator.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::game::{solve_beta_plus, EquilibriumTarget};
use crate::rng::SeedStream;
use crate::scalar::Real;

/// Receiver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    Mf,
    Mmse,
    Opt,
    MfSic,
    MmseSic,
}

impl FilterKind {
    pub const ALL: [FilterKind; 5] = [
        FilterKind::Mf,
        FilterKind::Mmse,
        FilterKind::Opt,
        FilterKind::MfSic,
        FilterKind::MmseSic,
    ];

    pub fn is_sic(self) -> bool {
        matches!(self, FilterKind::MfSic | FilterKind::MmseSic)
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Mf => "mf",
            FilterKind::Mmse => "mmse",
            FilterKind::Opt => "opt",
            FilterKind::MfSic => "mf-sic",
            FilterKind::MmseSic => "mmse-sic",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Usage(format!("unknown filter '{s}'")))
    }
}

/// SIC decoding ranks: `ranks[k]` is user `k`'s one-based position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecodingOrder {
    ranks: Vec<usize>,
}

impl DecodingOrder {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let k = ranks.len();
        let mut seen = vec![false; k];
        for &r in &ranks {
            if r == 0 || r > k || std::mem::replace(&mut seen[r - 1], true) {
                return Err(invalid(format!("ranks {ranks:?} are not a permutation of 1..={k}")));
            }
        }
        Ok(Self { ranks })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            ranks: (1..=k).collect(),
        }
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn into_ranks(self) -> Vec<usize> {
        self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Users listed in decoding order.
    pub fn users_by_rank(&self) -> Vec<usize> {
        let mut out = vec![0; self.ranks.len()];
        for (user, &r) in self.ranks.iter().enumerate() {
            out[r - 1] = user;
        }
        out
    }

    /// Builds the order that decodes `users[0]` first, `users[1]` second, ...
    pub fn from_users_by_rank(users: &[usize]) -> Result<Self> {
        let mut ranks = vec![0; users.len()];
        for (i, &u) in users.iter().enumerate() {
            if u >= users.len() {
                return Err(invalid(format!("user {u} out of range")));
            }
            ranks[u] = i + 1;
        }
        Self::new(ranks)
    }
}

/// Sort direction for [`rank_by_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyDirection {
    /// Strongest user decoded first.
    Decreasing,
    Increasing,
}

/// Ranks users by total channel energy; ties go to the lower user id.
pub fn rank_by_energy<T: Real>(energies: &[T], direction: EnergyDirection) -> DecodingOrder {
    let mut users: Vec<usize> = (0..energies.len()).collect();
    users.sort_by(|&a, &b| {
        let ord = match direction {
            EnergyDirection::Decreasing => energies[b].partial_cmp(&energies[a]),
            EnergyDirection::Increasing => energies[a].partial_cmp(&energies[b]),
        };
        ord.unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    DecodingOrder::from_users_by_rank(&users).expect("sorted indices form a permutation")
}

/// CDF of the total energy of an `L`-path Rayleigh channel with mean `ρ`,
/// i.e. Gamma(L, ρ/L).
pub fn energy_cdf<T: Real>(e: T, num_paths: usize, rho: T) -> T {
    if !(e > T::zero()) {
        return T::zero();
    }
    let x = e * T::from_count(num_paths) / rho;
    let mut term = T::one();
    let mut sum = T::one();
    for i in 1..num_paths {
        term *= x / T::from_count(i);
        sum += term;
    }
    (T::one() - (-x).exp() * sum).max(T::zero())
}

/// Ranks from the population CDF, `⌈K(1 − D(E_k))⌉` clamped to `[1, K]`.
///
/// Distinct users can share a rank; [`rank_by_energy`] is the bijective form.
pub fn analytic_ranks<T: Real>(energies: &[T], num_paths: usize, rho: T) -> Vec<usize> {
    let k = energies.len();
    let kf = T::from_count(k);
    energies
        .iter()
        .map(|&e| {
            let r = (kf * (T::one() - energy_cdf(e, num_paths, rho))).ceil();
            r.to_usize().unwrap_or(k).clamp(1, k.max(1))
        })
        .collect()
}

/// Largest `K` whose permutations are indexed by the Lehmer code.
pub const MAX_LEHMER_USERS: usize = 20;

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Maps an arbitrator signal to a decoding order.
///
/// For `K ≤ 20` the signal is read in the factorial number system and
/// enumerates rank vectors in lexicographic order. Larger `K` use a
/// Fisher–Yates shuffle seeded by the signal.
pub fn decode_permutation(signal: u128, k: usize) -> Result<DecodingOrder> {
    if k > MAX_LEHMER_USERS {
        let seed = (signal as u64) ^ ((signal >> 64) as u64).rotate_left(17);
        let mut ranks: Vec<usize> = (1..=k).collect();
        ranks.shuffle(&mut SeedStream::new(seed).rng(&[crate::rng::domain::ORDERING]));
        return DecodingOrder::new(ranks);
    }
    if signal >= factorial(k) {
        return Err(Error::InvalidSignal { signal, k });
    }
    let mut pool: Vec<usize> = (1..=k).collect();
    let mut rest = signal;
    let mut ranks = Vec::with_capacity(k);
    for i in (0..k).rev() {
        let f = factorial(i);
        let digit = (rest / f) as usize;
        rest %= f;
        ranks.push(pool.remove(digit));
    }
    DecodingOrder::new(ranks)
}

/// Inverse of [`decode_permutation`] for `K ≤ 20`.
pub fn encode_permutation(order: &DecodingOrder) -> Result<u128> {
    let k = order.len();
    if k > MAX_LEHMER_USERS {
        return Err(invalid(format!("Lehmer signals need K <= {MAX_LEHMER_USERS}, got {k}")));
    }
    let r = order.ranks();
    let mut signal = 0u128;
    for i in 0..k {
        let smaller = r[i + 1..].iter().filter(|&&x| x < r[i]).count() as u128;
        signal += smaller * factorial(k - 1 - i);
    }
    Ok(signal)
}

/// Equilibrium power vector and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<T> {
    pub powers: Vec<T>,
    pub filter: FilterKind,
    pub ordering: Option<DecodingOrder>,
    pub target: EquilibriumTarget<T>,
}

impl<T: Real> PowerAllocation<T> {
    /// Fails with the first user whose power exceeds `pmax`.
    pub fn check_pmax(self, pmax: T) -> Result<Self> {
        if let Some((user, p)) = self.powers.iter().enumerate().find(|(_, p)| **p > pmax) {
            return Err(Error::FeasibilityViolation {
                user,
                power: p.as_f64(),
                pmax: pmax.as_f64(),
            });
        }
        Ok(self)
    }

    pub fn total_power(&self) -> T {
        total_power(self)
    }
}

pub fn total_power<T: Real>(pa: &PowerAllocation<T>) -> T {
    pa.powers.iter().copied().sum()
}

fn check_energies<T: Real>(energies: &[T]) -> Result<()> {
    if energies.is_empty() {
        return Err(invalid("at least one user is required"));
    }
    for (user, e) in energies.iter().enumerate() {
        if *e == T::zero() {
            return Err(Error::DegenerateChannel { user });
        }
        if !(*e > T::zero()) || !e.is_finite() {
            return Err(invalid(format!("energy of user {user} must be positive, got {e}")));
        }
    }
    Ok(())
}

fn check_noise<T: Real>(sigma2: T) -> Result<()> {
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(())
}

/// Received-power level `C` with `P_k = C/E_k` for the filters without
/// cancellation. `target.beta_plus`, when present, is used for the optimum
/// filter; otherwise `β⁺` is solved at `alpha`.
pub fn equilibrium_level<T: Real>(filter: FilterKind, target: &EquilibriumTarget<T>, alpha: T, sigma2: T) -> Result<T> {
    check_noise(sigma2)?;
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(invalid(format!("load must be positive, got {alpha}")));
    }
    let b = target.beta_star;
    let infeasible = |bound, limit: T| Error::InfeasibleLoad {
        alpha: alpha.as_f64(),
        bound,
        limit: limit.as_f64(),
    };
    match filter {
        FilterKind::Mf => {
            let limit = T::one() / b;
            if !(alpha < limit) {
                return Err(infeasible("alpha < 1/beta*", limit));
            }
            Ok(sigma2 * b / (T::one() - alpha * b))
        }
        FilterKind::Mmse => {
            let limit = T::one() + T::one() / b;
            if !(alpha < limit) {
                return Err(infeasible("alpha < 1 + 1/beta*", limit));
            }
            Ok(sigma2 * b / (T::one() - alpha * b / (T::one() + b)))
        }
        FilterKind::Opt => {
            let bp = match target.beta_plus {
                Some((bp, _)) => bp,
                None => solve_beta_plus(b, alpha)?,
            };
            let limit = T::one() + T::one() / bp;
            if !(alpha < limit) {
                return Err(infeasible("alpha < 1 + 1/beta+", limit));
            }
            Ok(sigma2 * bp / (T::one() - alpha * bp / (T::one() + bp)))
        }
        FilterKind::MfSic | FilterKind::MmseSic => Err(invalid(format!(
            "{filter} needs a decoding order; use the SIC allocations"
        ))),
    }
}

/// Equilibrium powers `P_k = C/E_k` for MF, MMSE and the optimum filter.
pub fn pa_equilibrium<T: Real>(
    energies: &[T],
    filter: FilterKind,
    target: &EquilibriumTarget<T>,
    alpha: T,
    sigma2: T,
) -> Result<PowerAllocation<T>> {
    check_energies(energies)?;
    let level = equilibrium_level(filter, target, alpha, sigma2)?;
    let mut target = *target;
    if filter == FilterKind::Opt && target.beta_plus.is_none() {
        target = target.with_beta_plus(alpha)?;
    }
    Ok(PowerAllocation {
        powers: energies.iter().map(|e| level / *e).collect(),
        filter,
        ordering: None,
        target,
    })
}

fn sic_ratio<T: Real>(filter: FilterKind, beta_star: T, n: usize) -> Result<T> {
    if n == 0 {
        return Err(invalid("spreading length N must be at least 1"));
    }
    let c = match filter {
        FilterKind::MfSic => beta_star,
        FilterKind::MmseSic => beta_star / (T::one() + beta_star),
        other => return Err(invalid(format!("{other} is not a SIC filter"))),
    };
    Ok(c / T::from_count(n))
}

/// Closed-form SIC powers, `P_k = (σ²β*/E_k)(1 + c/N)^{K−k}` for rank `k`,
/// with `c = β*` (MF) or `β*/(1+β*)` (MMSE). Input and output are indexed by
/// rank.
pub fn pa_sic_closed<T: Real>(
    energies_by_rank: &[T],
    filter: FilterKind,
    target: &EquilibriumTarget<T>,
    sigma2: T,
    n: usize,
) -> Result<PowerAllocation<T>> {
    check_energies(energies_by_rank)?;
    check_noise(sigma2)?;
    let r = T::one() + sic_ratio(filter, target.beta_star, n)?;
    let k = energies_by_rank.len();
    let base = sigma2 * target.beta_star;
    Ok(PowerAllocation {
        powers: energies_by_rank
            .iter()
            .enumerate()
            .map(|(i, e)| base / *e * r.powi((k - 1 - i) as i32))
            .collect(),
        filter,
        ordering: Some(DecodingOrder::identity(k)),
        target: *target,
    })
}

/// SIC powers from the backward recursion on received levels
/// `m_i = P E` counted from the last-decoded user:
/// `m_0 = β*σ²`, `m_{i+1} = β*σ² + (c/N) Σ_{j≤i} m_j`. Indexed by rank.
pub fn pa_sic_recursive<T: Real>(
    energies_by_rank: &[T],
    filter: FilterKind,
    target: &EquilibriumTarget<T>,
    sigma2: T,
    n: usize,
) -> Result<PowerAllocation<T>> {
    check_energies(energies_by_rank)?;
    check_noise(sigma2)?;
    let c = sic_ratio(filter, target.beta_star, n)?;
    let k = energies_by_rank.len();
    let base = sigma2 * target.beta_star;
    let mut powers = vec![T::zero(); k];
    let mut decoded_later = T::zero();
    for i in (0..k).rev() {
        let m = base + c * decoded_later;
        powers[i] = m / energies_by_rank[i];
        decoded_later += m;
    }
    Ok(PowerAllocation {
        powers,
        filter,
        ordering: Some(DecodingOrder::identity(k)),
        target: *target,
    })
}

/// Closed-form SIC powers for users in their natural order under `order`.
pub fn pa_sic<T: Real>(
    energies: &[T],
    order: &DecodingOrder,
    filter: FilterKind,
    target: &EquilibriumTarget<T>,
    sigma2: T,
    n: usize,
) -> Result<PowerAllocation<T>> {
    if order.len() != energies.len() {
        return Err(invalid("decoding order and energies differ in length"));
    }
    let by_rank = order.users_by_rank();
    let e: Vec<T> = by_rank.iter().map(|&u| energies[u]).collect();
    let ranked = pa_sic_closed(&e, filter, target, sigma2, n)?;
    let mut powers = vec![T::zero(); energies.len()];
    for (i, &u) in by_rank.iter().enumerate() {
        powers[u] = ranked.powers[i];
    }
    Ok(PowerAllocation {
        powers,
        filter,
        ordering: Some(order.clone()),
        target: *target,
    })
}
