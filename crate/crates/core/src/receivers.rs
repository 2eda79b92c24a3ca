//! Finite-size SINR of the matched filter and the MMSE receiver, with and
//! without successive interference cancellation.

use crate::channel::SystemRealization;
use crate::error::{invalid, Result};
use crate::numerics::fixed_point::{solve_damped, FixedPointConfig};
use crate::numerics::linalg::{inner_gram, outer_gram, Cholesky};
use crate::scalar::{Cplx, Real};

/// Users whose signals interfere with a tagged user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceSet {
    tagged: usize,
    members: Vec<usize>,
}

impl InterferenceSet {
    /// Every other user of a `k`-user system.
    pub fn all_but(tagged: usize, num_users: usize) -> Self {
        Self {
            tagged,
            members: (0..num_users).filter(|&j| j != tagged).collect(),
        }
    }

    /// Users decoded after `tagged` under SIC. `ranks[j]` is user `j`'s
    /// one-based decoding rank.
    pub fn decoded_after(tagged: usize, ranks: &[usize]) -> Self {
        let own = ranks[tagged];
        Self {
            tagged,
            members: (0..ranks.len()).filter(|&j| ranks[j] > own).collect(),
        }
    }

    pub fn empty(tagged: usize) -> Self {
        Self {
            tagged,
            members: Vec::new(),
        }
    }

    pub fn new(tagged: usize, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.contains(&tagged) {
            return Err(invalid(format!("user {tagged} cannot interfere with itself")));
        }
        Ok(Self { tagged, members })
    }

    pub fn tagged(&self) -> usize {
        self.tagged
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Same set without `user`.
    pub fn without(&self, user: usize) -> Self {
        Self {
            tagged: self.tagged,
            members: self.members.iter().copied().filter(|&j| j != user).collect(),
        }
    }

    fn check<T: Real>(&self, sys: &SystemRealization<T>) -> Result<()> {
        sys.check_user(self.tagged)?;
        if let Some(j) = self.members.iter().find(|&&j| j >= sys.num_users()) {
            return Err(invalid(format!("interferer {j} out of range")));
        }
        Ok(())
    }
}

/// Which users interfere in the joint SINR solvers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterferenceRule {
    /// All other users (no cancellation).
    Full,
    /// SIC with the given one-based ranks: only later-decoded users interfere.
    SicOrder(Vec<usize>),
}

impl InterferenceRule {
    pub fn set_for(&self, tagged: usize, num_users: usize) -> InterferenceSet {
        match self {
            InterferenceRule::Full => InterferenceSet::all_but(tagged, num_users),
            InterferenceRule::SicOrder(ranks) => InterferenceSet::decoded_after(tagged, ranks),
        }
    }

    fn check(&self, num_users: usize) -> Result<()> {
        if let InterferenceRule::SicOrder(ranks) = self {
            let mut seen = vec![false; num_users];
            if ranks.len() != num_users {
                return Err(invalid("rank vector length differs from K"));
            }
            for &r in ranks {
                if r == 0 || r > num_users || std::mem::replace(&mut seen[r - 1], true) {
                    return Err(invalid("ranks must be a permutation of 1..=K"));
                }
            }
        }
        Ok(())
    }
}

/// Large-system matched-filter SINR formula evaluated on a realization:
///
/// `P_k (Σ_n|d_k|²/N)² / (σ²/N Σ_n|d_k|² + 1/N² Σ_{j∈I} Σ_n P_j|d_j|²|d_k|²)`.
pub fn sinr_mf<T: Real>(sys: &SystemRealization<T>, set: &InterferenceSet) -> Result<T> {
    set.check(sys)?;
    let k = set.tagged();
    let n = T::from_count(sys.spreading_length());
    let gk = sys.gain_power(k);
    let energy = sys.mean_gain(k);
    let mut cross = T::zero();
    for &j in set.members() {
        let pj = sys.powers()[j];
        if pj == T::zero() {
            continue;
        }
        let dot: T = sys.gain_power(j).iter().zip(gk).map(|(a, b)| *a * *b).sum();
        cross += pj * dot;
    }
    let denom = sys.sigma2() * energy + cross / (n * n);
    Ok(sys.powers()[k] * energy * energy / denom)
}

/// [`sinr_mf`] for every user under `rule`.
pub fn sinr_mf_all<T: Real>(sys: &SystemRealization<T>, rule: &InterferenceRule) -> Result<Vec<T>> {
    rule.check(sys.num_users())?;
    (0..sys.num_users())
        .map(|k| sinr_mf(sys, &rule.set_for(k, sys.num_users())))
        .collect()
}

/// Exact matched-filter SINR with the realized spreading codes:
/// `P_k‖v_k‖⁴ / (σ²‖v_k‖² + Σ_{j∈I} P_j |v_kᴴ v_j|²)`, `v = d ⊙ w`.
pub fn sinr_mf_exact<T: Real>(sys: &SystemRealization<T>, set: &InterferenceSet) -> Result<T> {
    set.check(sys)?;
    let k = set.tagged();
    let v = sys.signature(k);
    let norm: T = v.iter().map(|x| x.norm_sqr()).sum();
    let mut interference = T::zero();
    for &j in set.members() {
        let vj = sys.signature(j);
        let dot: Cplx<T> = v
            .iter()
            .zip(&vj)
            .fold(Cplx::new(T::zero(), T::zero()), |s, (a, b)| s + a.conj() * b);
        interference += sys.powers()[j] * dot.norm_sqr();
    }
    Ok(sys.powers()[k] * norm * norm / (sys.sigma2() * norm + interference))
}

/// How the interference-plus-noise covariance is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MmseRoute {
    /// Smaller of the two below.
    #[default]
    Auto,
    /// Factor the `N×N` matrix `σ²I + G Gᴴ`.
    Chip,
    /// Factor the `|I|×|I|` matrix `σ²I + Gᴴ G` (matrix inversion lemma).
    User,
}

/// Exact MMSE SINR `P_k vᴴ(G Gᴴ + σ² I)⁻¹ v` with `G` the interferers'
/// effective signatures `√P_j d_j ⊙ w_j`.
pub fn sinr_mmse_exact<T: Real>(sys: &SystemRealization<T>, set: &InterferenceSet) -> Result<T> {
    sinr_mmse_exact_with(sys, set, MmseRoute::Auto)
}

pub fn sinr_mmse_exact_with<T: Real>(
    sys: &SystemRealization<T>,
    set: &InterferenceSet,
    route: MmseRoute,
) -> Result<T> {
    set.check(sys)?;
    let sigma2 = sys.sigma2();
    if !(sigma2 > T::zero()) {
        return Err(invalid("MMSE SINR needs a positive noise variance"));
    }
    let k = set.tagged();
    let n = sys.spreading_length();
    let v = sys.signature(k);
    let norm: T = v.iter().map(|x| x.norm_sqr()).sum();
    let columns: Vec<Vec<Cplx<T>>> = set
        .members()
        .iter()
        .filter(|&&j| sys.powers()[j] > T::zero())
        .map(|&j| {
            let amp = sys.powers()[j].sqrt();
            sys.signature(j).into_iter().map(|x| x * amp).collect()
        })
        .collect();
    if columns.is_empty() {
        return Ok(sys.powers()[k] * norm / sigma2);
    }
    let route = match route {
        MmseRoute::Auto if columns.len() < n => MmseRoute::User,
        MmseRoute::Auto => MmseRoute::Chip,
        r => r,
    };
    let quad = match route {
        MmseRoute::Chip => Cholesky::factor(outer_gram(&columns, n, sigma2), n)?.quadratic_form_inverse(&v),
        _ => {
            // vᴴ(σ²I + GGᴴ)⁻¹v = (‖v‖² − uᴴ(σ²I + GᴴG)⁻¹u)/σ², u = Gᴴv
            let u: Vec<Cplx<T>> = columns
                .iter()
                .map(|c| {
                    c.iter()
                        .zip(&v)
                        .fold(Cplx::new(T::zero(), T::zero()), |s, (a, b)| s + a.conj() * b)
                })
                .collect();
            let gram = Cholesky::factor(inner_gram(&columns, sigma2), columns.len())?;
            ((norm - gram.quadratic_form_inverse(&u)) / sigma2).max(T::zero())
        }
    };
    Ok(sys.powers()[k] * quad)
}

/// [`sinr_mmse_exact`] for every user under `rule`.
///
/// Uses one factorization of `σ²I + WᴴW`, `W = [√P_j v_j]`. Without
/// cancellation `β_k = 1/(σ²[(σ²I + WᴴW)⁻¹]_kk) − 1`. Under SIC the users are
/// stacked last-decoded first, so each user's interferers form the leading
/// block before it and `β_k = L_kk²/σ² − 1` with `L` the Cholesky factor.
pub fn sinr_mmse_exact_all<T: Real>(sys: &SystemRealization<T>, rule: &InterferenceRule) -> Result<Vec<T>> {
    let k_users = sys.num_users();
    rule.check(k_users)?;
    let sigma2 = sys.sigma2();
    if !(sigma2 > T::zero()) {
        return Err(invalid("MMSE SINR needs a positive noise variance"));
    }
    for k in 0..k_users {
        sys.check_user(k)?;
    }
    let mut active: Vec<usize> = (0..k_users).filter(|&j| sys.powers()[j] > T::zero()).collect();
    if let InterferenceRule::SicOrder(ranks) = rule {
        active.sort_by_key(|&j| std::cmp::Reverse(ranks[j]));
    }
    let columns: Vec<Vec<Cplx<T>>> = active
        .iter()
        .map(|&j| {
            let amp = sys.powers()[j].sqrt();
            sys.signature(j).into_iter().map(|x| x * amp).collect()
        })
        .collect();
    let mut beta = vec![T::zero(); k_users];
    if columns.is_empty() {
        return Ok(beta);
    }
    let chol = Cholesky::factor(inner_gram(&columns, sigma2), columns.len())?;
    match rule {
        InterferenceRule::Full => {
            for (&j, d) in active.iter().zip(chol.inverse_diagonal()) {
                beta[j] = (T::one() / (sigma2 * d) - T::one()).max(T::zero());
            }
        }
        InterferenceRule::SicOrder(_) => {
            for (pos, &j) in active.iter().enumerate() {
                let l = chol.pivot(pos);
                beta[j] = (l * l / sigma2 - T::one()).max(T::zero());
            }
        }
    }
    Ok(beta)
}

/// Large-system MMSE approximation on a realization: the joint solution of
///
/// `β_k = P_k (1/N) Σ_n |d_{k,n}|² / (σ² + (1/N) Σ_{j∈I_k} P_j|d_{j,n}|²/(1+β_j))`.
///
/// Under [`InterferenceRule::SicOrder`] each user depends only on users decoded
/// later, so the system is solved exactly by a backward sweep over ranks.
pub fn sinr_mmse_approx<T: Real>(sys: &SystemRealization<T>, rule: &InterferenceRule) -> Result<Vec<T>> {
    sinr_mmse_approx_with(sys, rule, &FixedPointConfig::default())
}

pub fn sinr_mmse_approx_with<T: Real>(
    sys: &SystemRealization<T>,
    rule: &InterferenceRule,
    cfg: &FixedPointConfig,
) -> Result<Vec<T>> {
    let k_users = sys.num_users();
    rule.check(k_users)?;
    if !(sys.sigma2() > T::zero()) {
        return Err(invalid("MMSE SINR needs a positive noise variance"));
    }
    for k in 0..k_users {
        sys.check_user(k)?;
    }
    let n = sys.spreading_length();
    let inv_n = T::one() / T::from_count(n);
    let sigma2 = sys.sigma2();
    let powers = sys.powers();

    let sinr_given = |k: usize, interference: &[T]| -> T {
        let g = sys.gain_power(k);
        let s: T = g.iter().zip(interference).map(|(gn, i)| *gn / (sigma2 + *i)).sum();
        powers[k] * s * inv_n
    };

    match rule {
        InterferenceRule::SicOrder(ranks) => {
            let mut order: Vec<usize> = (0..k_users).collect();
            order.sort_by_key(|&j| std::cmp::Reverse(ranks[j]));
            let mut beta = vec![T::zero(); k_users];
            let mut interference = vec![T::zero(); n];
            for &k in &order {
                beta[k] = sinr_given(k, &interference);
                let w = powers[k] * inv_n / (T::one() + beta[k]);
                for (acc, g) in interference.iter_mut().zip(sys.gain_power(k)) {
                    *acc += w * *g;
                }
            }
            Ok(beta)
        }
        InterferenceRule::Full => {
            if k_users == 1 {
                return Ok(vec![sinr_given(0, &vec![T::zero(); n])]);
            }
            let mut total = vec![T::zero(); n];
            let out = solve_damped(vec![T::zero(); k_users], cfg, |beta, next| {
                total.fill(T::zero());
                for j in 0..k_users {
                    let w = powers[j] * inv_n / (T::one() + beta[j]);
                    for (acc, g) in total.iter_mut().zip(sys.gain_power(j)) {
                        *acc += w * *g;
                    }
                }
                for k in 0..k_users {
                    let own = powers[k] * inv_n / (T::one() + beta[k]);
                    let g = sys.gain_power(k);
                    let s: T = g
                        .iter()
                        .zip(&total)
                        .map(|(gn, t)| *gn / (sigma2 + (*t - own * *gn).max(T::zero())))
                        .sum();
                    next[k] = powers[k] * s * inv_n;
                }
            })?;
            Ok(out.value)
        }
    }
}

/// Equivalent SINR of the optimum receiver: the common `β` with
/// `K log2(1+β) = log2 det(I + YYᴴ/σ²)`.
pub fn sinr_opt_equivalent<T: Real>(sys: &SystemRealization<T>) -> Result<T> {
    let k = sys.num_users();
    let sigma2 = sys.sigma2();
    let columns: Vec<Vec<Cplx<T>>> = (0..k)
        .map(|j| {
            let amp = (sys.powers()[j] / sigma2).sqrt();
            sys.signature(j).into_iter().map(|x| x * amp).collect()
        })
        .collect();
    // det(I_N + YYᴴ/σ²) = det(I_K + YᴴY/σ²)
    let ln_det = Cholesky::factor(inner_gram(&columns, T::one()), k)?.ln_det();
    Ok((ln_det / T::from_count(k)).exp_m1())
}

/// Shannon capacity per chip `(1/N) log2 det(I + YYᴴ/σ²)`.
pub fn capacity_per_chip<T: Real>(sys: &SystemRealization<T>) -> Result<T> {
    let beta = sinr_opt_equivalent(sys)?;
    Ok(sys.alpha() * beta.ln_1p() / T::LN_2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_realization, MultipathChannel};
    use crate::error::Error;
    use crate::rng::SeedStream;

    fn flat_system(n: usize, powers: Vec<f64>, sigma2: f64) -> SystemRealization<f64> {
        let k = powers.len();
        let gains = vec![vec![Cplx::new(1.0, 0.0); n]; k];
        let w = (1.0 / n as f64).sqrt();
        let codes = (0..k).map(|_| vec![Cplx::new(w, 0.0); n]).collect();
        SystemRealization::from_parts(gains, codes, powers, sigma2).unwrap()
    }

    fn random_system(seed: u64, n: usize, k: usize, l: usize, sigma2: f64) -> SystemRealization<f64> {
        let s = SeedStream::new(seed);
        let chans: Vec<MultipathChannel<f64>> = (0..k)
            .map(|j| MultipathChannel::sample(l, 1.0, &mut s.rng(&[j as u64])).unwrap())
            .collect();
        let powers: Vec<f64> = (0..k).map(|j| 0.5 + (j % 3) as f64 * 0.5).collect();
        build_realization(&chans, &powers, n, sigma2, &mut s.rng(&[1000])).unwrap()
    }

    #[test]
    fn mf_single_user() {
        let sys = flat_system(1, vec![1.0], 1.0);
        assert!((sinr_mf(&sys, &InterferenceSet::empty(0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mf_two_users_hand_value() {
        let sys = flat_system(2, vec![1.0, 1.0], 1.0);
        let full = sinr_mf(&sys, &InterferenceSet::all_but(0, 2)).unwrap();
        assert!((full - 2.0 / 3.0).abs() < 1e-15);
        let sic = sinr_mf(&sys, &InterferenceSet::decoded_after(1, &[1, 2])).unwrap();
        assert!((sic - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_channel_is_an_error() {
        let mut sys = flat_system(4, vec![1.0, 1.0], 1.0);
        let gains = vec![vec![Cplx::new(0.0, 0.0); 4], sys.freq_gains(1).to_vec()];
        sys = SystemRealization::from_parts(
            gains,
            vec![sys.spreading_code(0).to_vec(), sys.spreading_code(1).to_vec()],
            vec![1.0, 1.0],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            sinr_mf(&sys, &InterferenceSet::all_but(0, 2)),
            Err(Error::DegenerateChannel { user: 0 })
        ));
    }

    #[test]
    fn mmse_without_interference_is_matched_snr() {
        let sys = flat_system(8, vec![1.0, 3.0], 1.0);
        let b = sinr_mmse_exact(&sys, &InterferenceSet::empty(0)).unwrap();
        assert!((b - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_interferer_is_invisible() {
        let gains = vec![vec![Cplx::new(1.0, 0.0); 2]; 2];
        let s = (0.5f64).sqrt();
        let codes = vec![
            vec![Cplx::new(s, 0.0), Cplx::new(s, 0.0)],
            vec![Cplx::new(s, 0.0), Cplx::new(-s, 0.0)],
        ];
        let sys = SystemRealization::from_parts(gains, codes, vec![1.0, 5.0], 0.5).unwrap();
        for route in [MmseRoute::Chip, MmseRoute::User] {
            let with = sinr_mmse_exact_with(&sys, &InterferenceSet::all_but(0, 2), route).unwrap();
            let without = sinr_mmse_exact_with(&sys, &InterferenceSet::empty(0), route).unwrap();
            assert!((with - without).abs() < 1e-13);
        }
    }

    #[test]
    fn both_inversion_routes_agree() {
        let sys = random_system(4, 16, 24, 3, 0.1);
        for k in [0, 7, 23] {
            let set = InterferenceSet::all_but(k, 24);
            let a = sinr_mmse_exact_with(&sys, &set, MmseRoute::Chip).unwrap();
            let b = sinr_mmse_exact_with(&sys, &set, MmseRoute::User).unwrap();
            assert!((a / b - 1.0).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn joint_factorization_matches_per_user_solves() {
        for (n, k) in [(16, 24), (64, 12)] {
            let sys = random_system(9, n, k, 3, 1e-2);
            let sys = sys.with_power(5, 0.0).unwrap();
            let ranks: Vec<usize> = (0..k).map(|j| (j * 7) % k + 1).collect();
            for rule in [InterferenceRule::Full, InterferenceRule::SicOrder(ranks)] {
                let all = sinr_mmse_exact_all(&sys, &rule).unwrap();
                for j in 0..k {
                    let one = sinr_mmse_exact_with(&sys, &rule.set_for(j, k), MmseRoute::Chip).unwrap();
                    assert!((all[j] - one).abs() <= 1e-9 * one.max(1e-12), "{rule:?} {j} {} {one}", all[j]);
                }
            }
        }
    }

    #[test]
    fn approx_single_user_closed_form() {
        let sys = random_system(1, 32, 1, 4, 0.3);
        let b = sinr_mmse_approx(&sys, &InterferenceRule::Full).unwrap();
        assert!((b[0] - sys.powers()[0] * sys.mean_gain(0) / 0.3).abs() < 1e-12);
    }

    #[test]
    fn approx_flat_matches_scalar_quadratic() {
        // β = P/(σ² + ((K−1)/N) P/(1+β)), solved in closed form.
        let (n, k, p, s2) = (16usize, 6usize, 2.0f64, 0.5f64);
        let sys = flat_system(n, vec![p; k], s2);
        let b = sinr_mmse_approx(&sys, &InterferenceRule::Full).unwrap();
        let c = (k - 1) as f64 / n as f64;
        // s2 β² + (s2 + c p − p) β − p = 0
        let (qa, qb, qc) = (s2, s2 + c * p - p, -p);
        let root = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
        for v in b {
            assert!((v - root).abs() < 1e-9 * root);
        }
    }

    #[test]
    fn approx_sic_is_explicit_backward_sweep() {
        let sys = random_system(2, 32, 5, 2, 0.2);
        let ranks = vec![3, 1, 5, 2, 4];
        let b = sinr_mmse_approx(&sys, &InterferenceRule::SicOrder(ranks.clone())).unwrap();
        // last-decoded user sees no interference
        let last = ranks.iter().position(|&r| r == 5).unwrap();
        assert!((b[last] - sys.powers()[last] * sys.mean_gain(last) / 0.2).abs() < 1e-12);
        // each value satisfies its own equation
        for k in 0..5 {
            let g = sys.gain_power(k);
            let mut s = 0.0;
            for nn in 0..32 {
                let mut i = 0.0;
                for j in 0..5 {
                    if ranks[j] > ranks[k] {
                        i += sys.powers()[j] * sys.gain_power(j)[nn] / (1.0 + b[j]) / 32.0;
                    }
                }
                s += g[nn] / (0.2 + i);
            }
            assert!((b[k] - sys.powers()[k] * s / 32.0).abs() < 1e-12 * b[k]);
        }
    }

    #[test]
    fn bad_rank_vectors_are_rejected() {
        let sys = random_system(2, 8, 3, 2, 0.2);
        for ranks in [vec![1, 2], vec![1, 1, 2], vec![0, 1, 2], vec![1, 2, 4]] {
            assert!(sinr_mmse_approx(&sys, &InterferenceRule::SicOrder(ranks)).is_err());
        }
    }

    #[test]
    fn removing_interferers_never_hurts() {
        let sys = random_system(8, 16, 6, 2, 0.1);
        let full = InterferenceSet::all_but(2, 6);
        for &j in full.members() {
            let reduced = full.without(j);
            assert!(sinr_mf(&sys, &reduced).unwrap() >= sinr_mf(&sys, &full).unwrap());
            assert!(sinr_mmse_exact(&sys, &reduced).unwrap() >= sinr_mmse_exact(&sys, &full).unwrap() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn opt_equivalent_single_user() {
        let sys = flat_system(4, vec![2.0], 0.5);
        assert!((sinr_opt_equivalent(&sys).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn interference_set_rejects_self() {
        assert!(InterferenceSet::new(1, vec![0, 1]).is_err());
        assert_eq!(InterferenceSet::new(1, vec![2, 0, 2]).unwrap().members(), &[0, 2]);
    }
}
