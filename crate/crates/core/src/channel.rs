//! Multipath fading, DFT-domain gains, spreading codes and full system
//! realizations of the model `y = (H P^{1/2} ⊙ W) s + n`.
//!
//! Path delays are chip spaced, so user `k`'s gain on frequency bin `n` is
//! `d_{k,n} = Σ_ℓ h_ℓ e^{−2πi n ℓ / N}` (zero-based `n` and `ℓ`).

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::complex_normal;
use crate::scalar::{expi_neg, Cplx, Real};

/// Time-domain multipath channel of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel<T> {
    paths: Vec<Cplx<T>>,
    rho: T,
}

impl<T: Real> MultipathChannel<T> {
    /// Channel with explicit path gains; `rho` is the nominal average power.
    pub fn new(paths: Vec<Cplx<T>>, rho: T) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid("a channel needs at least one path"));
        }
        if paths.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(invalid("path gains must be finite"));
        }
        Ok(Self { paths, rho })
    }

    /// Rayleigh channel with `L` i.i.d. `CN(0, rho/L)` paths.
    pub fn sample<R: Rng + ?Sized>(num_paths: usize, rho: T, rng: &mut R) -> Result<Self> {
        if num_paths == 0 {
            return Err(invalid("path count L must be at least 1"));
        }
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(invalid(format!("average channel power must be positive, got {rho}")));
        }
        let var = rho / T::from_count(num_paths);
        let paths = (0..num_paths).map(|_| complex_normal(rng, var)).collect();
        Ok(Self { paths, rho })
    }

    /// Rayleigh channel with a per-path variance profile, e.g. decaying with
    /// delay. The nominal power is the profile sum.
    pub fn sample_with_profile<R: Rng + ?Sized>(variances: &[T], rng: &mut R) -> Result<Self> {
        if variances.is_empty() {
            return Err(invalid("path count L must be at least 1"));
        }
        if variances.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(invalid("path variances must be finite and nonnegative"));
        }
        let rho: T = variances.iter().copied().sum();
        if !(rho > T::zero()) {
            return Err(invalid("path variance profile sums to zero"));
        }
        let paths = variances.iter().map(|&v| complex_normal(rng, v)).collect();
        Ok(Self { paths, rho })
    }

    pub fn paths(&self) -> &[Cplx<T>] {
        &self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    /// `Σ_ℓ |h_ℓ|²`.
    pub fn total_energy(&self) -> T {
        self.paths.iter().map(|h| h.norm_sqr()).sum()
    }

    /// Gain on zero-based frequency bin `bin` of an `n`-point grid.
    pub fn dft_gain_at(&self, bin: usize, n: usize) -> Cplx<T> {
        let step = T::TAU() / T::from_count(n);
        self.paths
            .iter()
            .enumerate()
            .fold(Cplx::new(T::zero(), T::zero()), |acc, (l, h)| {
                // Reduce the phase index mod n before scaling to keep it exact.
                let idx = (bin * l) % n;
                acc + *h * expi_neg(step * T::from_count(idx))
            })
    }

    /// Gains `d_n` on all `n` bins.
    pub fn dft_gains(&self, n: usize) -> Result<Vec<Cplx<T>>> {
        if n == 0 {
            return Err(invalid("spreading length N must be at least 1"));
        }
        Ok((0..n).map(|bin| self.dft_gain_at(bin, n)).collect())
    }
}

/// Convenience wrapper: see [`MultipathChannel::sample`].
pub fn sample_multipath<T: Real, R: Rng + ?Sized>(
    num_paths: usize,
    rho: T,
    rng: &mut R,
) -> Result<MultipathChannel<T>> {
    MultipathChannel::sample(num_paths, rho, rng)
}

/// Convenience wrapper: see [`MultipathChannel::dft_gains`].
pub fn dft_gains<T: Real>(ch: &MultipathChannel<T>, n: usize) -> Result<Vec<Cplx<T>>> {
    ch.dft_gains(n)
}

/// Convenience wrapper: see [`MultipathChannel::total_energy`].
pub fn total_energy<T: Real>(ch: &MultipathChannel<T>) -> T {
    ch.total_energy()
}

/// One spreading code: `n` i.i.d. `CN(0, 1/n)` chips.
pub fn sample_spreading_code<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Cplx<T>> {
    let var = T::one() / T::from_count(n);
    (0..n).map(|_| complex_normal(rng, var)).collect()
}

/// `k` spreading codes of length `n`, returned column by column.
pub fn sample_spreading<T: Real, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<Cplx<T>>>> {
    if n == 0 || k == 0 {
        return Err(invalid(format!("spreading matrix needs N, K >= 1 (got {n}x{k})")));
    }
    Ok((0..k).map(|_| sample_spreading_code(n, rng)).collect())
}

/// One draw of the full uplink model.
///
/// Matrices are stored column-major: `freq_gains[k][n]` is `d_{k,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRealization<T> {
    n: usize,
    freq_gains: Vec<Vec<Cplx<T>>>,
    gain_power: Vec<Vec<T>>,
    spreading: Vec<Vec<Cplx<T>>>,
    powers: Vec<T>,
    sigma2: T,
}

impl<T: Real> SystemRealization<T> {
    /// Assembles a realization from frequency gains and spreading codes.
    pub fn from_parts(
        freq_gains: Vec<Vec<Cplx<T>>>,
        spreading: Vec<Vec<Cplx<T>>>,
        powers: Vec<T>,
        sigma2: T,
    ) -> Result<Self> {
        let k = freq_gains.len();
        if k == 0 {
            return Err(invalid("a realization needs at least one user"));
        }
        let n = freq_gains[0].len();
        if n == 0 {
            return Err(invalid("spreading length N must be at least 1"));
        }
        if spreading.len() != k || powers.len() != k {
            return Err(invalid(format!(
                "mismatched lengths: {k} channels, {} codes, {} powers",
                spreading.len(),
                powers.len()
            )));
        }
        if freq_gains.iter().chain(&spreading).any(|c| c.len() != n) {
            return Err(invalid("all columns must have length N"));
        }
        check_powers(&powers)?;
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
        }
        let gain_power = freq_gains
            .iter()
            .map(|col| col.iter().map(|d| d.norm_sqr()).collect())
            .collect();
        Ok(Self {
            n,
            freq_gains,
            gain_power,
            spreading,
            powers,
            sigma2,
        })
    }

    pub fn spreading_length(&self) -> usize {
        self.n
    }

    pub fn num_users(&self) -> usize {
        self.powers.len()
    }

    /// Load `K/N`.
    pub fn alpha(&self) -> T {
        T::from_count(self.num_users()) / T::from_count(self.n)
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn powers(&self) -> &[T] {
        &self.powers
    }

    pub fn freq_gains(&self, user: usize) -> &[Cplx<T>] {
        &self.freq_gains[user]
    }

    /// `|d_{k,n}|²` for all bins of user `k`.
    pub fn gain_power(&self, user: usize) -> &[T] {
        &self.gain_power[user]
    }

    pub fn spreading_code(&self, user: usize) -> &[Cplx<T>] {
        &self.spreading[user]
    }

    /// `(1/N) Σ_n |d_{k,n}|²`, the total channel energy by Parseval.
    pub fn mean_gain(&self, user: usize) -> T {
        self.gain_power[user].iter().copied().sum::<T>() / T::from_count(self.n)
    }

    pub fn energies(&self) -> Vec<T> {
        (0..self.num_users()).map(|k| self.mean_gain(k)).collect()
    }

    /// Effective unit-power signature `d_k ⊙ w_k`.
    pub fn signature(&self, user: usize) -> Vec<Cplx<T>> {
        self.freq_gains[user]
            .iter()
            .zip(&self.spreading[user])
            .map(|(d, w)| *d * *w)
            .collect()
    }

    /// Same channels and codes with a different power vector.
    pub fn with_powers(&self, powers: Vec<T>) -> Result<Self> {
        if powers.len() != self.num_users() {
            return Err(invalid(format!(
                "expected {} powers, got {}",
                self.num_users(),
                powers.len()
            )));
        }
        check_powers(&powers)?;
        Ok(Self {
            powers,
            ..self.clone()
        })
    }

    /// Copy with user `user`'s power replaced.
    pub fn with_power(&self, user: usize, power: T) -> Result<Self> {
        let mut p = self.powers.clone();
        p[user] = power;
        self.with_powers(p)
    }

    pub(crate) fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.num_users() {
            return Err(invalid(format!("user {user} out of range (K = {})", self.num_users())));
        }
        if self.gain_power[user].iter().all(|g| *g == T::zero()) {
            return Err(Error::DegenerateChannel { user });
        }
        Ok(())
    }
}

fn check_powers<T: Real>(powers: &[T]) -> Result<()> {
    if let Some(p) = powers.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
        return Err(invalid(format!("powers must be finite and nonnegative, got {p}")));
    }
    Ok(())
}

/// Builds a realization: DFT gains of each channel plus fresh spreading codes.
pub fn build_realization<T: Real, R: Rng + ?Sized>(
    channels: &[MultipathChannel<T>],
    powers: &[T],
    n: usize,
    sigma2: T,
    rng: &mut R,
) -> Result<SystemRealization<T>> {
    if channels.len() != powers.len() {
        return Err(invalid(format!(
            "{} channels but {} powers",
            channels.len(),
            powers.len()
        )));
    }
    if channels.is_empty() {
        return Err(invalid("a realization needs at least one user"));
    }
    let gains = channels.iter().map(|c| c.dft_gains(n)).collect::<Result<Vec<_>>>()?;
    let spreading = sample_spreading(n, channels.len(), rng)?;
    SystemRealization::from_parts(gains, spreading, powers.to_vec(), sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = SeedStream::new(0).rng(&[]);
        assert!(MultipathChannel::<f64>::sample(0, 1.0, &mut rng).is_err());
        assert!(MultipathChannel::<f64>::sample(2, 0.0, &mut rng).is_err());
        assert!(MultipathChannel::<f64>::sample(2, -1.0, &mut rng).is_err());
        assert!(MultipathChannel::<f64>::new(vec![], 1.0).is_err());
        let ch = MultipathChannel::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        assert!(ch.dft_gains(0).is_err());
    }

    #[test]
    fn flat_channel_is_constant_in_frequency() {
        let h = c(0.3, -1.2);
        let ch = MultipathChannel::new(vec![h], 1.0).unwrap();
        for d in ch.dft_gains(7).unwrap() {
            assert!((d - h).norm() < 1e-15);
        }
    }

    #[test]
    fn two_point_dft() {
        let ch = MultipathChannel::new(vec![c(1.0, 0.0), c(1.0, 0.0)], 1.0).unwrap();
        let d = ch.dft_gains(2).unwrap();
        assert!((d[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(d[1].norm() < 1e-15);
    }

    #[test]
    fn four_point_dft_against_hand_values() {
        // d_n = 1 + i·e^{−πi n/2}: (1+i, 2, 1−i, 0)
        let ch = MultipathChannel::new(vec![c(1.0, 0.0), c(0.0, 1.0)], 1.0).unwrap();
        let d = ch.dft_gains(4).unwrap();
        let expect = [c(1.0, 1.0), c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.0)];
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        let mean: f64 = d.iter().map(|x| x.norm_sqr()).sum::<f64>() / 4.0;
        assert!((mean - 2.0).abs() < 1e-14);
    }

    #[test]
    fn total_energy_examples() {
        let ch = MultipathChannel::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 1.0).unwrap();
        assert_eq!(ch.total_energy(), 1.0);
        let ch = MultipathChannel::new(vec![c(0.6, 0.0), c(0.0, 0.8)], 1.0).unwrap();
        assert!((ch.total_energy() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parseval_on_random_draw() {
        let mut rng = SeedStream::new(11).rng(&[]);
        let ch: MultipathChannel<f64> = MultipathChannel::sample(8, 1.0, &mut rng).unwrap();
        let d = ch.dft_gains(256).unwrap();
        let mean: f64 = d.iter().map(|x| x.norm_sqr()).sum::<f64>() / 256.0;
        assert!((mean / ch.total_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_variance_matches_rho_over_l() {
        let mut rng = SeedStream::new(3).rng(&[]);
        let draws = 20_000;
        let mut acc = [0.0f64; 4];
        for _ in 0..draws {
            let ch: MultipathChannel<f64> = MultipathChannel::sample(4, 1.0, &mut rng).unwrap();
            for (a, h) in acc.iter_mut().zip(ch.paths()) {
                *a += h.norm_sqr();
            }
        }
        for a in acc {
            assert!((a / draws as f64 - 0.25).abs() < 0.01, "{a}");
        }
    }

    #[test]
    fn profile_hook_sets_rho() {
        let mut rng = SeedStream::new(3).rng(&[]);
        let ch: MultipathChannel<f64> =
            MultipathChannel::sample_with_profile(&[0.5, 0.3, 0.2], &mut rng).unwrap();
        assert_eq!(ch.num_paths(), 3);
        assert!((ch.rho() - 1.0).abs() < 1e-15);
        assert!(MultipathChannel::<f64>::sample_with_profile(&[0.0, 0.0], &mut rng).is_err());
    }

    #[test]
    fn spreading_columns_have_unit_norm_on_average() {
        let mut rng = SeedStream::new(5).rng(&[]);
        let w: Vec<Vec<Cplx<f64>>> = sample_spreading(256, 32, &mut rng).unwrap();
        assert_eq!(w.len(), 32);
        for col in &w {
            let norm: f64 = col.iter().map(|x| x.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 0.3, "{norm}");
        }
        let mean: f64 = w.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>() / 32.0;
        assert!((mean - 1.0).abs() < 0.05);
        let single: Vec<Vec<Cplx<f64>>> = sample_spreading(1, 1, &mut rng).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].len(), 1);
    }

    #[test]
    fn realization_shape_and_determinism() {
        let build = |seed| {
            let s = SeedStream::new(seed);
            let chans: Vec<MultipathChannel<f64>> = (0..32)
                .map(|k| MultipathChannel::sample(4, 1.0, &mut s.rng(&[k])).unwrap())
                .collect();
            build_realization(&chans, &vec![1.0; 32], 256, 1e-10, &mut s.rng(&[999])).unwrap()
        };
        let a = build(9);
        assert_eq!(a.alpha(), 0.125);
        assert_eq!(a, build(9));
        assert_ne!(a, build(10));
        let e = a.energies();
        assert!(e.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn realization_errors() {
        let mut rng = SeedStream::new(0).rng(&[]);
        let ch = MultipathChannel::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        assert!(build_realization(std::slice::from_ref(&ch), &[1.0, 1.0], 4, 1.0, &mut rng).is_err());
        assert!(build_realization(std::slice::from_ref(&ch), &[-1.0], 4, 1.0, &mut rng).is_err());
        assert!(build_realization(std::slice::from_ref(&ch), &[1.0], 4, 0.0, &mut rng).is_err());
        let one = build_realization(&[ch], &[1.0], 1, 1.0, &mut rng).unwrap();
        assert_eq!(one.num_users(), 1);
        assert_eq!(one.spreading_length(), 1);
    }
}
