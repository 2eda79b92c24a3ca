use crate::channel::MultipathChannel;
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Discretised two-dimensional channel profile `ρ(f, x) = P(x)|h(f, x)|²`.
///
/// The frequency axis `f ∈ [0, 1)` carries quadrature weights summing to 1;
/// the user axis `x ∈ [0, α]` is a sequence of cells whose masses sum to α.
/// A finite population of `K` users is `K` cells of mass `α/K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile<T> {
    alpha: T,
    sigma2: T,
    freq_weights: Vec<T>,
    user_weights: Vec<T>,
    power: Vec<T>,
    /// `gain[x][f] = |h(f, x)|²`
    gain: Vec<Vec<T>>,
}

impl<T: Real> ChannelProfile<T> {
    pub fn new(
        sigma2: T,
        freq_weights: Vec<T>,
        user_weights: Vec<T>,
        power: Vec<T>,
        gain: Vec<Vec<T>>,
    ) -> Result<Self> {
        if freq_weights.is_empty() {
            return Err(invalid("profile needs at least one frequency node"));
        }
        if freq_weights.iter().any(|w| !(*w > T::zero())) || user_weights.iter().any(|w| !(*w > T::zero())) {
            return Err(invalid("quadrature weights must be positive"));
        }
        let fsum: T = freq_weights.iter().copied().sum();
        if (fsum - T::one()).abs() > T::lit(1e3) * T::eps() {
            return Err(invalid(format!("frequency weights sum to {fsum}, expected 1")));
        }
        if power.len() != user_weights.len() || gain.len() != user_weights.len() {
            return Err(invalid("power and gain must have one entry per user node"));
        }
        if gain.iter().any(|g| g.len() != freq_weights.len()) {
            return Err(invalid("every gain row needs one entry per frequency node"));
        }
        if power.iter().chain(gain.iter().flatten()).any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(invalid("power and gain must be finite and nonnegative"));
        }
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
        }
        let alpha = user_weights.iter().copied().sum();
        Ok(Self {
            alpha,
            sigma2,
            freq_weights,
            user_weights,
            power,
            gain,
        })
    }

    /// Profile sampled from functions with `nf` uniform frequency nodes and
    /// `nx` midpoint cells on `[0, α]`.
    pub fn from_fn(
        alpha: T,
        sigma2: T,
        nf: usize,
        nx: usize,
        power: impl Fn(T) -> T,
        gain: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        if nf == 0 {
            return Err(invalid("need at least one frequency node"));
        }
        if !(alpha > T::zero()) {
            return Err(invalid("load must be positive"));
        }
        let (xs, wx) = midpoint_cells(alpha, nx)?;
        let fs: Vec<T> = (0..nf).map(|i| T::from_count(i) / T::from_count(nf)).collect();
        let wf = vec![T::one() / T::from_count(nf); nf];
        let p = xs.iter().map(|&x| power(x)).collect();
        let g = xs.iter().map(|&x| fs.iter().map(|&f| gain(f, x)).collect()).collect();
        Self::new(sigma2, wf, wx, p, g)
    }

    /// Frequency-flat profile (`|h|² ≡ 1`) with power density `power(x)`.
    pub fn flat(alpha: T, sigma2: T, nx: usize, power: impl Fn(T) -> T) -> Result<Self> {
        Self::from_fn(alpha, sigma2, 1, nx, power, |_, _| T::one())
    }

    /// One cell of mass `α/K` per user, with `|h(f)|²` sampled on `nf`
    /// uniform frequencies (exact for trigonometric integrands of degree
    /// below `nf`, i.e. whenever `2(L−1) < nf`).
    pub fn from_channels(
        channels: &[MultipathChannel<T>],
        powers: &[T],
        alpha: T,
        sigma2: T,
        nf: usize,
    ) -> Result<Self> {
        if channels.is_empty() || channels.len() != powers.len() {
            return Err(invalid("need one power per channel and at least one channel"));
        }
        if nf == 0 {
            return Err(invalid("need at least one frequency node"));
        }
        if !(alpha > T::zero()) {
            return Err(invalid("load must be positive"));
        }
        let k = channels.len();
        let wx = vec![alpha / T::from_count(k); k];
        let wf = vec![T::one() / T::from_count(nf); nf];
        let gain = channels
            .iter()
            .map(|c| (0..nf).map(|i| c.dft_gain_at(i, nf).norm_sqr()).collect())
            .collect();
        Self::new(sigma2, wf, wx, powers.to_vec(), gain)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn freq_weights(&self) -> &[T] {
        &self.freq_weights
    }

    pub fn user_weights(&self) -> &[T] {
        &self.user_weights
    }

    pub fn power(&self) -> &[T] {
        &self.power
    }

    pub fn gain(&self, x: usize) -> &[T] {
        &self.gain[x]
    }

    pub fn num_freq(&self) -> usize {
        self.freq_weights.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_weights.len()
    }

    /// `ρ(f_i, x_j)`.
    pub fn rho(&self, f: usize, x: usize) -> T {
        self.power[x] * self.gain[x][f]
    }

    /// `H(x) = ∫ |h(f, x)|² df`.
    pub fn mean_gain(&self, x: usize) -> T {
        self.gain[x].iter().zip(&self.freq_weights).map(|(g, w)| *g * *w).sum()
    }

    pub fn with_sigma2(&self, sigma2: T) -> Result<Self> {
        Self::new(
            sigma2,
            self.freq_weights.clone(),
            self.user_weights.clone(),
            self.power.clone(),
            self.gain.clone(),
        )
    }

    pub fn with_powers(&self, power: Vec<T>) -> Result<Self> {
        Self::new(
            self.sigma2,
            self.freq_weights.clone(),
            self.user_weights.clone(),
            power,
            self.gain.clone(),
        )
    }

    /// Splits every user cell into `m` equal cells with the same channel.
    pub fn refine_users(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("refinement factor must be positive"));
        }
        let split = T::from_count(m);
        let mut wx = Vec::with_capacity(self.num_users() * m);
        let mut p = Vec::with_capacity(wx.capacity());
        let mut g = Vec::with_capacity(wx.capacity());
        for x in 0..self.num_users() {
            for _ in 0..m {
                wx.push(self.user_weights[x] / split);
                p.push(self.power[x]);
                g.push(self.gain[x].clone());
            }
        }
        Self::new(self.sigma2, self.freq_weights.clone(), wx, p, g)
    }
}

/// Centres and masses of `n` equal cells partitioning `[0, α]`.
pub fn midpoint_cells<T: Real>(alpha: T, n: usize) -> Result<(Vec<T>, Vec<T>)> {
    if n == 0 {
        return Err(invalid("need at least one user cell"));
    }
    let w = alpha / T::from_count(n);
    let xs = (0..n).map(|j| (T::from_count(j) + T::lit(0.5)) * w).collect();
    Ok((xs, vec![w; n]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Cplx;

    #[test]
    fn weights_and_load() {
        let p: ChannelProfile<f64> = ChannelProfile::flat(0.75, 1.0, 10, |_| 1.0).unwrap();
        assert!((p.alpha() - 0.75).abs() < 1e-15);
        let s: f64 = p.freq_weights().iter().sum();
        assert_eq!(s, 1.0);
        assert_eq!(p.mean_gain(3), 1.0);
    }

    #[test]
    fn channel_atoms_use_parseval_energy() {
        let ch: MultipathChannel<f64> = MultipathChannel::new(vec![Cplx::new(1.0, 0.0), Cplx::new(0.0, 1.0)], 1.0).unwrap();
        let p = ChannelProfile::from_channels(&[ch.clone(), ch], &[1.0, 2.0], 0.5, 1.0, 16).unwrap();
        assert!((p.mean_gain(0) - 2.0).abs() < 1e-14);
        assert_eq!(p.rho(4, 1), 2.0 * p.gain(1)[4]);
        assert_eq!(p.user_weights(), &[0.25, 0.25]);
    }

    #[test]
    fn validation() {
        assert!(ChannelProfile::<f64>::new(1.0, vec![0.5, 0.4], vec![1.0], vec![1.0], vec![vec![1.0, 1.0]]).is_err());
        assert!(ChannelProfile::<f64>::new(0.0, vec![1.0], vec![1.0], vec![1.0], vec![vec![1.0]]).is_err());
        assert!(ChannelProfile::<f64>::new(1.0, vec![1.0], vec![1.0], vec![-1.0], vec![vec![1.0]]).is_err());
        assert!(ChannelProfile::<f64>::new(1.0, vec![1.0], vec![1.0, 1.0], vec![1.0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn refinement_preserves_mass() {
        let p: ChannelProfile<f64> = ChannelProfile::flat(0.5, 1.0, 4, |x| 1.0 + x).unwrap();
        let r = p.refine_users(3).unwrap();
        assert_eq!(r.num_users(), 12);
        assert!((r.alpha() - 0.5).abs() < 1e-15);
        assert_eq!(r.power()[5], p.power()[1]);
    }
}
