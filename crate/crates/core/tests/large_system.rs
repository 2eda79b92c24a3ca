//! Finite-N realizations against their large-system limits.

use cdma_nash::allocation::{pa_equilibrium, FilterKind};
use cdma_nash::asymptotics::{solve_beta_mmse, ChannelProfile};
use cdma_nash::channel::{sample_spreading, MultipathChannel, SystemRealization};
use cdma_nash::game::EquilibriumTarget;
use cdma_nash::receivers::{sinr_mf_all, sinr_mmse_exact_all, InterferenceRule};
use cdma_nash::rng::SeedStream;
use num_complex::Complex64;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cv(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt() / m
}

#[test]
fn two_class_flat_profile_matches_exact_mmse() {
    let (n, alpha, sigma2) = (512usize, 0.5, 0.5);
    let k = (alpha * n as f64) as usize;
    let profile = ChannelProfile::flat(alpha, sigma2, 2, |x| if x < alpha / 2.0 { 1.0 } else { 4.0 }).unwrap();
    let beta = solve_beta_mmse(&profile).unwrap();

    let mut weak = Vec::new();
    let mut strong = Vec::new();
    for trial in 0..4u64 {
        let mut rng = SeedStream::new(11).rng(&[trial]);
        let gains = vec![vec![Complex64::new(1.0, 0.0); n]; k];
        let codes = sample_spreading(n, k, &mut rng).unwrap();
        let powers = (0..k).map(|i| if i < k / 2 { 1.0 } else { 4.0 }).collect();
        let sys = SystemRealization::from_parts(gains, codes, powers, sigma2).unwrap();
        let s = sinr_mmse_exact_all(&sys, &InterferenceRule::Full).unwrap();
        weak.extend_from_slice(&s[..k / 2]);
        strong.extend_from_slice(&s[k / 2..]);
    }
    for (sim, theory) in [(mean(&weak), beta.values[0]), (mean(&strong), beta.values[1])] {
        assert!((sim / theory - 1.0).abs() < 0.03, "simulated {sim}, large-system {theory}");
    }
}

#[test]
fn equilibrium_sinr_spread_shrinks_with_system_size() {
    let target = EquilibriumTarget::fixed(6.4746).unwrap();
    let alpha = 0.125;
    let spread_at = |n: usize| {
        let k = (alpha * n as f64) as usize;
        let mut all = Vec::new();
        for trial in 0..8u64 {
            let mut rng = SeedStream::new(12).rng(&[n as u64, trial]);
            let chans: Vec<MultipathChannel<f64>> =
                (0..k).map(|_| MultipathChannel::sample(4, 1.0, &mut rng).unwrap()).collect();
            let gains: Vec<_> = chans.iter().map(|c| c.dft_gains(n).unwrap()).collect();
            let energies: Vec<f64> =
                gains.iter().map(|g| g.iter().map(|d| d.norm_sqr()).sum::<f64>() / n as f64).collect();
            let pa = pa_equilibrium(&energies, FilterKind::Mf, &target, alpha, 1.0).unwrap();
            let codes = sample_spreading(n, k, &mut rng).unwrap();
            let sys = SystemRealization::from_parts(gains, codes, pa.powers, 1.0).unwrap();
            all.extend(sinr_mf_all(&sys, &InterferenceRule::Full).unwrap());
        }
        ((mean(&all) / 6.4746 - 1.0).abs(), cv(&all))
    };
    let (bias_small, small) = spread_at(64);
    let (bias_large, large) = spread_at(256);
    assert!(bias_large < 0.05 && bias_large < bias_small, "bias {bias_small} at N=64, {bias_large} at N=256");
    // quadrupling N should roughly halve the spread
    assert!(large < 0.7 * small, "cv {small} at N=64, {large} at N=256");
}

#[test]
fn equilibrium_powers_harden_with_more_paths() {
    let target = EquilibriumTarget::fixed(6.4746).unwrap();
    let cvs: Vec<f64> = [1usize, 2, 4, 8, 16]
        .iter()
        .map(|&l| {
            let mut rng = SeedStream::new(13).rng(&[l as u64]);
            let energies: Vec<f64> = (0..4000)
                .map(|_| MultipathChannel::<f64>::sample(l, 1.0, &mut rng).unwrap().total_energy())
                .collect();
            let pa = pa_equilibrium(&energies, FilterKind::Mmse, &target, 0.125, 1.0).unwrap();
            cv(&pa.powers)
        })
        .collect();
    for w in cvs.windows(2) {
        assert!(w[1] < w[0], "power spread not decreasing in L: {cvs:?}");
    }
}
